"""Bell-state measurement model and the payoff tables of the signaling game.

Only ``|Φ+>`` and ``|Φ->`` are resolved (outcomes ``+`` and ``-``); every
other event is reported as ``0``. Imperfect two-photon interference swaps
the two resolved outcomes with probability ``lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import qcore
from .errors import InvalidArgument

OUTCOMES = ("+", "-", "0")
_OUTCOME_ALIASES = {"−": "-", "plus": "+", "minus": "-", "zero": "0"}

_h = Fraction(1, 2)

# rows: stored photon x, columns: reference photon y, both ordered (H, V, D, R)
W_PLUS = (
    (0, -_h, -_h, _h),
    (-_h, 0, -_h, _h),
    (-_h, -_h, 1, 0),
    (_h, _h, 0, -1),
)
W_MINUS = (
    (0, -_h, _h, -_h),
    (-_h, 0, _h, -_h),
    (_h, _h, -1, 0),
    (-_h, -_h, 0, 1),
)


def outcome_label(b) -> str:
    b = _OUTCOME_ALIASES.get(b, b)
    if b not in OUTCOMES:
        raise InvalidArgument(f"unknown BSM outcome {b!r}")
    return b


def _index(label: str) -> int:
    try:
        return qcore.STATE_LABELS.index(label)
    except ValueError:
        raise InvalidArgument(f"unknown state label {label!r}") from None


@dataclass(frozen=True)
class PayoffTable:
    w_plus: tuple = W_PLUS
    w_minus: tuple = W_MINUS

    def __call__(self, b, x, y) -> Fraction:
        b = outcome_label(b)
        i, j = _index(x), _index(y)
        if b == "+":
            return Fraction(self.w_plus[i][j])
        if b == "-":
            return Fraction(self.w_minus[i][j])
        return Fraction(0)

    def as_array(self) -> np.ndarray:
        """Float array of shape (4, 4, 3) indexed ``[x, y, b]``."""
        out = np.zeros((4, 4, 3))
        out[:, :, 0] = [[float(v) for v in row] for row in self.w_plus]
        out[:, :, 1] = [[float(v) for v in row] for row in self.w_minus]
        return out


PAYOFFS = PayoffTable()
PAYOFF_ARRAY = PAYOFFS.as_array()
PAYOFF_ARRAY.setflags(write=False)


def payoff(b, x, y) -> Fraction:
    """Exact payoff ``w^b_xy`` for outcome ``b`` on challenge pair ``(x, y)``."""
    return PAYOFFS(b, x, y)


@dataclass(frozen=True)
class BsmModel:
    lam: float
    s_plus: np.ndarray
    s_minus: np.ndarray
    s_zero: np.ndarray

    @property
    def elements(self):
        return (self.s_plus, self.s_minus, self.s_zero)


def bsm_povm(lam: float = 0.0) -> BsmModel:
    """POVM ``S± = (1-λ)|Φ±><Φ±| + λ|Φ∓><Φ∓|``, ``S0 = I - S+ - S-``."""
    if not 0.0 <= lam <= 0.5:
        raise InvalidArgument(f"lambda must lie in [0, 1/2], got {lam}")
    pp = qcore.bell_state("Phi+")
    pm = qcore.bell_state("Phi-")
    s_plus = (1 - lam) * pp + lam * pm
    s_minus = (1 - lam) * pm + lam * pp
    # λ cancels: I - |Φ+><Φ+| - |Φ-><Φ-|
    s_zero = np.eye(4, dtype=complex) - pp - pm
    for s in (s_plus, s_minus, s_zero):
        s.setflags(write=False)
    return BsmModel(float(lam), s_plus, s_minus, s_zero)


def lambda_from_visibility(v: float) -> float:
    """Misidentification probability from interference visibility, ``(1 - V²)/2``."""
    if not 0.0 <= v <= 1.0:
        raise InvalidArgument(f"visibility must lie in [0, 1], got {v}")
    return (1 - v * v) / 2


def visibility_from_overlap(alpha: float) -> float:
    """Interference visibility for a retrieved mode ``α a† + β ã†``; equals ``α``."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidArgument(f"mode overlap must lie in [0, 1], got {alpha}")
    # fringe extremes (1 ± α)² + β² give a contrast of exactly α
    return float(alpha)


def beta_squared(alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise InvalidArgument(f"mode overlap must lie in [0, 1], got {alpha}")
    return 1 - alpha * alpha


def overlap_from_visibility(v: float) -> float:
    if not 0.0 <= v <= 1.0:
        raise InvalidArgument(f"visibility must lie in [0, 1], got {v}")
    return v


def lambda_from_overlap(alpha: float) -> float:
    return beta_squared(alpha) / 2


def visibility_from_lambda(lam: float) -> float:
    if not 0.0 <= lam <= 0.5:
        raise InvalidArgument(f"lambda must lie in [0, 1/2], got {lam}")
    return math.sqrt(1 - 2 * lam)

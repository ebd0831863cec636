"""The semi-quantum signaling game.

Alice draws a challenge pair ``(x, y)`` from ``{H, V, D, R}²``, sends
``ξ_x`` through the memory and ``ψ_y`` directly, and Bob answers with a
BSM outcome ``b``. The average payoff

    <W> = Σ_xy Σ_b P(b|x,y) w^b_xy

is positive only if the memory preserves entanglement.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import channels, kernels, qcore
from .bsm import OUTCOMES, PAYOFF_ARRAY, BsmModel, outcome_label
from .errors import InsufficientData, InvalidArgument, ParseError

LABELS = qcore.STATE_LABELS
_PREPARED = np.array([qcore.prepared_state(s) for s in LABELS])
_SNAP = 1e-14


def outcome_table(channel: channels.Channel, bsm: BsmModel) -> np.ndarray:
    """Born-rule probabilities ``P(b|x,y)`` as an array indexed ``[x, y, b]``."""
    stored = np.array([channels.apply(channel, rho) for rho in _PREPARED])
    # rho_xy = N(ξ_x) ⊗ ψ_y, indices (x, y, i1, i2, j1, j2)
    rho = np.einsum("xac,ybd->xyabcd", stored, _PREPARED).reshape(4, 4, 4, 4)
    povm = np.array(bsm.elements)
    return np.einsum("bji,xyij->xyb", povm, rho).real


def outcome_distribution(channel, bsm, x, y) -> tuple[float, float, float]:
    """``(P(+), P(-), P(0))`` for one challenge pair."""
    rho = np.kron(channels.apply(channel, qcore.prepared_state(x)), qcore.prepared_state(y))
    return tuple(float(np.trace(s @ rho).real) for s in bsm.elements)


def exact_witness(channel: channels.Channel, bsm: BsmModel) -> float:
    """Infinite-statistics witness value for ``channel`` under ``bsm``."""
    return float(np.sum(outcome_table(channel, bsm) * PAYOFF_ARRAY))


@dataclass
class WitnessResult:
    value: float
    std_error: float
    rounds_used: int
    method: str = "delta"

    def to_document(self) -> dict:
        return {"value": self.value, "std_error": self.std_error, "rounds_used": self.rounds_used}

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=2, sort_keys=True) + "\n"


@dataclass
class Tally:
    """Counts ``N(b|x,y)`` stored as an int array indexed ``[x, y, b]``."""

    counts: np.ndarray
    rounds_attempted: int
    seed: int | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (4, 4, 3):
            raise InvalidArgument(f"tally counts must have shape (4, 4, 3), got {self.counts.shape}")
        if (self.counts < 0).any():
            raise InvalidArgument("tally counts must be nonnegative")
        if self.counts.sum() > self.rounds_attempted:
            raise InvalidArgument("tally holds more counts than attempted rounds")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def count(self, b, x, y) -> int:
        return int(self.counts[LABELS.index(x), LABELS.index(y), OUTCOMES.index(outcome_label(b))])

    def __add__(self, other: "Tally") -> "Tally":
        return Tally(self.counts + other.counts, self.rounds_attempted + other.rounds_attempted,
                     self.seed, dict(self.metadata))


def _cdf(table: np.ndarray) -> np.ndarray:
    p = np.clip(table.reshape(16, 3), 0.0, None)
    p[p < _SNAP] = 0.0
    p /= p.sum(axis=1, keepdims=True)
    cdf = np.empty((16, 2))
    cdf[:, 0] = p[:, 0]
    cdf[:, 1] = p[:, 0] + p[:, 1]
    cdf[p[:, 2] == 0.0, 1] = 1.0
    cdf[(p[:, 1] == 0.0) & (p[:, 2] == 0.0), 0] = 1.0
    return cdf


def simulate_rounds(channel: channels.Channel, bsm: BsmModel, n: int, seed: int,
                    detection_efficiency: float | None = None, workers: int = 1) -> Tally:
    """Play ``n`` seeded rounds of the game against ``channel``.

    ``detection_efficiency`` is a per-photon survival probability; a round is
    tallied only when both photons survive. The output is independent of
    ``workers``.
    """
    if n < 1:
        raise InvalidArgument("number of rounds must be at least 1")
    keep = 1.0
    if detection_efficiency is not None:
        if not 0.0 < detection_efficiency <= 1.0:
            raise InvalidArgument("detection efficiency must lie in (0, 1]")
        keep = detection_efficiency ** 2
    key = kernels.stream_key(seed, kernels.STREAM_GAME)
    counts, _ = kernels.play_rounds(key, n, _cdf(outcome_table(channel, bsm)), keep, workers)
    meta = {"channel": channel.name, "lambda": bsm.lam}
    if detection_efficiency is not None:
        meta["detection_efficiency"] = detection_efficiency
    return Tally(counts.reshape(4, 4, 3), n, seed, meta)


def expected_tally(channel, bsm, rounds_per_cell: int) -> Tally:
    """Tally with counts equal to rounded expected values (no sampling noise)."""
    counts = np.rint(outcome_table(channel, bsm) * rounds_per_cell).astype(np.int64)
    return Tally(counts, int(counts.sum()), None, {"channel": channel.name, "lambda": bsm.lam})


def _cell_totals(t: Tally) -> np.ndarray:
    n = t.counts.sum(axis=2)
    if (n == 0).any():
        i, j = map(int, np.argwhere(n == 0)[0])
        cell = (LABELS[i], LABELS[j])
        raise InsufficientData(f"no detected events for challenge cell ({cell[0]},{cell[1]})", cell=cell)
    return n


def witness_estimate(t: Tally, method: str = "delta", resamples: int = 1000,
                     seed: int | None = None) -> WitnessResult:
    """Estimate ``<W>`` from a tally.

    Each cell is normalized over its own detected events. ``method="delta"``
    propagates the per-cell multinomial variance; ``method="bootstrap"``
    resamples each cell ``resamples`` times.
    """
    n = _cell_totals(t)
    p = t.counts / n[:, :, None]
    per_cell = np.sum(p * PAYOFF_ARRAY, axis=2)
    value = float(per_cell.sum())
    if method == "delta":
        second = np.sum(p * PAYOFF_ARRAY ** 2, axis=2)
        var = float(np.sum((second - per_cell ** 2) / n))
        std = math.sqrt(max(var, 0.0))
    elif method == "bootstrap":
        bseed = t.seed if seed is None else seed
        key = kernels.stream_key(0 if bseed is None else bseed, kernels.STREAM_BOOTSTRAP)
        rng = np.random.Generator(np.random.Philox(key))
        draws = np.zeros(resamples)
        for i in range(4):
            for j in range(4):
                sample = rng.multinomial(n[i, j], p[i, j], size=resamples) / n[i, j]
                draws += sample @ PAYOFF_ARRAY[i, j]
        std = float(draws.std(ddof=1))
    else:
        raise InvalidArgument(f"unknown error method {method!r}")
    return WitnessResult(value, std, t.total, method)


# -- file formats ------------------------------------------------------------

TALLY_HEADER = ["x", "y", "b", "count"]


def tally_to_csv(t: Tally) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TALLY_HEADER)
    for i, x in enumerate(LABELS):
        for j, y in enumerate(LABELS):
            for k, b in enumerate(OUTCOMES):
                if t.counts[i, j, k]:
                    w.writerow([x, y, b, int(t.counts[i, j, k])])
    return buf.getvalue()


def tally_from_csv(text: str, rounds_attempted: int | None = None) -> Tally:
    counts = np.zeros((4, 4, 3), dtype=np.int64)
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != TALLY_HEADER:
        raise ParseError(f"expected header {','.join(TALLY_HEADER)}", line=1)
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", line=lineno)
        x, y, b, c = (f.strip() for f in row)
        try:
            i, j = LABELS.index(x), LABELS.index(y)
            k = OUTCOMES.index(outcome_label(b))
            c = int(c)
        except (ValueError, InvalidArgument):
            raise ParseError(f"malformed row {','.join(row)!r}", line=lineno) from None
        if c < 0:
            raise ParseError("negative count", line=lineno)
        counts[i, j, k] += c
    total = int(counts.sum())
    return Tally(counts, total if rounds_attempted is None else max(rounds_attempted, total))


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_tally(path, t: Tally, result: WitnessResult | None = None) -> None:
    Path(path).write_text(tally_to_csv(t))
    meta = {"seed": t.seed, "rounds_attempted": t.rounds_attempted, **t.metadata}
    if result is not None:
        meta["result"] = result.to_document()
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_tally(path) -> Tally:
    path = Path(path)
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
    t = tally_from_csv(path.read_text(), meta.get("rounds_attempted"))
    t.seed = meta.get("seed")
    t.metadata = {k: v for k, v in meta.items() if k not in ("seed", "rounds_attempted")}
    return t

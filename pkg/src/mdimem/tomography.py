"""Process tomography and a faked-state adversary that defeats it.

The verifier prepares each of ``H, V, D, R``, sends it through the device
and measures in ``X``, ``Y`` or ``Z``. The adversary measures the input at
once in a basis of his own, learns the verifier's basis (after or before
his measurement) and forces her detector to show his result when the bases
agree, or nothing otherwise. Tomography then sees a perfect memory with
reduced efficiency. Against the MDI game the same adversary is a
measure-and-prepare channel, which cannot score a positive witness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import channels, game, kernels, qcore
from .bsm import bsm_povm
from .errors import InsufficientData, InvalidArgument, ParseError

INPUTS = qcore.STATE_LABELS
BASES = ("X", "Y", "Z")
LEAK_MODES = ("after", "before")

_BASIS_OPS = (qcore.SIGMA_X, qcore.SIGMA_Y, qcore.SIGMA_Z)
_PLUS_PROJ = np.array([qcore.projector(channels.PAULI_BASES[b][0]) for b in BASES])
_INPUT_STATES = np.array([qcore.prepared_state(s) for s in INPUTS])

# superoperator basis kron(E_m, conj(E_n)) for vec(E_m ρ E_n^†), row-major vec
_CHI_SUPEROPS = np.array([[np.kron(em, en.conj()) for en in channels.CHI_BASIS]
                          for em in channels.CHI_BASIS]).reshape(16, 16).T
_INPUT_VECS = _INPUT_STATES.reshape(4, 4).T


@dataclass
class TomographyRecord:
    """Outcome counts ``counts[input, basis] = (n_plus, n_minus)``."""

    counts: np.ndarray
    shots: int
    seed: int | None = None
    source: str = ""

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (4, 3, 2):
            raise InvalidArgument(f"tomography counts must have shape (4, 3, 2), got {self.counts.shape}")
        if (self.counts.sum(axis=2) > self.shots).any():
            raise InvalidArgument("a setting holds more outcomes than shots")

    @property
    def recorded(self) -> int:
        return int(self.counts.sum())

    def to_document(self) -> dict:
        return {
            "shots": self.shots,
            "seed": self.seed,
            "source": self.source,
            "counts": {s: {b: [int(v) for v in self.counts[i, j]] for j, b in enumerate(BASES)}
                       for i, s in enumerate(INPUTS)},
        }

    @classmethod
    def from_document(cls, doc: dict) -> "TomographyRecord":
        try:
            counts = [[doc["counts"][s][b] for b in BASES] for s in INPUTS]
            return cls(np.array(counts), int(doc["shots"]), doc.get("seed"), doc.get("source", ""))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed tomography record: {exc}") from None


def plus_probabilities(channel: channels.Channel) -> np.ndarray:
    """``P(+1)`` for every (input, basis) setting, shape (4, 3)."""
    out = np.array([channels.apply(channel, rho) for rho in _INPUT_STATES])
    return np.einsum("bji,sij->sb", _PLUS_PROJ, out).real.clip(0.0, 1.0)


def pauli_expectations(channel: channels.Channel) -> np.ndarray:
    return 2 * plus_probabilities(channel) - 1


def run_tomography(channel: channels.Channel, shots: int, seed: int) -> TomographyRecord:
    """Sample ``shots`` single-photon outcomes for each of the 12 settings."""
    if shots < 1:
        raise InvalidArgument("shots must be at least 1")
    key = kernels.stream_key(seed, kernels.STREAM_TOMOGRAPHY)
    probs = plus_probabilities(channel)
    counts = np.zeros((4, 3, 2), dtype=np.int64)
    for i in range(4):
        for j in range(3):
            s = 3 * i + j
            n_plus = kernels.count_below(key, s * shots, shots, probs[i, j])
            counts[i, j] = (n_plus, shots - n_plus)
    return TomographyRecord(counts, shots, seed, channel.name)


def expectations_from_record(rec: TomographyRecord) -> np.ndarray:
    n = rec.counts.sum(axis=2)
    if (n == 0).any():
        i, j = map(int, np.argwhere(n == 0)[0])
        raise InsufficientData(f"no outcomes for input {INPUTS[i]} in basis {BASES[j]}",
                               cell=(INPUTS[i], BASES[j]))
    return (rec.counts[..., 0] - rec.counts[..., 1]) / n


def chi_from_expectations(expectations) -> np.ndarray:
    """Linear inversion from Pauli expectations of the four output states."""
    e = np.asarray(expectations, dtype=float)
    outputs = 0.5 * (qcore.I2 + np.einsum("sb,bij->sij", e, np.array(_BASIS_OPS)))
    superop = outputs.reshape(4, 4).T @ np.linalg.inv(_INPUT_VECS)
    chi = np.linalg.solve(_CHI_SUPEROPS, superop.reshape(16))
    return chi.reshape(4, 4)


def reconstruct_chi(rec: TomographyRecord) -> np.ndarray:
    return chi_from_expectations(expectations_from_record(rec))


def process_fidelity(chi, target=None) -> float:
    """Overlap of a (trace-normalized) process matrix with a pure target process.

    The default target is the identity process.
    """
    chi = np.asarray(chi)
    tr = np.trace(chi).real
    if target is None:
        return float(chi[0, 0].real / tr)
    target = np.asarray(target)
    return float(np.trace(chi @ target).real / (tr * np.trace(target).real))


class FakedStateAdversary:
    """Round-by-round faked-state attacker.

    Call :meth:`intercept` when the qubit enters the device and
    :meth:`respond` when the verifier measures. ``leak="before"`` means the
    verifier's basis is known before the adversary measures.
    """

    def __init__(self, leak: str = "after", seed: int = 0):
        if leak not in LEAK_MODES:
            raise InvalidArgument(f"leak must be one of {LEAK_MODES}, got {leak!r}")
        self.leak = leak
        self.seed = seed
        self.key = kernels.stream_key(seed, kernels.STREAM_ADVERSARY)
        self.round = 0
        self._basis = None
        self._result = None

    def _draws(self, start_round, count):
        return kernels.uniforms(self.key, 4 * start_round, 4 * count).reshape(count, 4)

    def intercept(self, rho, verifier_basis: str | None = None) -> None:
        u = self._draws(self.round, 1)[0]
        if self.leak == "before":
            if verifier_basis not in BASES:
                raise InvalidArgument("leak='before' needs the verifier's basis at interception")
            j = BASES.index(verifier_basis)
        else:
            j = int(u[0] * 3)
        p_plus = float(np.trace(_PLUS_PROJ[j] @ np.asarray(rho)).real)
        self._basis = BASES[j]
        self._result = 1 if u[1] < p_plus else -1

    def respond(self, verifier_basis: str):
        """Forced detector reading: the stored result or ``None`` (no click)."""
        if self._basis is None:
            raise InvalidArgument("respond() called before intercept()")
        out = self._result if self._basis == verifier_basis else None
        self._basis = self._result = None
        self.round += 1
        return out

    def play_batch(self, rho, verifier_basis: str, count: int) -> tuple[int, int, int]:
        """Vectorized :meth:`intercept`/:meth:`respond` over ``count`` rounds.

        Returns ``(n_plus, n_minus, n_silent)``.
        """
        j = BASES.index(verifier_basis)
        u = self._draws(self.round, count)
        own = np.full(count, j) if self.leak == "before" else (u[:, 0] * 3).astype(int)
        p_plus = np.einsum("bji,ij->b", _PLUS_PROJ, np.asarray(rho)).real
        plus = u[:, 1] < p_plus[own]
        shown = own == j
        self.round += count
        n_plus = int(np.count_nonzero(shown & plus))
        n_shown = int(np.count_nonzero(shown))
        return n_plus, n_shown - n_plus, count - n_shown


def run_tomography_against(adversary: FakedStateAdversary, shots: int) -> TomographyRecord:
    """Tomography where the device under test is ``adversary``; silent rounds are dropped."""
    if shots < 1:
        raise InvalidArgument("shots must be at least 1")
    counts = np.zeros((4, 3, 2), dtype=np.int64)
    for i in range(4):
        for j, b in enumerate(BASES):
            n_plus, n_minus, _ = adversary.play_batch(_INPUT_STATES[i], b, shots)
            counts[i, j] = (n_plus, n_minus)
    return TomographyRecord(counts, shots, adversary.seed, f"faked-state adversary (leak={adversary.leak})")


@dataclass
class AttackReport:
    reported_fidelity: float
    reported_fidelity_psd: float
    apparent_efficiency: float
    apparent_efficiency_stderr: float
    mdi_witness: game.WitnessResult
    mdi_exact_witness: float
    leak: str
    shots: int
    rounds: int
    seed: int
    chi: np.ndarray = field(repr=False, default=None)

    def to_document(self) -> dict:
        return {
            "leak": self.leak,
            "shots": self.shots,
            "rounds": self.rounds,
            "seed": self.seed,
            "tomography": {
                "reported_fidelity": self.reported_fidelity,
                "reported_fidelity_psd": self.reported_fidelity_psd,
                "apparent_efficiency": self.apparent_efficiency,
                "apparent_efficiency_stderr": self.apparent_efficiency_stderr,
            },
            "mdi": {
                "channel": "intercept(X+Y+Z)",
                "model": "adversary holds only classical data between the two photons, "
                         "so it acts as its induced measure-and-prepare channel",
                "witness": self.mdi_witness.to_document(),
                "exact_witness": self.mdi_exact_witness,
            },
            "spoof_detected_by_tomography": self.reported_fidelity < 0.99,
            "certified_by_mdi": self.mdi_witness.value > 3 * self.mdi_witness.std_error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=2, sort_keys=True) + "\n"


def run_attack_comparison(shots: int, rounds: int, seed: int, leak: str = "after",
                          lam: float = 0.0, workers: int = 1) -> AttackReport:
    """Run the same adversary through tomography and through the MDI game."""
    if shots < 1 or rounds < 1:
        raise InvalidArgument("shots and rounds must be at least 1")
    adversary = FakedStateAdversary(leak, seed)
    rec = run_tomography_against(adversary, shots)
    chi = reconstruct_chi(rec)
    total = 12 * shots
    eff = rec.recorded / total

    induced = channels.intercept_resend(BASES)
    povm = bsm_povm(lam)
    tally = game.simulate_rounds(induced, povm, rounds, seed, workers=workers)
    return AttackReport(
        reported_fidelity=process_fidelity(chi),
        reported_fidelity_psd=process_fidelity(channels.project_psd(chi)),
        apparent_efficiency=eff,
        apparent_efficiency_stderr=float(np.sqrt(eff * (1 - eff) / total)),
        mdi_witness=game.witness_estimate(tally),
        mdi_exact_witness=game.exact_witness(induced, povm),
        leak=leak,
        shots=shots,
        rounds=rounds,
        seed=seed,
        chi=chi,
    )

"""Single-qubit channels: Kraus and process-matrix forms, memory models,
and the entanglement-breaking test.

The process-matrix (chi) basis is fixed to ``(I, X, -iY, Z)``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import qcore
from .errors import InvalidArgument, InvalidChi, InvalidState, ParseError

CHI_BASIS = (qcore.I2, qcore.SIGMA_X, -1j * qcore.SIGMA_Y, qcore.SIGMA_Z)
CHI_BASIS_LABELS = ("I", "X", "-iY", "Z")

EPS_TP = 1e-10
EPS_CHI_COMPLETENESS = 1e-6
EPS_CHI_PSD = 1e-6
EPS_EB = 1e-10

PHI_PLUS = qcore.bell_state("Phi+")

# Orthonormal measurement bases, first vector is the +1 outcome.
PAULI_BASES = {
    "X": (qcore.ket("D"), np.array([1, -1], dtype=complex) / math.sqrt(2)),
    "Y": (qcore.ket("R"), np.array([1, -1j], dtype=complex) / math.sqrt(2)),
    "Z": (qcore.ket("H"), qcore.ket("V")),
}


def _readonly(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Channel:
    """A completely positive trace-preserving map on one qubit.

    Exactly one of ``kraus`` or ``chi`` is set. Construct through the
    factory functions in this module, which validate the invariants.
    """

    name: str
    kraus: tuple | None = None
    chi: np.ndarray | None = field(default=None, repr=False)
    renormalize: bool = False

    @property
    def form(self) -> str:
        return "kraus" if self.kraus is not None else "chi"

    def __call__(self, rho):
        return apply(self, rho)


def _kraus_channel(name, ops):
    ops = tuple(_readonly(k) for k in ops)
    for k in ops:
        if k.shape != (2, 2):
            raise InvalidArgument("Kraus operators must be 2x2")
    completeness = sum(k.conj().T @ k for k in ops)
    err = np.abs(completeness - qcore.I2).max()
    if err > EPS_TP:
        raise InvalidState(f"Kraus set is not trace preserving (deviation {err:.3e})")
    return Channel(name=name, kraus=ops)


def kraus_channel(ops, name: str = "kraus") -> Channel:
    return _kraus_channel(name, ops)


def identity() -> Channel:
    return _kraus_channel("identity", [qcore.I2])


def unitary(u, name: str = "unitary") -> Channel:
    return _kraus_channel(name, [u])


def depolarizing(p: float) -> Channel:
    """``rho -> (1 - p) rho + p I/2``."""
    if not 0.0 <= p <= 1.0:
        raise InvalidArgument(f"depolarizing strength must lie in [0, 1], got {p}")
    weights = (1 - 3 * p / 4, p / 4, p / 4, p / 4)
    ops = [math.sqrt(w) * s for w, s in zip(weights, qcore.PAULIS)]
    return _kraus_channel(f"depolarizing({p:g})", ops)


def pauli_channel(weights, name: str = "pauli") -> Channel:
    """Mixture of I, X, Y, Z conjugations with the given probabilities."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (4,) or (weights < 0).any() or abs(weights.sum() - 1) > 1e-12:
        raise InvalidArgument("Pauli weights must be four probabilities summing to 1")
    ops = [math.sqrt(w) * s for w, s in zip(weights, qcore.PAULIS)]
    return _kraus_channel(name, ops)


def dephasing(q: float) -> Channel:
    """Z-dephasing: ``rho -> (1 - q) rho + q Z rho Z``."""
    if not 0.0 <= q <= 1.0:
        raise InvalidArgument(f"dephasing weight must lie in [0, 1], got {q}")
    return pauli_channel([1 - q, 0, 0, q], name=f"dephasing({q:g})")


def _check_basis(vectors):
    vs = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
    if len(vs) != 2 or any(v.shape != (2,) for v in vs):
        raise InvalidArgument("a qubit basis needs exactly two 2-vectors")
    gram = np.array([[np.vdot(a, b) for b in vs] for a in vs])
    if np.abs(gram - np.eye(2)).max() > 1e-10:
        raise InvalidArgument("basis vectors are not orthonormal")
    return vs


def intercept_resend(bases, weights=None) -> Channel:
    """Measure-and-prepare channel.

    With probability ``weights[k]`` the qubit is measured in ``bases[k]`` and
    the observed basis vector is re-prepared. ``bases`` entries may be the
    labels ``"X"``, ``"Y"``, ``"Z"`` or pairs of orthonormal vectors.
    """
    bases = list(bases)
    if not bases:
        raise InvalidArgument("at least one basis is required")
    if weights is None:
        weights = [1 / len(bases)] * len(bases)
    weights = [float(w) for w in weights]
    if len(weights) != len(bases) or min(weights) < 0 or abs(sum(weights) - 1) > 1e-10:
        raise InvalidArgument("weights must be probabilities matching the bases")
    names = []
    ops = []
    for b, w in zip(bases, weights):
        if isinstance(b, str):
            if b not in PAULI_BASES:
                raise InvalidArgument(f"unknown basis label {b!r}")
            names.append(b)
            vs = PAULI_BASES[b]
        else:
            names.append("custom")
            vs = _check_basis(b)
        # Kraus operators sqrt(w) |i><i|
        ops.extend(math.sqrt(w) * qcore.projector(v) for v in vs)
    return _kraus_channel("intercept(" + "+".join(names) + ")", ops)


def _apply_chi(chi, rho):
    out = np.zeros((2, 2), dtype=complex)
    for m, em in enumerate(CHI_BASIS):
        for n, en in enumerate(CHI_BASIS):
            if chi[m, n] != 0:
                out += chi[m, n] * (em @ rho @ en.conj().T)
    return out


def apply(channel: Channel, rho) -> np.ndarray:
    """Image of a single-qubit operator under ``channel``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise InvalidArgument(f"input must be 2x2, got {rho.shape}")
    if channel.kraus is not None:
        return sum(k @ rho @ k.conj().T for k in channel.kraus)
    if channel.chi is None:
        raise InvalidState("channel carries neither Kraus operators nor chi")
    out = _apply_chi(channel.chi, rho)
    if channel.renormalize:
        # only inputs carrying trace are rescaled; keeps traceless blocks linear
        tin, tout = np.trace(rho), np.trace(out)
        if abs(tin) > 1e-15 and abs(tout) > 1e-15:
            out = out * (tin / tout)
    return out


def apply_on_first(channel: Channel, rho2) -> np.ndarray:
    """``(N ⊗ I) rho2`` for a two-qubit operator."""
    rho2 = np.asarray(rho2, dtype=complex)
    if rho2.shape != (4, 4):
        raise InvalidArgument("expected a 4x4 operator")
    t = rho2.reshape(2, 2, 2, 2)
    out = np.zeros_like(t)
    # act on the (i1, j1) indices blockwise
    for a in range(2):
        for b in range(2):
            out[:, a, :, b] = apply(channel, t[:, a, :, b])
    return out.reshape(4, 4)


def choi(channel: Channel) -> np.ndarray:
    """Choi state ``(N ⊗ I)|Φ+><Φ+|``."""
    j = apply_on_first(channel, PHI_PLUS)
    if channel.renormalize:
        j = j / np.trace(j).real
    return j


def chi_matrix(channel: Channel) -> np.ndarray:
    """Process matrix of ``channel`` in the ``(I, X, -iY, Z)`` basis."""
    if channel.chi is not None:
        return np.array(channel.chi)
    # K = sum_m c_m E_m with c_m = Tr(E_m^† K)/2
    coeffs = np.array([[np.trace(e.conj().T @ k) / 2 for e in CHI_BASIS] for k in channel.kraus])
    return coeffs.T @ coeffs.conj()


def chi_completeness(chi) -> np.ndarray:
    """``sum_mn chi_mn E_n^† E_m``; the identity for a trace-preserving process."""
    chi = np.asarray(chi)
    return sum(chi[m, n] * (CHI_BASIS[n].conj().T @ CHI_BASIS[m])
               for m in range(4) for n in range(4))


def project_psd(chi) -> np.ndarray:
    """Nearest PSD matrix with unit trace (clip negative eigenvalues)."""
    chi = np.asarray(chi, dtype=complex)
    herm = (chi + chi.conj().T) / 2
    w, v = qcore.hermitian_eigh(herm)
    w = np.clip(w, 0, None)
    out = (v * w) @ v.conj().T
    tr = np.trace(out).real
    if tr <= 0:
        raise InvalidChi("process matrix has no positive part", min_eigenvalue=float(w.min()))
    return out / tr


# chi -> Choi change of basis: columns are row-major vec(E_m)/sqrt(2), a unitary
_CHI_TO_CHOI = np.array([e.reshape(4) for e in CHI_BASIS]).T / np.sqrt(2)


def project_cptp(chi, tol: float = 1e-12, max_iter: int = 10000) -> np.ndarray:
    """Nearest completely positive, trace-preserving process matrix.

    Dykstra alternating projections on the Choi matrix between the PSD cone
    and the affine set ``Tr_out J = I/2``. The result is trace preserving to
    rounding and PSD within ``tol``.
    """
    b = _CHI_TO_CHOI
    chi = np.asarray(chi, dtype=complex)
    x = b @ ((chi + chi.conj().T) / 2) @ b.conj().T
    p = np.zeros_like(x)
    half = qcore.I2 / 2
    for _ in range(max_iter):
        w, v = qcore.hermitian_eigh(x + p)
        y = (v * np.clip(w, 0, None)) @ v.conj().T
        p = x + p - y
        x = y - np.kron(half, qcore.partial_trace(y, 2) - half)
        if qcore.min_eigenvalue(x) >= -tol:
            break
    else:
        raise InvalidChi("CPTP projection did not converge", min_eigenvalue=qcore.min_eigenvalue(x))
    return b.conj().T @ x @ b


def from_chi(chi, name: str = "chi", psd_tol: float = EPS_CHI_PSD,
             completeness_tol: float = EPS_CHI_COMPLETENESS) -> Channel:
    """Build a channel from a 4x4 process matrix.

    Matrices that are physical only within ``psd_tol`` / ``completeness_tol``
    (as produced by linear-inversion tomography) are projected onto the PSD
    cone with unit trace, a warning is emitted, and the outputs are
    renormalized to unit trace on application.
    """
    chi = np.array(chi, dtype=complex)
    if chi.shape != (4, 4):
        raise InvalidArgument(f"chi must be 4x4, got {chi.shape}")
    if not qcore.is_hermitian(chi, max(qcore.EPS_HERM, psd_tol)):
        raise InvalidChi("chi is not Hermitian")
    chi = (chi + chi.conj().T) / 2
    lo = qcore.min_eigenvalue(chi)
    if lo < -psd_tol:
        raise InvalidChi(f"chi is not positive semidefinite (min eigenvalue {lo:.3e})",
                         min_eigenvalue=lo)
    dev = float(np.abs(chi_completeness(chi) - qcore.I2).max())
    if dev > completeness_tol:
        raise InvalidChi(f"chi violates trace preservation (deviation {dev:.3e})",
                         min_eigenvalue=lo)
    if lo < -qcore.EPS_PSD or dev > EPS_TP:
        warnings.warn(f"chi is unphysical within tolerance (min eigenvalue {lo:.3e}, "
                      f"completeness deviation {dev:.3e}); projecting to PSD", stacklevel=2)
        return Channel(name=name, chi=_readonly(project_psd(chi)), renormalize=True)
    return Channel(name=name, chi=_readonly(chi))


def is_entanglement_breaking(channel: Channel) -> tuple[bool, float]:
    """PPT test on the Choi state; exact for qubit channels.

    Returns ``(breaking, margin)`` where ``margin`` is the minimum eigenvalue
    of the partially transposed Choi state.
    """
    margin = qcore.min_eigenvalue(qcore.partial_transpose(choi(channel), 2))
    return margin >= -EPS_EB, margin


# -- chi file format ---------------------------------------------------------

def chi_to_document(chi, storage_time_us: float | None = None, **metadata) -> dict:
    chi = np.asarray(chi, dtype=complex)
    doc = {
        "basis": list(CHI_BASIS_LABELS),
        "chi": [[[float(z.real), float(z.imag)] for z in row] for row in chi],
    }
    if storage_time_us is not None:
        doc["storage_time_us"] = float(storage_time_us)
    if metadata:
        doc["metadata"] = metadata
    return doc


def write_chi(path, chi, storage_time_us: float | None = None, **metadata) -> None:
    doc = chi_to_document(chi, storage_time_us, **metadata)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def chi_from_document(doc) -> tuple[np.ndarray, float | None]:
    if not isinstance(doc, dict) or "chi" not in doc:
        raise ParseError("chi document needs a 'chi' field")
    basis = doc.get("basis", list(CHI_BASIS_LABELS))
    if list(basis) != list(CHI_BASIS_LABELS):
        raise ParseError(f"chi basis must be {list(CHI_BASIS_LABELS)}, got {basis}")
    try:
        arr = np.array(doc["chi"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"chi entries are not numeric: {exc}") from None
    if arr.shape != (4, 4, 2):
        raise ParseError(f"chi must be a 4x4 array of [re, im] pairs, got shape {arr.shape}")
    t = doc.get("storage_time_us")
    return arr[..., 0] + 1j * arr[..., 1], (None if t is None else float(t))


def read_chi(path) -> tuple[np.ndarray, float | None]:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc.msg), line=exc.lineno) from None
    return chi_from_document(doc)

"""Dense complex linear algebra for one- and two-qubit operators.

Conventions used everywhere in the package:

* single-qubit basis ordering is ``(H, V)``;
* two-qubit ordering is ``(HH, HV, VH, VV)``;
* qubit 1 (the first tensor factor) is always the photon that passes
  through the memory, qubit 2 is the reference photon.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidArgument, InvalidState

EPS_HERM = 1e-10
EPS_EIG = 1e-13
EPS_TRACE = 1e-12
EPS_PSD = 1e-10

_SQ = 1 / math.sqrt(2)

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SIGMA_X, SIGMA_Y, SIGMA_Z)

STATE_LABELS = ("H", "V", "D", "R")
BELL_LABELS = ("Phi+", "Phi-", "Psi+", "Psi-")

_KETS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([_SQ, _SQ], dtype=complex),
    "R": np.array([_SQ, 1j * _SQ], dtype=complex),
}

_BELL_KETS = {
    "Phi+": np.array([_SQ, 0, 0, _SQ], dtype=complex),
    "Phi-": np.array([_SQ, 0, 0, -_SQ], dtype=complex),
    "Psi+": np.array([0, _SQ, _SQ, 0], dtype=complex),
    "Psi-": np.array([0, _SQ, -_SQ, 0], dtype=complex),
}
_BELL_ALIASES = {"Φ+": "Phi+", "Φ-": "Phi-", "Φ−": "Phi-", "Ψ+": "Psi+",
                 "Ψ-": "Psi-", "Ψ−": "Psi-"}


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def projector(ket) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex).reshape(-1)
    return np.outer(ket, ket.conj())


def ket(label: str) -> np.ndarray:
    try:
        return _KETS[label].copy()
    except KeyError:
        raise InvalidArgument(f"unknown state label {label!r}; expected one of {STATE_LABELS}") from None


def prepared_state(label: str) -> np.ndarray:
    """Density operator of one of the four preparation states H, V, D, R."""
    return _frozen(projector(ket(label)))


def bell_ket(label: str) -> np.ndarray:
    label = _BELL_ALIASES.get(label, label)
    try:
        return _BELL_KETS[label].copy()
    except KeyError:
        raise InvalidArgument(f"unknown Bell label {label!r}; expected one of {BELL_LABELS}") from None


def bell_state(label: str) -> np.ndarray:
    return _frozen(projector(bell_ket(label)))


def _check_shape(a, shape, name="operator"):
    a = np.asarray(a)
    if a.shape != shape:
        raise InvalidArgument(f"{name} must have shape {shape}, got {a.shape}")
    return a


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product ``a ⊗ b`` of two single-qubit operators."""
    a = _check_shape(a, (2, 2), "first factor")
    b = _check_shape(b, (2, 2), "second factor")
    return np.kron(a, b)


def partial_transpose(rho, subsystem: int = 2) -> np.ndarray:
    """Partial transpose of a two-qubit operator on ``subsystem`` (1 or 2)."""
    rho = _check_shape(rho, (4, 4))
    if subsystem not in (1, 2):
        raise InvalidArgument("subsystem must be 1 or 2")
    # indices (i1, i2, j1, j2)
    t = np.asarray(rho).reshape(2, 2, 2, 2)
    if subsystem == 1:
        t = t.transpose(2, 1, 0, 3)
    else:
        t = t.transpose(0, 3, 2, 1)
    return t.reshape(4, 4).copy()


def partial_trace(rho, keep: int) -> np.ndarray:
    """Reduce a two-qubit operator to qubit ``keep``."""
    rho = _check_shape(rho, (4, 4))
    t = np.asarray(rho).reshape(2, 2, 2, 2)
    if keep == 1:
        return np.einsum("ikjk->ij", t)
    if keep == 2:
        return np.einsum("kikj->ij", t)
    raise InvalidArgument("keep must be 1 or 2")


def is_hermitian(a, tol: float = EPS_HERM) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.abs(a - a.conj().T).max() <= tol


def hermitian_eigh(hm, tol: float = EPS_EIG, max_sweeps: int = 60):
    """Eigen-decomposition of a small Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(values, vectors)`` with ascending eigenvalues and eigenvectors
    in the columns of ``vectors``. Sweeps stop once the off-diagonal
    Frobenius norm drops below ``tol`` times ``max(1, ‖hm‖)``.
    """
    a = np.array(hm, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgument(f"expected a square matrix, got shape {a.shape}")
    if not is_hermitian(a):
        raise InvalidArgument("matrix is not Hermitian within tolerance")
    n = a.shape[0]
    a = (a + a.conj().T) / 2
    v = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(a)))
    offdiag = ~np.eye(n, dtype=bool)

    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a[offdiag]))
        if off < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                m = abs(b)
                if m < 1e-300:
                    continue
                phase = b / m
                theta = 0.5 * math.atan2(2 * m, a[q, q].real - a[p, p].real)
                c, s = math.cos(theta), math.sin(theta)
                g = np.eye(n, dtype=complex)
                g[p, p] = c
                g[p, q] = s
                g[q, p] = -s * phase.conjugate()
                g[q, q] = c * phase.conjugate()
                a = g.conj().T @ a @ g
                a[p, q] = a[q, p] = 0
                v = v @ g
    else:
        raise InvalidState("Jacobi iteration did not converge")

    w = np.diag(a).real
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def hermitian_eigenvalues(hm) -> list[float]:
    return [float(x) for x in hermitian_eigh(hm)[0]]


def min_eigenvalue(hm) -> float:
    return float(hermitian_eigh(hm)[0][0])


def validate_density(rho, name: str = "state") -> np.ndarray:
    """Raise :class:`InvalidState` unless ``rho`` is a density operator."""
    rho = np.asarray(rho)
    if rho.shape not in ((2, 2), (4, 4)):
        raise InvalidArgument(f"{name} must be 2x2 or 4x4, got {rho.shape}")
    if not is_hermitian(rho, 1e-12):
        raise InvalidState(f"{name} is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1) > EPS_TRACE:
        raise InvalidState(f"{name} has trace {tr.real:.15g}, expected 1")
    lo = min_eigenvalue(rho)
    if lo < -EPS_PSD:
        raise InvalidState(f"{name} has negative eigenvalue {lo:.3e}")
    return rho

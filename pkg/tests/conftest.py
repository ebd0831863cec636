import numpy as np
import pytest

from mdimem import _kernels_py, bsm, kernels

try:
    from mdimem import _kernels as _kernels_c
except ImportError:  # pragma: no cover
    _kernels_c = None

KERNEL_IMPLS = [pytest.param(_kernels_py, id="python")]
if _kernels_c is not None:
    KERNEL_IMPLS.append(pytest.param(_kernels_c, id="compiled"))

ACCEPTANCE_LINES = []
LABELS = "HVDR"


@pytest.fixture(params=KERNEL_IMPLS)
def kernel_impl(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_density(rng, dim=2, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_unitary(rng, dim=2):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def brute_force_witness(channel, lam):
    """Independent enumeration: explicit kets, Kraus sums and Fraction payoffs."""
    s = 1 / np.sqrt(2)
    kets = {"H": [1, 0], "V": [0, 1], "D": [s, s], "R": [s, 1j * s]}
    phi_p = np.array([s, 0, 0, s])
    phi_m = np.array([s, 0, 0, -s])
    total = 0.0
    for x in LABELS:
        kx = np.array(kets[x], dtype=complex)
        rho_x = np.outer(kx, kx.conj())
        out_x = sum(k @ rho_x @ k.conj().T for k in channel.kraus)
        for y in LABELS:
            ky = np.array(kets[y], dtype=complex)
            rho = np.kron(out_x, np.outer(ky, ky.conj()))
            p_plus = (phi_p.conj() @ rho @ phi_p).real
            p_minus = (phi_m.conj() @ rho @ phi_m).real
            q_plus = (1 - lam) * p_plus + lam * p_minus
            q_minus = (1 - lam) * p_minus + lam * p_plus
            total += q_plus * float(bsm.payoff("+", x, y)) + q_minus * float(bsm.payoff("-", x, y))
    return total


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section(f"acceptance criteria ({kernels.BACKEND} kernels)")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

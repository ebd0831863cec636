import json
import warnings

import numpy as np
import pytest

from conftest import random_density, random_unitary
from mdimem import channels, qcore
from mdimem.errors import InvalidArgument, InvalidChi, InvalidState, ParseError

H, V, D, R = (qcore.prepared_state(s) for s in "HVDR")
A = qcore.projector([1 / np.sqrt(2), -1 / np.sqrt(2)])


def test_depolarizing_examples():
    assert np.allclose(channels.apply(channels.depolarizing(0), D), D)
    assert np.allclose(channels.apply(channels.depolarizing(1), R), np.eye(2) / 2)
    assert np.allclose(channels.apply(channels.depolarizing(0.5), H), np.diag([0.75, 0.25]))
    assert np.allclose(channels.apply(channels.depolarizing(2 / 3), V), np.diag([1 / 3, 2 / 3]))


@pytest.mark.parametrize("p", [-0.1, 1.01])
def test_depolarizing_range(p):
    with pytest.raises(InvalidArgument):
        channels.depolarizing(p)


def test_depolarizing_matches_definition(rng):
    for p in np.linspace(0, 1, 7):
        rho = random_density(rng)
        expected = (1 - p) * rho + p * np.eye(2) / 2
        assert np.allclose(channels.apply(channels.depolarizing(p), rho), expected, atol=1e-14)


def test_apply_identity_and_bitflip():
    assert np.allclose(channels.apply(channels.identity(), R), R)
    chi = np.zeros((4, 4))
    chi[1, 1] = 1
    assert np.allclose(channels.apply(channels.from_chi(chi), H), V)


def test_kraus_must_be_trace_preserving():
    with pytest.raises(InvalidState):
        channels.kraus_channel([0.5 * qcore.I2])


def test_apply_preserves_trace_and_positivity(rng):
    chans = [channels.depolarizing(0.37), channels.dephasing(0.2),
             channels.unitary(random_unitary(rng)),
             channels.intercept_resend(["X", "Z"], [0.3, 0.7])]
    for ch in chans:
        for _ in range(20):
            out = channels.apply(ch, random_density(rng))
            qcore.validate_density(out)


def test_choi_examples():
    assert np.allclose(channels.choi(channels.identity()), qcore.bell_state("Phi+"))
    assert np.allclose(channels.choi(channels.depolarizing(1)), np.eye(4) / 4)


def test_choi_of_depolarizing_grid():
    phi = qcore.bell_state("Phi+")
    for p in np.linspace(0, 1, 11):
        j = channels.choi(channels.depolarizing(p))
        assert np.abs(j - ((1 - p) * phi + p * np.eye(4) / 4)).max() <= 1e-12


def test_choi_marginal_is_maximally_mixed(rng):
    ch = channels.unitary(random_unitary(rng))
    j = channels.choi(ch)
    qcore.validate_density(j)
    assert np.allclose(qcore.partial_trace(j, 2), np.eye(2) / 2, atol=1e-10)


def test_from_chi_examples():
    e00 = np.zeros((4, 4))
    e00[0, 0] = 1
    assert np.allclose(channels.apply(channels.from_chi(e00), R), R)

    p = 0.3
    chi = np.diag([1 - 3 * p / 4, p / 4, p / 4, p / 4])
    rho = random_density(np.random.default_rng(1))
    assert np.allclose(channels.apply(channels.from_chi(chi), rho),
                       channels.apply(channels.depolarizing(p), rho), atol=1e-14)

    ezz = np.zeros((4, 4))
    ezz[3, 3] = 1
    assert np.allclose(channels.apply(channels.from_chi(ezz), D), A)


def test_chi_roundtrip_of_kraus_channels(rng):
    for _ in range(10):
        # random CPTP map from a Stinespring isometry
        u = random_unitary(rng, 4)
        ops = [u[2 * k:2 * k + 2, :2] for k in range(2)]
        ch = channels.kraus_channel(ops)
        via_chi = channels.from_chi(channels.chi_matrix(ch))
        for _ in range(5):
            rho = random_density(rng)
            assert np.abs(channels.apply(ch, rho) - channels.apply(via_chi, rho)).max() <= 1e-10


def test_chi_basis_uses_minus_i_sigma_y():
    chi = channels.chi_matrix(channels.unitary(-1j * qcore.SIGMA_Y))
    expected = np.zeros((4, 4))
    expected[2, 2] = 1
    assert np.allclose(chi, expected)


def test_from_chi_rejects_non_psd():
    chi = np.diag([1.1, -0.1, 0, 0])
    with pytest.raises(InvalidChi) as err:
        channels.from_chi(chi)
    assert err.value.min_eigenvalue == pytest.approx(-0.1)


def test_from_chi_rejects_incomplete():
    with pytest.raises(InvalidChi):
        channels.from_chi(np.diag([0.5, 0, 0, 0]))


def test_from_chi_projects_slightly_unphysical():
    chi = np.diag([1 + 4e-7, -4e-7, 0, 0]).astype(complex)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ch = channels.from_chi(chi)
    assert caught
    assert ch.renormalize
    assert qcore.min_eigenvalue(ch.chi) >= 0
    out = channels.apply(ch, D)
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-15)


def test_intercept_resend_examples():
    z = channels.intercept_resend(["Z"])
    assert np.allclose(channels.apply(z, D), np.eye(2) / 2)
    assert np.allclose(channels.apply(z, H), H)
    zx = channels.intercept_resend(["Z", "X"], [0.5, 0.5])
    assert np.allclose(channels.apply(zx, H), np.diag([0.75, 0.25]))


def test_intercept_resend_validation():
    with pytest.raises(InvalidArgument):
        channels.intercept_resend([[np.array([1, 0]), np.array([1, 1])]])
    with pytest.raises(InvalidArgument):
        channels.intercept_resend(["X", "Z"], [0.5, 0.6])
    with pytest.raises(InvalidArgument):
        channels.intercept_resend(["Q"])


def test_entanglement_breaking_examples():
    eb, margin = channels.is_entanglement_breaking(channels.identity())
    assert not eb and margin == pytest.approx(-0.5, abs=1e-12)
    eb, margin = channels.is_entanglement_breaking(channels.depolarizing(2 / 3))
    assert eb and margin == pytest.approx(0.0, abs=1e-12)


def test_entanglement_breaking_threshold():
    for p in np.linspace(0, 1, 41):
        if abs(p - 2 / 3) < 1e-6:
            continue
        eb, _ = channels.is_entanglement_breaking(channels.depolarizing(p))
        assert eb == (p > 2 / 3)
    assert not channels.is_entanglement_breaking(channels.depolarizing(2 / 3 - 2e-6))[0]
    assert channels.is_entanglement_breaking(channels.depolarizing(2 / 3 + 2e-6))[0]


def test_intercept_resend_always_breaking(rng):
    for _ in range(50):
        k = rng.integers(1, 4)
        bases = [tuple(random_unitary(rng).T) for _ in range(k)]
        w = rng.dirichlet(np.ones(k))
        assert channels.is_entanglement_breaking(channels.intercept_resend(bases, w))[0]


def test_chi_file_roundtrip(tmp_path):
    chi = channels.chi_matrix(channels.depolarizing(0.25)) + 0.01j * np.array(
        [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]])
    path = tmp_path / "chi.json"
    channels.write_chi(path, chi, storage_time_us=12.5)
    doc = json.loads(path.read_text())
    assert doc["basis"] == ["I", "X", "-iY", "Z"]
    back, t = channels.read_chi(path)
    assert t == 12.5
    assert np.array_equal(back, chi)


def test_chi_file_errors(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"basis": ["I", "X", "Y", "Z"], "chi": [[[0, 0]] * 4] * 4}))
    with pytest.raises(ParseError):
        channels.read_chi(path)
    path.write_text(json.dumps({"chi": [[1, 0]]}))
    with pytest.raises(ParseError):
        channels.read_chi(path)
    path.write_text("{\n  oops")
    with pytest.raises(ParseError) as err:
        channels.read_chi(path)
    assert err.value.line == 2


def test_project_cptp(rng):
    phys = channels.chi_matrix(channels.depolarizing(0.3))
    assert np.abs(channels.project_cptp(phys) - phys).max() <= 1e-12
    for _ in range(5):
        noise = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        chi = channels.chi_matrix(channels.identity()) + 0.01 * (noise + noise.conj().T)
        out = channels.project_cptp(chi)
        assert qcore.min_eigenvalue(out) >= -1e-12
        assert np.abs(channels.chi_completeness(out) - np.eye(2)).max() <= 1e-12
        # nearest CPTP point beats any other CPTP point, e.g. the identity itself
        ident = channels.chi_matrix(channels.identity())
        assert np.linalg.norm(out - chi) <= np.linalg.norm(ident - chi) + 1e-9

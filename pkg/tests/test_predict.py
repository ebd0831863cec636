import math

import numpy as np
import pytest

from mdimem import bsm, channels, game, predict
from mdimem.errors import InvalidArgument, InvalidChi, UndefinedSNR

PARAMS = predict.reference_params()
TIMES = list(range(0, 61, 5))


def test_fixture_values():
    assert PARAMS.P_ph == 0.060 and PARAMS.eta_opt == 0.108 and PARAMS.eta_det == 0.70
    assert PARAMS.eta_m0 == (0.269, 0.250) and PARAMS.tau_m == (58.2, 56.6)
    assert PARAMS.P_noise == 8.57e-5 and PARAMS.V == 0.875
    assert predict.default_config()["times"] == TIMES


def test_storage_efficiency_examples():
    assert predict.storage_efficiency(0, 0.269, 58.2) == 0.269
    assert predict.storage_efficiency(58.2, 0.269, 58.2) == pytest.approx(0.269 / math.e, rel=1e-15)
    assert predict.storage_efficiency(58.2, 0.269, 58.2) == pytest.approx(0.0990, abs=5e-5)
    with pytest.raises(InvalidArgument):
        predict.storage_efficiency(-1, 0.269, 58.2)


def test_noise_strength_at_zero():
    signal = 0.060 * (0.269 + 0.250) / 2 * 0.108 * 0.70
    expected = 8.57e-5 / (signal + 8.57e-5)
    assert predict.noise_strength(0, PARAMS) == pytest.approx(expected, rel=1e-14)
    assert predict.noise_strength(0, PARAMS) == pytest.approx(0.0678654917, abs=1e-10)


def test_snr_identity():
    for t in (0, 17, 60):
        p = predict.noise_strength(t, PARAMS)
        snr = predict.signal_probability(t, PARAMS) / PARAMS.P_noise
        assert (1 - p) / p == pytest.approx(snr, rel=1e-12)


def test_mode_strategies():
    t = 30
    per = predict.mode_efficiency(t, PARAMS, "per-mode")
    assert len(per) == 2
    assert predict.mode_efficiency(t, PARAMS, "min") == min(per)
    assert predict.mode_efficiency(t, PARAMS, "mean") == pytest.approx(sum(per) / 2)
    assert len(predict.noise_strength(t, PARAMS, "per-mode")) == 2
    with pytest.raises(InvalidArgument):
        predict.mode_efficiency(t, PARAMS, "median")


def test_curve_values():
    curve = predict.theory_curve(PARAMS, [0, 60])
    assert curve[0].witness == pytest.approx(1 - 1.5 * 0.0678654917, abs=1e-9)
    assert curve[0].witness == pytest.approx(0.8982, abs=5e-5)
    assert curve[1].witness == pytest.approx(0.7326, abs=5e-5)
    noisy = predict.theory_curve(PARAMS, [0], include_bsm_noise=True)
    assert noisy[0].lam == 0.1171875
    assert noisy[0].witness == pytest.approx(0.6797, abs=5e-5)


def test_curve_monotone_and_p_increasing():
    curve = predict.theory_curve(PARAMS, np.linspace(0, 60, 61))
    w = [pt.witness for pt in curve]
    p = [pt.p for pt in curve]
    assert all(b < a for a, b in zip(w, w[1:]))
    assert all(b > a for a, b in zip(p, p[1:]))
    assert all(0 <= v <= 1 for v in p)


def test_noise_strength_depends_only_on_signal_noise_ratio():
    # scaling signal and noise together leaves p unchanged
    a = predict.MemoryParams(0.06, 0.108, 0.7, (0.269, 0.25), (58.2, 56.6), 8.57e-5, 0.875)
    b = predict.MemoryParams(0.03, 0.108, 0.7, (0.269, 0.25), (58.2, 56.6), 4.285e-5, 0.875)
    for t in (0, 25, 60):
        assert predict.noise_strength(t, a) == pytest.approx(predict.noise_strength(t, b), rel=1e-12)


def test_zero_noise_gives_ideal_memory():
    p = predict.MemoryParams(0.06, 0.108, 0.7, (0.269, 0.25), (58.2, 56.6), 0.0, 0.875)
    assert all(pt.witness == pytest.approx(1.0, abs=1e-12) for pt in predict.theory_curve(p, TIMES))


def test_undefined_snr():
    p = predict.MemoryParams(0.0, 0.108, 0.7, (0.269, 0.25), (58.2, 56.6), 0.0, 0.875)
    with pytest.raises(UndefinedSNR):
        predict.noise_strength(0, p)


def test_curve_input_validation():
    with pytest.raises(InvalidArgument):
        predict.theory_curve(PARAMS, [])
    with pytest.raises(InvalidArgument):
        predict.theory_curve(PARAMS, [10, 5])
    with pytest.raises(InvalidArgument):
        predict.theory_curve(PARAMS, [-1])


def test_params_from_dict_validation():
    d = PARAMS.to_dict()
    assert predict.MemoryParams.from_dict(d) == PARAMS
    with pytest.raises(InvalidArgument):
        predict.MemoryParams.from_dict({**d, "extra": 1})
    d.pop("V")
    with pytest.raises(InvalidArgument):
        predict.MemoryParams.from_dict(d)
    with pytest.raises(InvalidArgument):
        predict.MemoryParams(1.5, 0.1, 0.7, (0.2, 0.2), (50, 50), 1e-5, 0.9)


def test_chi_route_matches_theory():
    theory = predict.theory_curve(PARAMS, TIMES)
    chis = [(pt.t_us, channels.chi_matrix(channels.depolarizing(pt.p))) for pt in theory]
    sim = predict.simulated_curve(chis, bsm.bsm_povm(0))
    for a, b in zip(theory, sim):
        assert a.witness == pytest.approx(b.witness, abs=1e-12)
        assert math.isnan(b.p)


def test_chi_route_dephasing_differs():
    # dephasing at the same strength leaves more coherence than depolarizing
    for p in (0.1, 0.4):
        deph = channels.dephasing(p)
        sim = predict.simulated_curve([(0, channels.chi_matrix(deph))], bsm.bsm_povm(0))[0]
        assert sim.witness == pytest.approx(game.exact_witness(deph, bsm.bsm_povm(0)), abs=1e-12)
        assert sim.witness != pytest.approx(1 - 1.5 * p, abs=1e-6)


def test_chi_route_names_bad_entry():
    good = channels.chi_matrix(channels.identity())
    with pytest.raises(InvalidChi) as err:
        predict.simulated_curve([(0, good), (10, np.diag([1.2, -0.2, 0, 0]))], bsm.bsm_povm(0))
    assert "entry 1" in str(err.value)


def test_chi_files_sorted_by_time(tmp_path):
    paths = []
    for t, p in ((20, 0.3), (0, 0.1)):
        path = tmp_path / f"chi_{t}.json"
        channels.write_chi(path, channels.chi_matrix(channels.depolarizing(p)), t)
        paths.append(path)
    curve = predict.simulated_curve_from_files(paths, bsm.bsm_povm(0))
    assert [pt.t_us for pt in curve] == [0, 20]
    assert curve[0].witness == pytest.approx(0.85, abs=1e-12)


def test_curve_csv():
    text = predict.curve_to_csv(predict.theory_curve(PARAMS, [0, 5]))
    lines = text.splitlines()
    assert lines[0] == "t_us,witness,lambda,p"
    assert len(lines) == 3
    assert float(lines[1].split(",")[1]) == predict.theory_curve(PARAMS, [0])[0].witness

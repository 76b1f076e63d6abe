import math

import numpy as np
import pytest

from swipt.constellation import Constellation, build_constellation, noise_models, pep_matrix
from swipt.errors import ConfigError
from swipt.optimizer import DesignPoint, solve_p2
from swipt.simulator import draw_noise, simulate_ser, validate_pep
from swipt.system import PowerSplit, SystemParams, noise_generators

PAIR = build_constellation(None, [1, 1])


def test_noise_matches_covariance_model():
    con = build_constellation(None, [4, 4])
    p = SystemParams(P=30.0, theta=0.8)
    split = PowerSplit(0.6)
    s = con.symbols[5]
    noise = draw_noise(np.full(400_000, s), p, split, noise_generators(2))
    _, covs, _ = noise_models(con, p, split)
    np.testing.assert_allclose(np.cov(noise.T), covs[5], rtol=0.02, atol=0.01)
    assert np.all(np.abs(noise.mean(0)) < 5 * np.sqrt(np.diag(covs[5]) / noise.shape[0]))


def test_exact_rectifier_adds_squared_antenna_noise():
    p = SystemParams()
    split = PowerSplit(0.7)
    s = np.full(10, 1.0 + 0j)
    a = draw_noise(s, p, split, noise_generators(3))
    b = draw_noise(s, p, split, noise_generators(3), exact_rectifier=True)
    np.testing.assert_array_equal(a[:, :2], b[:, :2])
    assert np.all(b[:, 2] >= a[:, 2])


def test_noise_free_run_has_no_errors():
    tiny = 1e-12
    p = SystemParams(sigma2_ant=tiny, sigma2_rec=tiny, sigma2_eff=tiny)
    r = simulate_ser(build_constellation(None, [4, 4, 8]), p, PowerSplit(0.5), 20_000, seed=0)
    assert r.ser == 0.0 and r.symbol_errors == 0


def test_report_invariants_and_determinism():
    con = build_constellation(None, [2, 4])
    p = SystemParams(P=3.0)
    a = simulate_ser(con, p, PowerSplit(0.4), 30_000, seed=9)
    b = simulate_ser(con, p, PowerSplit(0.4), 30_000, seed=9)
    assert a.ser == a.symbol_errors / a.n_trials
    assert a.confusion.sum() == a.n_trials
    assert a.symbol_errors == a.n_trials - np.trace(a.confusion)
    np.testing.assert_array_equal(a.confusion, b.confusion)
    assert (a.symbol_errors, a.theta) == (b.symbol_errors, b.theta)
    assert a.symbol_errors > 0
    assert a.to_dict()["confusion"] == a.confusion.tolist()
    with pytest.raises(ConfigError):
        simulate_ser(con, p, PowerSplit(0.4), 100)


def test_binary_pair_ser_matches_pep():
    # rho = 0 makes the covariance symbol-independent, so the detector is the
    # two-hypothesis test the pairwise formula describes
    p = SystemParams(P=54.1)
    split = PowerSplit(0.0)
    pep = pep_matrix(PAIR, p, split)[0, 1]
    assert pep == pytest.approx(1e-2, rel=0.01)
    r = simulate_ser(PAIR, p, split, 1_000_000, seed=1)
    assert abs(r.ser - pep) / pep <= 0.05


def test_optimized_design_meets_union_bound():
    point = DesignPoint(0.05, 1e-3)
    design = solve_p2(point)
    r = simulate_ser(design.constellation, design.params, PowerSplit(0.05), 1_000_000, seed=2)
    assert r.ser <= (design.best_M - 1) * 1e-3


@pytest.mark.parametrize("seed", [0, 1])
def test_pairwise_validation_within_four_sigma(seed):
    con = build_constellation(None, [4, 8])
    p = SystemParams(P=60.0, theta=0.3)
    split = PowerSplit(0.5)
    pep = pep_matrix(con, p, split)
    pairs = np.argwhere((pep > 1e-3) & (pep < 0.2))[:4]
    assert len(pairs)
    for i, j in pairs:
        analytic, empirical, _ = validate_pep(con, p, split, (i, j), 200_000, seed=seed)
        assert analytic == pytest.approx(pep[i, j], rel=1e-12)
        sigma = math.sqrt(analytic * (1 - analytic) / 200_000)
        assert abs(empirical - analytic) <= 4 * sigma


def test_validate_pep_trivial_cases():
    coincident = Constellation((2,), 0.0, (0.0,))
    analytic, empirical, _ = validate_pep(coincident, SystemParams(), PowerSplit(0.5), (0, 1), 10_000)
    assert analytic == 0.5
    # a coincident pair ties on every trial; ties count as half an error
    assert empirical == 0.5
    far = SystemParams(P=1e4)
    analytic, empirical, rel = validate_pep(PAIR, far, PowerSplit(0.5), (0, 1), 100_000)
    assert analytic < 1e-6 and empirical == 0.0
    with pytest.raises(ValueError):
        validate_pep(PAIR, far, PowerSplit(0.5), (1, 1), 10)
    with pytest.raises(ConfigError):
        validate_pep(PAIR, far, PowerSplit(0.5), (0, 1), 10, metric="other")


def test_detector_metric_differs_from_formula_with_signal_dependent_noise():
    # at rho = 1 the two amplitude levels see different rectified-noise variance
    p = SystemParams(P=50.0)
    split = PowerSplit(1.0)
    analytic, formula_metric, rel = validate_pep(PAIR, p, split, (1, 0), 1_000_000, seed=5)
    _, detector_metric, _ = validate_pep(PAIR, p, split, (1, 0), 1_000_000, seed=5, metric="detector")
    assert rel <= 0.1
    assert detector_metric < 0.5 * analytic


def test_exact_rectifier_is_negligible_for_optimized_design():
    point = DesignPoint(0.05, 1e-3)
    design = solve_p2(point)
    split = PowerSplit(0.05)
    off = simulate_ser(design.constellation, design.params, split, 300_000, seed=4)
    on = simulate_ser(design.constellation, design.params, split, 300_000, seed=4, exact_rectifier=True)
    assert off.theta == on.theta
    assert abs(on.ser - off.ser) <= 0.1 * off.ser

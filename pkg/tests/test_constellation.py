import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.distance import mahalanobis
from scipy.stats import multivariate_normal, norm

from swipt.constellation import (
    Constellation,
    build_constellation,
    ml_detect,
    noise_covariance,
    noise_models,
    pairwise_error_probability,
    pep_matrix,
    symbol_statistic,
    whitened_distances,
)
from swipt.errors import ConfigError, InfeasibleGeometry, SingularCovariance
from swipt.system import PowerSplit, SystemParams

HALF = PowerSplit(0.5)


def test_statistic_examples():
    p = SystemParams()
    np.testing.assert_allclose(symbol_statistic(1j, p, HALF), [0.0, math.sqrt(50), 50.0], atol=1e-12)
    np.testing.assert_allclose(symbol_statistic(1.0, p, HALF), [math.sqrt(50), 0.0, 50.0], atol=1e-12)


def test_covariance_example():
    m = noise_covariance(1.0, SystemParams(), HALF)
    assert m.cov[2, 2] == pytest.approx(51.0, abs=1e-12)
    assert m.cov[0, 2] == pytest.approx(10 * math.sqrt(0.5) / 2, abs=1e-12)
    assert m.cov[1, 2] == pytest.approx(0.0, abs=1e-12)
    assert m.cov[0, 0] == m.cov[1, 1] == pytest.approx(0.75)
    assert m.cov[0, 1] == 0.0


def test_covariance_trivial_cases():
    m = noise_covariance(0.0, SystemParams(), HALF)
    assert np.count_nonzero(m.cov - np.diag(np.diag(m.cov))) == 0
    m = noise_covariance(1 + 1j, SystemParams(sigma2_eff=2.0), PowerSplit(1.0))
    np.testing.assert_allclose(m.cov[:2, :2], np.eye(2))
    np.testing.assert_allclose(m.cov[:2, 2], 0.0)


def test_theta_rotates_cross_terms():
    p = SystemParams(theta=math.pi / 2)
    m = noise_covariance(1.0, p, HALF)
    # s e^{j theta} = j: alpha1 = 0, alpha2 = 10
    assert m.cov[0, 2] == pytest.approx(0.0, abs=1e-12)
    assert m.cov[1, 2] == pytest.approx(10 * math.sqrt(0.5) / 2)


def test_singular_covariance():
    with pytest.raises(SingularCovariance):
        noise_covariance(1.0, SystemParams(sigma2_eff=0.0, sigma2_rec=0.0), PowerSplit(1.0))


symbols_st = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)
params_st = st.builds(
    SystemParams,
    P=st.floats(0.1, 1e3),
    h=st.floats(0.1, 2.0),
    theta=st.floats(0, 2 * math.pi),
    sigma2_ant=st.floats(0.01, 5),
    sigma2_rec=st.floats(0.01, 5),
    sigma2_eff=st.floats(0.01, 5),
)


@given(s=symbols_st, params=params_st, rho=st.floats(0, 1))
def test_whitening_identity(s, params, rho):
    m = noise_covariance(s, params, PowerSplit(rho))
    scale = max(1.0, np.abs(m.cov).max())
    np.testing.assert_allclose(m.chol @ m.chol.T, m.cov, atol=1e-12 * scale)
    np.testing.assert_allclose(m.whitener @ m.chol, np.eye(3), atol=1e-10)
    assert m.logdet == pytest.approx(math.log(np.linalg.det(m.cov)), rel=1e-9, abs=1e-9)


@given(
    sizes=st.lists(st.integers(1, 12), min_size=1, max_size=6),
    power=st.floats(0.01, 100),
    phase=st.floats(0, 2 * math.pi),
)
def test_build_meets_power_with_equality(sizes, power, phase):
    con = build_constellation(None, sizes, power, phase)
    assert con.power == pytest.approx(power, rel=1e-12)
    np.testing.assert_allclose(np.unique(np.round(np.abs(con.symbols) / con.d, 9)), 2 * np.arange(1, len(sizes) + 1))
    assert con.M == sum(sizes)


def test_build_equal_split_and_errors():
    con = build_constellation(2, 8)
    assert con.points_per_ring == (4, 4)
    # (1/8)(4 (2d)^2 + 4 (4d)^2) = 1
    assert con.d == pytest.approx(math.sqrt(1 / 10))
    with pytest.raises(ConfigError):
        build_constellation(3, 8)
    with pytest.raises(ConfigError):
        build_constellation(None, [2, 0])
    with pytest.raises(InfeasibleGeometry):
        build_constellation(1, 4, target_power=0.0)


def test_json_round_trip():
    con = build_constellation(None, [3, 5], 2.0, 0.3)
    again = Constellation.from_dict(json.loads(con.to_json()))
    assert again == con
    doc = con.to_dict()
    assert set(doc) >= {"points_per_ring", "radii", "angles", "d", "power"}


def test_ml_detect_noiseless_sweep():
    con = build_constellation(None, [8, 8], 1.0)
    p = SystemParams(theta=0.7)
    u = symbol_statistic(con.symbols, p, HALF)
    np.testing.assert_array_equal(ml_detect(u, con, p, HALF), np.arange(con.M))
    assert ml_detect(u[3], con, p, HALF) == 3


def test_ml_detect_matches_likelihood_oracle_fixed_covariance(rng):
    # rho = 0: the covariance does not depend on the symbol
    con = build_constellation(None, [1, 3], 1.0, 0.2)
    p = SystemParams(sigma2_ant=0.3, sigma2_eff=0.2)
    split = PowerSplit(0.0)
    means, covs, _ = noise_models(con, p, split)
    assert np.allclose(covs, covs[0])
    y = means[rng.integers(0, 4, 1000)] + rng.normal(scale=2.0, size=(1000, 3))
    ll = np.stack([multivariate_normal(means[m], covs[0]).logpdf(y) for m in range(4)], axis=1)
    np.testing.assert_array_equal(ml_detect(y, con, p, split), np.argmax(ll, axis=1))


def test_ml_detect_shift_invariance_fixed_covariance(rng):
    con = build_constellation(None, [4, 4], 1.0)
    p = SystemParams()
    split = PowerSplit(0.0)
    means, covs, chol = noise_models(con, p, split)
    y = means[rng.integers(0, 8, 500)] + rng.normal(size=(500, 3))
    shift = np.array([0.7, -0.4, 1.3])
    # moving y and every mean by the same vector leaves the whitened distances unchanged
    diff = (y + shift)[:, None, :] - (means + shift)[None, :, :]
    z = np.einsum("ij,nmj->nmi", np.linalg.inv(chol[0]), diff)
    np.testing.assert_array_equal(np.argmin(np.sum(z * z, -1), 1), ml_detect(y, con, p, split))


def test_ml_detect_logdet_is_gaussian_ml(rng):
    con = build_constellation(None, [2, 4], 1.0)
    p = SystemParams(P=20.0)
    means, covs, _ = noise_models(con, p, HALF)
    y = means[rng.integers(0, 6, 1000)] + rng.normal(scale=3.0, size=(1000, 3))
    ll = np.stack([multivariate_normal(means[m], covs[m]).logpdf(y) for m in range(6)], axis=1)
    np.testing.assert_array_equal(ml_detect(y, con, p, HALF, logdet=True), np.argmax(ll, axis=1))
    # without the log-determinant, the rule is the per-candidate whitened distance
    d2 = np.stack([np.einsum("ni,ij,nj->n", y - means[m], np.linalg.inv(covs[m]), y - means[m]) for m in range(6)], 1)
    np.testing.assert_array_equal(ml_detect(y, con, p, HALF), np.argmin(d2, axis=1))


def test_ml_detect_tends_to_baseband_rule_for_huge_rectifier_noise(rng):
    con = build_constellation(None, [4, 4], 1.0)
    p = SystemParams(P=10.0, sigma2_rec=1e6)
    means, covs, _ = noise_models(con, p, HALF)
    chol = np.linalg.cholesky(covs[0])
    sent = rng.integers(0, 8, 10_000)
    y = means[sent] + rng.normal(size=(10_000, 3)) @ chol.T
    full = ml_detect(y, con, p, HALF)
    planar = ml_detect(y[:, :2], con, p, HALF, dims=(0, 1))
    assert np.mean(full == planar) >= 0.99


def test_pep_formula_against_mahalanobis():
    con = build_constellation(None, [4, 8], 1.0)
    p = SystemParams(P=30.0, theta=0.4)
    split = PowerSplit(0.6)
    means, covs, _ = noise_models(con, p, split)
    pep = pep_matrix(con, p, split)
    for i, j in [(0, 1), (1, 0), (3, 7), (11, 2)]:
        d = mahalanobis(means[i], means[j], np.linalg.inv(covs[i]))
        expected = norm.sf(d / 2)
        assert pairwise_error_probability(i, j, con, p, split) == pytest.approx(expected, rel=1e-10)
        assert pep[i, j] == pytest.approx(expected, rel=1e-10)
    assert np.all(np.diag(pep) == 0)
    # signal-dependent noise: not symmetric in general
    assert not np.allclose(pep, pep.T)
    d = whitened_distances(con, p, split)
    assert d[0, 1] == pytest.approx(mahalanobis(means[0], means[1], np.linalg.inv(covs[0])), rel=1e-10)


def test_pep_trivial_cases():
    con = Constellation((2,), 0.0, (0.0,))
    assert pairwise_error_probability(0, 1, con, SystemParams(), HALF) == 0.5
    far = build_constellation(None, [1, 1], 1.0)
    assert pairwise_error_probability(0, 1, far, SystemParams(P=1e6), HALF) < 1e-100
    with pytest.raises(ValueError):
        pairwise_error_probability(1, 1, far, SystemParams(), HALF)

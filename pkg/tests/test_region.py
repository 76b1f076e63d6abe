import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swipt.errors import ConfigError
from swipt.region import (
    RateEnergyPoint,
    RegionCurve,
    curves_to_csv,
    curves_to_json,
    default_rho_grid,
    ergodic_region,
    ideal_bound,
    iie_baseline,
    iie_rate,
    proposed_inner,
    proposed_outer,
    ps_baseline,
    rate_at_energy,
    region_curves,
)
from swipt.system import SystemParams

LOG2_51 = math.log2(51)


def test_proposed_outer_endpoints_fig4():
    c = proposed_outer(SystemParams())
    assert c.rate[0] == pytest.approx(LOG2_51, abs=1e-12)
    assert c.energy[0] == 0.0
    assert c.energy[-1] == pytest.approx(60.0, abs=1e-12)
    assert c.rate[-1] == pytest.approx(iie_rate(SystemParams()), abs=1e-12)


def test_fig5_right_edge():
    # log2(1 + 100 / 11)
    c = proposed_outer(SystemParams(sigma2_eff=10.0))
    assert c.rate[0] == pytest.approx(math.log2(1 + 100 / 11), abs=1e-12)
    assert c.rate[0] == pytest.approx(3.335, abs=1e-3)


def test_ideal_and_iie_shapes():
    ideal = ideal_bound(SystemParams())
    np.testing.assert_allclose(ideal.rate, [LOG2_51, LOG2_51])
    np.testing.assert_allclose(ideal.energy, [0.0, 60.0])
    iie = iie_baseline(SystemParams())
    assert iie.rate[0] == pytest.approx(LOG2_51)
    assert iie.rate[1] == iie.rate[2] == iie_rate(SystemParams())
    np.testing.assert_allclose(iie.energy, [0.0, 0.0, 60.0])
    degenerate = ideal_bound(SystemParams(P=0.0))
    assert len(degenerate) == 1


def test_iie_rate_matches_outer_bound_at_full_split():
    for p in (SystemParams(), SystemParams(sigma2_eff=10.0)):
        assert iie_rate(p) == pytest.approx(proposed_outer(p, [1.0]).rate[0], abs=1e-12)
    # large ADC noise: the end-to-end cap binds below the rectified-path bound
    p = SystemParams(sigma2_eff=10.0)
    assert iie_rate(p) == pytest.approx(math.log2(1 + 100 / 11), abs=1e-12)


def test_ps_endpoints():
    c = ps_baseline(SystemParams())
    assert c.rate[0] == pytest.approx(LOG2_51)
    assert c.rate[-1] == 0.0
    assert np.all(np.diff(c.rate) <= 1e-12)


@pytest.mark.parametrize("grid", [[], [0.5, 0.2], [-0.1, 0.5], [0.0, 1.5]])
def test_bad_grids(grid):
    with pytest.raises(ConfigError):
        proposed_outer(SystemParams(), grid)


def test_point_validation():
    with pytest.raises(ValueError):
        RateEnergyPoint(-1.0, 0.0)
    with pytest.raises(ValueError):
        RegionCurve("x", [0.0], [1.0, 2.0], [0.0])


@given(
    eff=st.sampled_from([0.1, 1.0, 10.0]),
    P=st.floats(1.0, 1e3),
    rho=st.floats(0, 1),
)
def test_proposed_outer_dominates_ps(eff, P, rho):
    p = SystemParams(P=P, sigma2_eff=eff)
    out = proposed_outer(p, [rho])
    ps = ps_baseline(p, [rho])
    assert out.rate[0] >= ps.rate[0] - 1e-12
    assert out.rate[0] <= ideal_bound(p).rate[0] + 1e-12


def test_rate_at_energy_interpolates():
    c = RegionCurve("t", [0, 0.5, 1], [4.0, 2.0, 1.0], [0.0, 10.0, 20.0])
    np.testing.assert_allclose(rate_at_energy(c, [0.0, 5.0, 10.0, 15.0, 20.0, 25.0]), [4, 3, 2, 1.5, 1, 0])


def test_inner_curve_below_outer():
    p = SystemParams()
    grid = [0.0, 0.5, 1.0]
    inner = proposed_inner(p, grid, n_samples=10_000)
    outer = proposed_outer(p, grid)
    assert np.all(inner.rate - 2 * inner.rate_std_error <= outer.rate)
    assert inner.meta["n_samples"] == 10_000


def test_region_curves_labels_and_exports():
    curves = region_curves(SystemParams(), default_rho_grid(5), n_samples=10_000)
    assert list(curves) == ["ideal", "proposed_outer", "proposed_inner", "ps", "iie"]
    text = curves_to_csv(curves, {"seed": 0})
    header, body = text.split("\n", 1)
    assert header.startswith("# ") and json.loads(header[2:]) == {"seed": 0}
    rows = list(csv.DictReader(io.StringIO(body)))
    assert rows[0].keys() >= {"rho", "rate_bits", "energy_J", "label"}
    assert len(rows) == 2 + 5 + 5 + 5 + 3
    doc = json.loads(curves_to_json(curves, {"seed": 0}))
    assert [c["label"] for c in doc["curves"]] == list(curves)


def test_ergodic_with_explicit_gains_reduces_to_static():
    p = SystemParams()
    grid = default_rho_grid(11)
    erg = ergodic_region(p, grid, fading_gains=[1.0, 1.0])
    np.testing.assert_allclose(erg["proposed_outer"].rate, proposed_outer(p, grid).rate, rtol=1e-12)
    np.testing.assert_allclose(erg["ps"].rate, ps_baseline(p, grid).rate, rtol=1e-12)
    np.testing.assert_allclose(erg["iie"].rate, iie_baseline(p).rate, rtol=1e-12)


def test_ergodic_energy_and_argument_checks():
    p = SystemParams()
    erg = ergodic_region(p, [0.0, 1.0], n_fading=10_000, seed=3)
    q, se = erg["proposed_outer"].energy[-1], erg["proposed_outer"].energy_std_error[-1]
    assert abs(q - 60.0) <= 3 * se
    assert erg["proposed_outer"].meta["n_fading"] == 10_000
    with pytest.raises(ConfigError):
        ergodic_region(p, [0.5], n_fading=10)
    with pytest.raises(ConfigError):
        ergodic_region(p, [0.5], fading_gains=[-1.0])
    again = ergodic_region(p, [0.0, 1.0], n_fading=10_000, seed=3)
    np.testing.assert_array_equal(again["proposed_outer"].rate, erg["proposed_outer"].rate)

"""Rate-energy region boundaries for the unified receiver and its baselines.

Every curve is a sequence of (rate, energy) points. Curves parameterised
by the power split carry the split values in ``rho``; the ideal and IIE
curves carry the split value that realises each corner.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import (
    awgn_bits,
    baseband_upper,
    c_nac_upper,
    c_oic_upper,
    nac_bits,
    oic_bits,
    rate_upper,
    rate_upper_bits,
    rect_gaussian_upper,
    total_dpi_upper,
)
from .errors import ConfigError
from .inner import DEFAULT_SAMPLES, lower_bound
from .system import PowerSplit, SystemParams, harvested_energy

__all__ = [
    "RateEnergyPoint",
    "RegionCurve",
    "default_rho_grid",
    "ideal_bound",
    "proposed_outer",
    "proposed_inner",
    "ps_baseline",
    "iie_rate",
    "iie_baseline",
    "region_curves",
    "ergodic_region",
    "rate_at_energy",
    "curves_to_rows",
    "curves_to_csv",
    "curves_to_json",
]

CSV_COLUMNS = ("rho", "rate_bits", "energy_J", "label", "rate_std_error")


@dataclass(frozen=True)
class RateEnergyPoint:
    rate: float
    energy: float

    def __post_init__(self):
        if self.rate < 0 or self.energy < 0:
            raise ValueError(f"rate and energy must be non-negative, got {self}")


@dataclass
class RegionCurve:
    """A swept region boundary.

    Attributes
    ----------
    label : str
        Curve identifier used in exports.
    rho : ndarray
        Power split (or corner parameter) of each point.
    rate : ndarray
        Rate in bits per channel use.
    energy : ndarray
        Harvested energy in joules per symbol.
    rate_std_error : ndarray or None
        Monte-Carlo standard error of ``rate`` where it is estimated.
    energy_std_error : ndarray or None
        Monte-Carlo standard error of ``energy`` (ergodic curves only).
    meta : dict
        Modelling notes carried into exported files.
    """

    label: str
    rho: np.ndarray
    rate: np.ndarray
    energy: np.ndarray
    rate_std_error: np.ndarray | None = None
    energy_std_error: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.rate = np.asarray(self.rate, dtype=float)
        self.energy = np.asarray(self.energy, dtype=float)
        if not self.rho.shape == self.rate.shape == self.energy.shape:
            raise ValueError("rho, rate and energy must have the same length")

    @property
    def points(self) -> list[RateEnergyPoint]:
        return [RateEnergyPoint(float(r), float(q)) for r, q in zip(self.rate, self.energy)]

    def __len__(self):
        return self.rate.size

    def to_dict(self) -> dict:
        out = {
            "label": self.label,
            "rho": self.rho.tolist(),
            "rate_bits": self.rate.tolist(),
            "energy_J": self.energy.tolist(),
            "meta": self.meta,
        }
        if self.rate_std_error is not None:
            out["rate_std_error"] = np.asarray(self.rate_std_error).tolist()
        if self.energy_std_error is not None:
            out["energy_std_error"] = np.asarray(self.energy_std_error).tolist()
        return out


def default_rho_grid(n: int = 101) -> np.ndarray:
    return np.linspace(0.0, 1.0, n)


def _check_grid(rho_grid) -> np.ndarray:
    grid = np.asarray(rho_grid, dtype=float).ravel()
    if grid.size == 0:
        raise ConfigError("rho grid is empty")
    if np.any(~np.isfinite(grid)) or grid.min() < 0 or grid.max() > 1:
        raise ConfigError("rho grid must lie in [0, 1]")
    if np.any(np.diff(grid) < 0):
        raise ConfigError("rho grid must be non-decreasing")
    return grid


def _energies(params: SystemParams, grid) -> np.ndarray:
    return np.array([harvested_energy(params, PowerSplit(r)) for r in grid])


def ideal_bound(params: SystemParams) -> RegionCurve:
    """Upper-right corner of the ideal region: full rate and full energy at once."""
    rate = total_dpi_upper(params)
    q_max = params.zeta * params.snr_gain
    if q_max == 0 and rate == 0:
        return RegionCurve("ideal", [0.0], [0.0], [0.0])
    return RegionCurve("ideal", [0.0, 1.0], [rate, rate], [0.0, q_max])


def proposed_outer(params: SystemParams, rho_grid=None, log_base=2) -> RegionCurve:
    grid = _check_grid(default_rho_grid() if rho_grid is None else rho_grid)
    rates = [rate_upper(params, PowerSplit(r), log_base).rate_ub for r in grid]
    return RegionCurve("proposed_outer", grid, rates, _energies(params, grid))


def proposed_inner(
    params: SystemParams, rho_grid=None, n_samples: int = DEFAULT_SAMPLES, seed=0
) -> RegionCurve:
    """Gaussian-input achievable region; every split reuses ``seed``."""
    grid = _check_grid(default_rho_grid() if rho_grid is None else rho_grid)
    lbs = [lower_bound(params, PowerSplit(r), n_samples, seed) for r in grid]
    return RegionCurve(
        "proposed_inner",
        grid,
        [lb.rate_lb for lb in lbs],
        _energies(params, grid),
        rate_std_error=np.array([lb.std_error for lb in lbs]),
        meta={"n_samples": int(n_samples), "seed": seed},
    )


def ps_baseline(params: SystemParams, rho_grid=None) -> RegionCurve:
    """Classical power splitting: only the baseband branch carries information."""
    grid = _check_grid(default_rho_grid() if rho_grid is None else rho_grid)
    rates = [baseband_upper(params, PowerSplit(r)) for r in grid]
    return RegionCurve(
        "ps",
        grid,
        rates,
        _energies(params, grid),
        meta={"model": "no information from the rectified branch"},
    )


def iie_rate(params: SystemParams, log_base=2) -> float:
    """Rate threshold of the integrated receiver.

    The unified receiver with everything rectified is the integrated
    receiver, so this is the outer bound at rho = 1: the rectified-path
    bound, capped by the end-to-end bound like every other point.
    """
    full = PowerSplit(1.0)
    terms = [rect_gaussian_upper(params, full)]
    if params.sigma2_rec > 0:
        terms.append(c_oic_upper(params, full, log_base))
    if params.sigma2_ant > 0:
        terms.append(c_nac_upper(params, full))
    return min(max(0.0, min(terms)), total_dpi_upper(params))


def iie_baseline(params: SystemParams, log_base=2) -> RegionCurve:
    """Rectangle of the integrated receiver plus its information-only point.

    Boundary points: ``(R_dpi, 0)``, ``(R_iie, 0)``, ``(R_iie, Q_max)``.
    """
    r_iie = iie_rate(params, log_base)
    q_max = params.zeta * params.snr_gain
    return RegionCurve(
        "iie",
        [0.0, 1.0, 1.0],
        [total_dpi_upper(params), r_iie, r_iie],
        [0.0, 0.0, q_max],
        meta={"model": "rectangle below the rho=1 rectified-path bound (reconstruction)"},
    )


def region_curves(
    params: SystemParams,
    rho_grid=None,
    n_samples: int = DEFAULT_SAMPLES,
    seed=0,
    include_inner: bool = True,
    log_base=2,
) -> dict[str, RegionCurve]:
    """All static curves keyed by label."""
    curves = [
        ideal_bound(params),
        proposed_outer(params, rho_grid, log_base),
        ps_baseline(params, rho_grid),
        iie_baseline(params, log_base),
    ]
    if include_inner:
        curves.insert(2, proposed_inner(params, rho_grid, n_samples, seed))
    return {c.label: c for c in curves}


def rate_at_energy(curve: RegionCurve, energy) -> np.ndarray:
    """Largest boundary rate available at each requested energy.

    Linear interpolation between boundary points; zero beyond the curve's
    largest energy.
    """
    energy = np.atleast_1d(np.asarray(energy, dtype=float))
    q, r = curve.energy, curve.rate
    out = np.zeros_like(energy)
    for k, e in enumerate(energy):
        best = 0.0
        for i in range(len(q)):
            if q[i] >= e:
                best = max(best, r[i])
            if i and q[i - 1] < e < q[i]:
                w = (e - q[i - 1]) / (q[i] - q[i - 1])
                best = max(best, (1 - w) * r[i - 1] + w * r[i])
        out[k] = best
    return out


def _fading_gains(n_fading, seed, gains):
    if gains is not None:
        gains = np.asarray(gains, dtype=float).ravel()
        if gains.size == 0 or np.any(gains < 0):
            raise ConfigError("fading gains must be a non-empty array of values >= 0")
        return gains
    if n_fading < 1000:
        raise ConfigError(f"n_fading must be at least 1000, got {n_fading}")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    # |h|^2 for h ~ CN(0, 1)
    return rng.exponential(1.0, size=int(n_fading))


def _mean_se(x: np.ndarray):
    x = np.asarray(x, dtype=float)
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return float(x.mean()), se


def ergodic_region(
    params: SystemParams,
    rho_grid=None,
    n_fading: int = 10_000,
    seed=0,
    fading_gains=None,
    log_base=2,
) -> dict[str, RegionCurve]:
    """Fading-averaged curves over Rayleigh draws of the channel.

    Each realisation scales the received power by ``|h|^2``; rates and
    energies are averaged pointwise. ``fading_gains`` replaces the random
    draws with explicit ``|h|^2`` values (``params.h`` is then ignored).
    """
    grid = _check_grid(default_rho_grid() if rho_grid is None else rho_grid)
    gains = _fading_gains(n_fading, seed, fading_gains)
    snr = gains * params.P
    zeta = params.zeta
    curves = {}

    def build(label, rates, energies, rho):
        stats_r = [_mean_se(r) for r in rates]
        stats_q = [_mean_se(q) for q in energies]
        return RegionCurve(
            label,
            rho,
            [s[0] for s in stats_r],
            [s[0] for s in stats_q],
            rate_std_error=np.array([s[1] for s in stats_r]),
            energy_std_error=np.array([s[1] for s in stats_q]),
            meta={"n_fading": int(gains.size), "seed": seed, "fading": "|h|^2 ~ Exp(1)"},
        )

    energies = [zeta * r * snr for r in grid]
    dpi = awgn_bits(snr, params.sigma2_ant + params.sigma2_eff)
    curves["ideal"] = build("ideal", [dpi, dpi], [0.0 * snr, zeta * snr], np.array([0.0, 1.0]))
    curves["proposed_outer"] = build(
        "proposed_outer", [rate_upper_bits(snr, r, params, log_base) for r in grid], energies, grid
    )
    curves["ps"] = build(
        "ps",
        [awgn_bits((1 - r) * snr, (1 - r) * params.sigma2_ant + params.sigma2_eff) for r in grid],
        energies,
        grid,
    )
    terms = [awgn_bits(snr, params.sigma2_ant + params.sigma2_rec)]
    if params.sigma2_rec > 0:
        terms.append(oic_bits(snr, params.sigma2_rec, log_base))
    if params.sigma2_ant > 0:
        terms.append(nac_bits(snr, params.sigma2_ant))
    r_iie = np.minimum(np.maximum(0.0, np.min(terms, axis=0)), dpi)
    curves["iie"] = build(
        "iie", [dpi, r_iie, r_iie], [0.0 * snr, 0.0 * snr, zeta * snr], np.array([0.0, 1.0, 1.0])
    )
    return curves


def curves_to_rows(curves) -> list[dict]:
    """Flatten curves into CSV-ready rows."""
    if isinstance(curves, RegionCurve):
        curves = [curves]
    elif isinstance(curves, dict):
        curves = list(curves.values())
    rows = []
    for c in curves:
        se = c.rate_std_error
        for i in range(len(c)):
            rows.append(
                {
                    "rho": float(c.rho[i]),
                    "rate_bits": float(c.rate[i]),
                    "energy_J": float(c.energy[i]),
                    "label": c.label,
                    "rate_std_error": "" if se is None else float(se[i]),
                }
            )
    return rows


def curves_to_csv(curves, provenance: dict | None = None) -> str:
    """CSV text with an optional ``#``-prefixed JSON provenance line."""
    buf = io.StringIO()
    if provenance is not None:
        buf.write("# " + json.dumps(provenance, sort_keys=True) + "\n")
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(curves_to_rows(curves))
    return buf.getvalue()


def curves_to_json(curves, provenance: dict | None = None) -> str:
    if isinstance(curves, RegionCurve):
        curves = [curves]
    elif isinstance(curves, dict):
        curves = list(curves.values())
    doc = {"curves": [c.to_dict() for c in curves]}
    if provenance is not None:
        doc["provenance"] = provenance
    return json.dumps(doc, indent=2, sort_keys=True)

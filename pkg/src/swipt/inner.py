"""Achievable-rate lower bound with complex Gaussian signalling.

The rectified path sees ``U + z_rec`` where ``U = |c + sqrt(rho) z_ant|^2``
and ``c = sqrt(rho h^2 P) x_a``. Given the amplitude, ``U`` is a scaled
noncentral chi-square with two degrees of freedom; without conditioning,
Gaussian input makes ``U`` exponential and the observation an
exponentially-modified Gaussian. The mutual information is estimated by
Monte Carlo over (x_a, observation) pairs with both densities evaluated
exactly (up to quadrature error) at every sample.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.special import log_ndtr

from . import _kernels
from .bounds import baseband_upper, total_dpi_upper
from .errors import ConfigError, DegenerateNoise, QuadratureFailure
from .system import PowerSplit, SystemParams, sample_rectified

__all__ = [
    "MiEstimate",
    "LowerBound",
    "conditional_density",
    "marginal_density",
    "log_marginal_density",
    "mi_rectified_gaussian_input",
    "lower_bound",
    "rate_lower",
]

DEFAULT_SAMPLES = 200_000
MIN_SAMPLES = 10_000
DEFAULT_REL_TOL = 1e-8
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class MiEstimate:
    """Monte-Carlo mutual-information estimate in bits.

    ``value`` is clamped at zero; ``raw_value`` keeps the unclamped sample
    mean. ``std_error`` is the jackknife standard error of the mean.
    ``quadrature_tol`` is the relative tolerance of the per-sample integrals.
    """

    value: float
    std_error: float
    n_samples: int
    quadrature_tol: float
    raw_value: float

    @property
    def half_width(self) -> float:
        """Half-width of the ~95% confidence interval."""
        return 1.96 * self.std_error

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LowerBound:
    """Lower-bound terms at one power split."""

    rho: float
    mi: MiEstimate
    baseband_ub: float
    total_dpi_ub: float
    rate_lb: float

    @property
    def std_error(self) -> float:
        return self.mi.std_error

    def to_dict(self) -> dict:
        out = asdict(self)
        out["std_error"] = self.std_error
        return out


def _channel(params: SystemParams, split: PowerSplit):
    """(signal power, antenna-noise variance, rectifier variance) of the rectified path."""
    rho = split.rho
    return rho * params.snr_gain, rho * params.sigma2_ant, params.sigma2_rec


def conditional_density(i_hat, x_a, params: SystemParams, split: PowerSplit, rel_tol=DEFAULT_REL_TOL):
    """Density of the rectified observation given the input amplitude.

    The squared envelope given ``x_a`` is a scaled noncentral chi-square
    (Rician envelope); the observation adds Gaussian rectifier noise. The
    convolution is integrated over the envelope by adaptive quadrature.

    Parameters
    ----------
    i_hat : float or array_like
        Observation value(s).
    x_a : float
        Input amplitude, non-negative.
    rel_tol : float
        Relative tolerance of each integral.

    Raises
    ------
    DegenerateNoise
        If the rectified path carries neither antenna nor rectifier noise.
    QuadratureFailure
        If an integral does not reach the tolerance.
    """
    if x_a < 0:
        raise ValueError("x_a must be non-negative")
    signal, s2, r2 = _channel(params, split)
    if s2 == 0 and r2 == 0:
        raise DegenerateNoise("rectified observation is noiseless; density is a point mass")
    x = np.asarray(i_hat, dtype=float)
    flat = np.ascontiguousarray(x.ravel())
    c = np.full(flat.shape, math.sqrt(signal) * x_a)
    log_p, status = _kernels.log_conditional(flat, c, s2, r2, rel_tol)
    if np.any(status != _kernels.OK):
        raise QuadratureFailure(f"conditional density did not converge for x_a={x_a}")
    out = np.exp(log_p).reshape(x.shape)
    return float(out) if out.ndim == 0 else out


def log_marginal_density(i_hat, params: SystemParams, split: PowerSplit):
    """Log density of the rectified observation under unit-power complex Gaussian input."""
    signal, s2, r2 = _channel(params, split)
    m = signal + s2
    x = np.asarray(i_hat, dtype=float)
    if m == 0 and r2 == 0:
        raise DegenerateNoise("rectified observation is identically zero")
    if m == 0:
        out = -0.5 * x * x / r2 - 0.5 * math.log(2.0 * math.pi * r2)
    elif r2 == 0:
        with np.errstate(divide="ignore"):
            out = np.where(x >= 0, -math.log(m) - x / m, -np.inf)
    else:
        r = math.sqrt(r2)
        out = -math.log(m) + r2 / (2.0 * m * m) - x / m + log_ndtr(x / r - r / m)
    return float(out) if np.ndim(out) == 0 else out


def marginal_density(i_hat, params: SystemParams, split: PowerSplit):
    """Exponentially-modified Gaussian density of the rectified observation.

    The noiseless envelope square is exponential with mean
    ``rho (h^2 P + sigma2_ant)``; rectifier noise adds a Gaussian.
    """
    out = np.exp(log_marginal_density(i_hat, params, split))
    return float(out) if np.ndim(out) == 0 else out


@lru_cache(maxsize=512)
def _mi_cached(signal, s2, r2, n_samples, seed, rel_tol):
    # depends only on the rectified-path constants, so sweeps over other
    # parameters (e.g. the baseband noise) reuse it
    params = SystemParams(P=signal, h=1.0, sigma2_ant=s2, sigma2_rec=r2)
    split = PowerSplit(1.0)
    amp_seed, noise_seed = np.random.SeedSequence(seed).spawn(2)
    rng = np.random.Generator(np.random.Philox(amp_seed))
    # |x| for x ~ CN(0, 1): Rayleigh with scale 1/sqrt(2)
    amp = rng.rayleigh(scale=math.sqrt(0.5), size=n_samples)
    obs = sample_rectified(params, split, amp, noise_seed, size=n_samples)
    log_c, status = _kernels.log_conditional(obs, math.sqrt(signal) * amp, s2, r2, rel_tol)
    if np.any(status != _kernels.OK):
        bad = int(np.count_nonzero(status))
        raise QuadratureFailure(f"{bad} of {n_samples} conditional-density integrals did not converge")
    terms = (log_c - log_marginal_density(obs, params, split)) / _LN2
    mean = float(terms.mean())
    # jackknife standard error of a sample mean reduces to s / sqrt(n)
    se = float(terms.std(ddof=1) / math.sqrt(n_samples))
    return mean, se


def mi_rectified_gaussian_input(
    params: SystemParams,
    split: PowerSplit,
    n_samples: int = DEFAULT_SAMPLES,
    seed=0,
    rel_tol: float = DEFAULT_REL_TOL,
) -> MiEstimate:
    """Estimate I(observation; x_a) in bits for complex Gaussian input.

    Parameters
    ----------
    n_samples : int
        Number of Monte-Carlo pairs, at least 10^4.
    seed : int or sequence of int
        Seed for the amplitude and noise draws.
    rel_tol : float
        Relative tolerance of each per-sample density integral.
    """
    n_samples = int(n_samples)
    if n_samples < MIN_SAMPLES:
        raise ConfigError(f"n_samples must be at least {MIN_SAMPLES}, got {n_samples}")
    signal, s2, r2 = _channel(params, split)
    if signal == 0:
        # observation independent of the input
        return MiEstimate(0.0, 0.0, n_samples, rel_tol, 0.0)
    if s2 == 0 and r2 == 0:
        raise DegenerateNoise("noiseless rectified path has unbounded information")
    key = tuple(np.atleast_1d(seed).tolist()) if seed is not None else None
    if key is None:
        mean, se = _mi_cached.__wrapped__(signal, s2, r2, n_samples, None, rel_tol)
    else:
        mean, se = _mi_cached(signal, s2, r2, n_samples, key, rel_tol)
    return MiEstimate(max(0.0, mean), se, n_samples, rel_tol, mean)


def lower_bound(
    params: SystemParams,
    split: PowerSplit,
    n_samples: int = DEFAULT_SAMPLES,
    seed=0,
    rel_tol: float = DEFAULT_REL_TOL,
) -> LowerBound:
    """Rectified-path MI plus the Gaussian-input baseband rate, capped at the end-to-end bound.

    The two branches share antenna noise, so their rates cannot add beyond
    what the undivided signal supports; the cap keeps the estimate a valid
    lower bound.
    """
    mi = mi_rectified_gaussian_input(params, split, n_samples, seed, rel_tol)
    base = baseband_upper(params, split)
    dpi = total_dpi_upper(params)
    return LowerBound(split.rho, mi, base, dpi, min(mi.value + base, dpi))


def rate_lower(
    params: SystemParams,
    split: PowerSplit,
    n_samples: int = DEFAULT_SAMPLES,
    seed=0,
    rel_tol: float = DEFAULT_REL_TOL,
) -> float:
    """Achievable rate (bits) with complex Gaussian input; see :func:`lower_bound`."""
    return lower_bound(params, split, n_samples, seed, rel_tol).rate_lb

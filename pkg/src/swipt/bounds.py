"""Closed-form rate bounds for the unified (rectifier + baseband) receiver.

All rates are in bits per channel use. Individual bound terms are returned
raw (they may be slightly negative at very low SNR); clamping happens only
when the terms are combined in :func:`rate_upper`.

The array-valued ``*_bits`` helpers take the relevant signal power directly
and are what the region sweeps use; the ``params``/``split`` functions are
thin scalar wrappers around them.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import erfc, erfcx

from .errors import DegenerateNoise
from .system import PowerSplit, SystemParams

__all__ = [
    "EULER_GAMMA",
    "OicParams",
    "BoundBreakdown",
    "q_function",
    "oic_params",
    "oic_bound",
    "c_oic_upper",
    "c_nac_upper",
    "rect_gaussian_upper",
    "baseband_upper",
    "total_dpi_upper",
    "rate_upper",
    "oic_bits",
    "nac_bits",
    "awgn_bits",
    "rate_upper_bits",
]

EULER_GAMMA = 0.5772156649015329
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
_LN2 = math.log(2.0)
# 0.5 * (log2(2 pi / e) - c_E log2 e)
NAC_OFFSET_BITS = 0.5 * (math.log2(2.0 * math.pi / math.e) - EULER_GAMMA / _LN2)


def q_function(x):
    """Gaussian tail probability Q(x) = P(N(0, 1) > x)."""
    out = 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)
    return out if np.ndim(out) else float(out)


def _scaled_q(x):
    """exp(x^2 / 2) * Q(x), finite for large x."""
    return 0.5 * erfcx(np.asarray(x, dtype=float) / _SQRT2)


@dataclass(frozen=True)
class OicParams:
    delta: float
    beta: float

    def __post_init__(self):
        if self.delta < 0 or not self.beta > 0:
            raise ValueError(f"need delta >= 0 and beta > 0, got {self}")


@dataclass(frozen=True)
class BoundBreakdown:
    """Terms of the combined outer bound at one power split.

    ``c_oic_ub`` / ``c_nac_ub`` are None when the corresponding noise source
    is absent and the bound does not apply.
    """

    rho: float
    c_oic_ub: float | None
    c_nac_ub: float | None
    rect_gaussian_ub: float
    rectified_ub: float
    baseband_ub: float
    total_dpi_ub: float
    rate_ub: float

    def to_dict(self) -> dict:
        return asdict(self)


def _oic_delta_beta(signal, sigma, log_base):
    log = np.log2 if log_base == 2 else np.log
    delta = sigma * log(1.0 + signal / sigma)
    t = delta / sigma
    a = delta + signal + sigma / _SQRT2PI * np.exp(-0.5 * t * t)
    beta = 0.5 * a + 0.5 * np.sqrt(a * a + 4.0 * a * _SQRT2PI * sigma * _scaled_q(t))
    return delta, beta


def _oic_nats(beta, delta, signal, sigma):
    t = delta / sigma
    g = np.exp(-0.5 * t * t)
    # log(beta g + sqrt(2 pi) sigma Q(t)) + t^2/2 (1 - Q((delta + E)/sigma)), rearranged
    # so the large Gaussian exponents cancel analytically
    head = np.log(beta + _SQRT2PI * sigma * _scaled_q(t)) - 0.5 * t * t * q_function(
        (delta + signal) / sigma
    )
    return (
        head
        + 0.5 * q_function(t)
        + (delta + signal + sigma * g / _SQRT2PI) / beta
        + delta * g / (2.0 * _SQRT2PI * sigma)
        - 0.5 * np.log(2.0 * math.pi * math.e * sigma * sigma)
    )


def oic_bits(signal, sigma2_rec, log_base=2):
    """Optical-intensity-channel capacity upper bound (bits) at mean intensity ``signal``."""
    if np.any(np.asarray(sigma2_rec) <= 0):
        raise DegenerateNoise("intensity-channel bound needs rectifier noise > 0")
    signal = np.asarray(signal, dtype=float)
    sigma = np.sqrt(sigma2_rec)
    delta, beta = _oic_delta_beta(signal, sigma, log_base)
    return _oic_nats(beta, delta, signal, sigma) / _LN2


def nac_bits(signal, noise_var):
    """Noncoherent AWGN capacity upper bound (bits)."""
    noise_var = np.asarray(noise_var, dtype=float)
    if np.any(noise_var <= 0):
        raise DegenerateNoise("noncoherent bound needs antenna noise on the rectified path")
    return 0.5 * np.log2(1.0 + np.asarray(signal) / noise_var) + NAC_OFFSET_BITS


def awgn_bits(signal, noise_var):
    """log2(1 + signal / noise_var); zero signal gives zero regardless of noise."""
    signal = np.asarray(signal, dtype=float)
    noise_var = np.asarray(noise_var, dtype=float)
    if np.any((noise_var <= 0) & (signal > 0)):
        raise DegenerateNoise("Gaussian-signalling bound with zero noise is unbounded")
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = np.where(signal > 0, signal / np.where(noise_var > 0, noise_var, 1.0), 0.0)
    return np.log2(1.0 + snr)


def _as_float(x):
    return float(x) if np.ndim(x) == 0 else x


def oic_params(params: SystemParams, split: PowerSplit, log_base=2) -> OicParams:
    """Shift ``delta`` and scale ``beta`` that nearly minimise :func:`oic_bound`."""
    if params.sigma2_rec <= 0:
        raise DegenerateNoise("delta is undefined without rectifier noise")
    signal = split.rho * params.snr_gain
    delta, beta = _oic_delta_beta(signal, math.sqrt(params.sigma2_rec), log_base)
    return OicParams(float(delta), float(beta))


def oic_bound(beta, delta, signal, sigma2_rec):
    """Intensity-channel bound in bits for arbitrary free parameters (beta > 0, delta >= 0)."""
    return _as_float(_oic_nats(beta, delta, signal, math.sqrt(sigma2_rec)) / _LN2)


def c_oic_upper(params: SystemParams, split: PowerSplit, log_base=2) -> float:
    p = oic_params(params, split, log_base)
    return oic_bound(p.beta, p.delta, split.rho * params.snr_gain, params.sigma2_rec)


def c_nac_upper(params: SystemParams, split: PowerSplit) -> float:
    # residual noise on the rectified path without rectifier noise is sqrt(rho) z_ant
    return float(nac_bits(split.rho * params.snr_gain, split.rho * params.sigma2_ant))


def rect_gaussian_upper(params: SystemParams, split: PowerSplit) -> float:
    rho = split.rho
    return float(
        awgn_bits(rho * params.snr_gain, rho * params.sigma2_ant + params.sigma2_rec)
    )


def baseband_upper(params: SystemParams, split: PowerSplit) -> float:
    keep = 1.0 - split.rho
    return float(
        awgn_bits(keep * params.snr_gain, keep * params.sigma2_ant + params.sigma2_eff)
    )


def total_dpi_upper(params: SystemParams) -> float:
    return float(awgn_bits(params.snr_gain, params.sigma2_ant + params.sigma2_eff))


def rate_upper(params: SystemParams, split: PowerSplit, log_base=2) -> BoundBreakdown:
    """Combined outer bound on the achievable rate at one power split.

    The rectified-path contribution is the smallest applicable bound, floored
    at zero; it is added to the baseband term and capped by the end-to-end
    data-processing bound.
    """
    rho = split.rho
    oic = c_oic_upper(params, split, log_base) if params.sigma2_rec > 0 else None
    nac = c_nac_upper(params, split) if rho * params.sigma2_ant > 0 else None
    rect = rect_gaussian_upper(params, split)
    terms = [t for t in (oic, nac, rect) if t is not None]
    rectified = max(0.0, min(terms))
    base = baseband_upper(params, split)
    dpi = total_dpi_upper(params)
    rate = max(0.0, min(rectified + base, dpi))
    return BoundBreakdown(rho, oic, nac, rect, rectified, base, dpi, rate)


def rate_upper_bits(snr_gain, rho, params: SystemParams, log_base=2):
    """Combined outer bound for an array of received powers ``h^2 P``.

    Same combination rule as :func:`rate_upper`; noise variances, ``rho``
    and the applicable-term logic come from ``params``.
    """
    gain = np.asarray(snr_gain, dtype=float)
    keep = 1.0 - rho
    terms = [awgn_bits(rho * gain, rho * params.sigma2_ant + params.sigma2_rec)]
    if params.sigma2_rec > 0:
        terms.append(oic_bits(rho * gain, params.sigma2_rec, log_base))
    if rho * params.sigma2_ant > 0:
        terms.append(nac_bits(rho * gain, rho * params.sigma2_ant))
    rectified = np.maximum(0.0, np.min(terms, axis=0))
    base = awgn_bits(keep * gain, keep * params.sigma2_ant + params.sigma2_eff)
    dpi = awgn_bits(gain, params.sigma2_ant + params.sigma2_eff)
    return np.maximum(0.0, np.minimum(rectified + base, dpi))

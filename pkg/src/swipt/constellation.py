"""Multi-ring circular QAM and the three-dimensional observation model.

A symbol ``s`` produces the noiseless observation
``u = [a Re(s), a Im(s), b |s|^2]`` with ``a = sqrt(P (1 - rho)) h`` and
``b = P rho h^2``: in-phase and quadrature samples of the baseband branch
and the level of the rectified branch. The baseband noise and the linear
part of the rectified noise share the antenna noise, so the covariance of
the observation noise depends on the transmitted symbol.

Observation subsets are selected with ``dims``: ``(0, 1, 2)`` is the full
statistic, ``(0, 1)`` the baseband-only receiver and ``(2,)`` the
rectified-only receiver.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .bounds import q_function
from .errors import ConfigError, InfeasibleGeometry, SingularCovariance
from .system import PowerSplit, SystemParams

__all__ = [
    "FULL",
    "Constellation",
    "NoiseModel3D",
    "build_constellation",
    "symbol_statistic",
    "noise_covariance",
    "noise_models",
    "ml_detect",
    "pairwise_error_probability",
    "whitened_distances",
    "pep_matrix",
]

FULL = (0, 1, 2)


@dataclass(frozen=True)
class Constellation:
    """Rings at radii ``2 k d`` (k = 1..N_a) with ``M_k`` equally spaced points.

    Point ``i`` of ring ``k`` sits at angle ``phase_offsets[k] + 2 pi i / M_k``.
    Symbols are indexed ring by ring, innermost first.
    """

    points_per_ring: tuple[int, ...]
    d: float
    phase_offsets: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "points_per_ring", tuple(int(m) for m in self.points_per_ring))
        object.__setattr__(self, "phase_offsets", tuple(float(p) for p in self.phase_offsets))
        if len(self.phase_offsets) != len(self.points_per_ring):
            raise ConfigError("need one phase offset per ring")

    @property
    def n_rings(self) -> int:
        return len(self.points_per_ring)

    @property
    def M(self) -> int:
        return sum(self.points_per_ring)

    @property
    def radii(self) -> np.ndarray:
        return 2.0 * self.d * np.arange(1, self.n_rings + 1)

    @property
    def ring_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_rings), self.points_per_ring)

    @property
    def angles(self) -> np.ndarray:
        return np.concatenate(
            [phi + 2.0 * np.pi * np.arange(m) / m for m, phi in zip(self.points_per_ring, self.phase_offsets)]
        )

    @property
    def symbols(self) -> np.ndarray:
        return self.radii[self.ring_index] * np.exp(1j * self.angles)

    @property
    def power(self) -> float:
        """Average symbol energy."""
        return float(np.mean(np.abs(self.symbols) ** 2))

    def to_dict(self) -> dict:
        return {
            "points_per_ring": list(self.points_per_ring),
            "radii": self.radii.tolist(),
            "phase_offsets": list(self.phase_offsets),
            "angles": self.angles.tolist(),
            "d": self.d,
            "power": self.power,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "Constellation":
        rings = doc["points_per_ring"]
        offsets = doc.get("phase_offsets", [0.0] * len(rings))
        return cls(tuple(rings), float(doc["d"]), tuple(offsets))


def _ring_sizes(n_rings, points_per_ring) -> tuple[int, ...]:
    if np.ndim(points_per_ring) == 0:
        total = int(points_per_ring)
        if n_rings < 1 or total % n_rings:
            raise ConfigError(f"cannot split {total} points evenly over {n_rings} rings")
        return (total // n_rings,) * n_rings
    sizes = tuple(int(m) for m in points_per_ring)
    if n_rings is not None and len(sizes) != n_rings:
        raise ConfigError(f"expected {n_rings} ring sizes, got {len(sizes)}")
    return sizes


def build_constellation(
    n_rings: int | None, points_per_ring, target_power: float = 1.0, phase_offset: float = 0.0
) -> Constellation:
    """Constellation whose ring spacing uses the whole power budget.

    Parameters
    ----------
    n_rings : int or None
        Number of rings; inferred from ``points_per_ring`` when None.
    points_per_ring : int or sequence of int
        Points on each ring, innermost first. An integer is the total count,
        split evenly across ``n_rings``.
    target_power : float
        Average symbol energy to meet with equality.
    phase_offset : float
        Common angular offset of every ring.
    """
    sizes = _ring_sizes(n_rings, points_per_ring)
    if not sizes or min(sizes) < 1:
        raise ConfigError("every ring needs at least one point")
    if not target_power > 0:
        raise InfeasibleGeometry(f"target power must be positive, got {target_power}")
    k = np.arange(1, len(sizes) + 1)
    m = np.asarray(sizes, dtype=float)
    # (1/M) sum_k M_k (2 k d)^2 = target_power
    d = math.sqrt(target_power * m.sum() / (4.0 * float(np.sum(m * k * k))))
    return Constellation(sizes, d, (float(phase_offset),) * len(sizes))


def _gains(params: SystemParams, split: PowerSplit):
    rho = split.rho
    a = math.sqrt(params.P * (1.0 - rho)) * params.h
    b = params.P * rho * params.h**2
    return a, b


def symbol_statistic(symbol, params: SystemParams, split: PowerSplit) -> np.ndarray:
    """Noiseless observation ``u`` for one symbol or an array of symbols (last axis of size 3)."""
    s = np.asarray(symbol, dtype=complex)
    a, b = _gains(params, split)
    return np.stack([a * s.real, a * s.imag, b * np.abs(s) ** 2], axis=-1)


def _covariances(symbols, params: SystemParams, split: PowerSplit) -> np.ndarray:
    s = np.atleast_1d(np.asarray(symbols, dtype=complex))
    rho = split.rho
    rot = s * np.exp(1j * params.theta)
    scale = 2.0 * math.sqrt(params.P) * rho * params.h
    alpha1 = scale * rot.real
    alpha2 = scale * rot.imag
    keep = math.sqrt(1.0 - rho)
    var_ant = params.sigma2_ant
    cov = np.zeros(s.shape + (3, 3))
    base = 0.5 * ((1.0 - rho) * var_ant + params.sigma2_eff)
    cov[..., 0, 0] = base
    cov[..., 1, 1] = base
    cov[..., 2, 2] = 0.5 * ((alpha1**2 + alpha2**2) * var_ant + 2.0 * params.sigma2_rec)
    cov[..., 0, 2] = cov[..., 2, 0] = 0.5 * alpha1 * keep * var_ant
    cov[..., 1, 2] = cov[..., 2, 1] = 0.5 * alpha2 * keep * var_ant
    return cov


def _cholesky(cov: np.ndarray) -> np.ndarray:
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("noise covariance is not positive definite") from exc
    diag = np.diagonal(chol, axis1=-2, axis2=-1)
    if not np.all(diag > 0) or not np.all(np.isfinite(chol)):
        raise SingularCovariance("noise covariance is not positive definite")
    return chol


@dataclass(frozen=True)
class NoiseModel3D:
    """Mean, covariance and whitening factors for one symbol.

    ``chol`` is lower triangular with ``chol @ chol.T == cov``; ``whitener``
    is its inverse. Both are restricted to the observation dimensions in
    ``dims``.
    """

    mean: np.ndarray
    cov: np.ndarray
    chol: np.ndarray
    whitener: np.ndarray
    dims: tuple[int, ...] = FULL

    def whiten(self, y) -> np.ndarray:
        """``whitener @ (y - mean)`` for one or many observations."""
        y = np.asarray(y, dtype=float)
        return (y - self.mean) @ self.whitener.T

    @property
    def logdet(self) -> float:
        return float(2.0 * np.sum(np.log(np.diag(self.chol))))


def noise_covariance(symbol, params: SystemParams, split: PowerSplit, dims=FULL) -> NoiseModel3D:
    """Observation-noise model for a single transmitted symbol.

    Raises
    ------
    SingularCovariance
        If the selected covariance block is not positive definite.
    """
    dims = tuple(dims)
    mean = symbol_statistic(symbol, params, split)[list(dims)]
    cov = _covariances(symbol, params, split)[0][np.ix_(dims, dims)]
    chol = _cholesky(cov)
    whitener = np.linalg.inv(chol)
    return NoiseModel3D(mean, cov, chol, whitener, dims)


def noise_models(constellation: Constellation, params: SystemParams, split: PowerSplit, dims=FULL):
    """Stacked (means, covariances, Cholesky factors) for every symbol, restricted to ``dims``."""
    dims = list(dims)
    s = constellation.symbols
    means = symbol_statistic(s, params, split)[:, dims]
    covs = _covariances(s, params, split)[:, dims][:, :, dims]
    return means, covs, _cholesky(covs)


def whitened_distances(
    constellation: Constellation, params: SystemParams, split: PowerSplit, dims=FULL
) -> np.ndarray:
    """``D[i, j] = || chol_i^{-1} (u_i - u_j) ||`` using the transmitted symbol's covariance."""
    means, covs, _ = noise_models(constellation, params, split, dims)
    diff = means[:, None, :] - means[None, :, :]
    prec = np.linalg.inv(covs)
    d2 = np.einsum("ijk,ikl,ijl->ij", diff, prec, diff)
    return np.sqrt(np.maximum(d2, 0.0))


def pep_matrix(
    constellation: Constellation, params: SystemParams, split: PowerSplit, dims=FULL
) -> np.ndarray:
    """Pairwise error probabilities ``P[i, j]`` (i sent, j preferred); zero diagonal."""
    pep = q_function(0.5 * whitened_distances(constellation, params, split, dims))
    pep = np.atleast_2d(pep)
    np.fill_diagonal(pep, 0.0)
    return pep


def pairwise_error_probability(
    i: int, j: int, constellation: Constellation, params: SystemParams, split: PowerSplit, dims=FULL
) -> float:
    """``Q(||chol_i^{-1} (u_i - u_j)|| / 2)`` for transmitted symbol ``i``."""
    if i == j:
        raise ValueError("pairwise error probability needs two distinct indices")
    s = constellation.symbols
    model = noise_covariance(s[i], params, split, dims)
    other = symbol_statistic(s[j], params, split)[list(model.dims)]
    dist = float(np.linalg.norm(model.whitener @ (model.mean - other)))
    return q_function(0.5 * dist)


def ml_detect(
    y,
    constellation: Constellation,
    params: SystemParams,
    split: PowerSplit,
    logdet: bool = False,
    dims=FULL,
    chunk: int = 8192,
):
    """Minimum whitened-distance decision with per-candidate covariance.

    Parameters
    ----------
    y : array_like, shape (len(dims),) or (n, len(dims))
        Observation(s) restricted to ``dims``.
    logdet : bool
        Add ``log det`` of each candidate covariance (exact Gaussian ML).

    Returns
    -------
    int or ndarray of int
        Index of the decided symbol; ties go to the lowest index.
    """
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    means, _, chol = noise_models(constellation, params, split, dims)
    whiteners = np.linalg.inv(chol)
    penalty = 2.0 * np.sum(np.log(np.diagonal(chol, axis1=-2, axis2=-1)), axis=-1) if logdet else None
    out = np.empty(y.shape[0], dtype=np.int64)
    for start in range(0, y.shape[0], chunk):
        block = y[start : start + chunk]
        diff = block[:, None, :] - means[None, :, :]
        z = np.einsum("mij,nmj->nmi", whiteners, diff)
        score = np.sum(z * z, axis=-1)
        if penalty is not None:
            score = score + penalty
        out[start : start + chunk] = np.argmin(score, axis=1)
    return int(out[0]) if single else out

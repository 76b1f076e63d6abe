"""Integer search for the largest constellation meeting a pairwise-error target.

Feasibility of a design is decided on whitened distances: every ordered
pair must satisfy ``||chol_i^{-1} (u_i - u_j)|| >= 2 Q^{-1}(target)``,
which is the same as bounding each pairwise error probability by the
target. A cheap pass over nearest neighbours (adjacent points on a ring
and same-angle points on adjacent rings) rejects most large designs before
the full pairwise check.

Receiver modes
--------------
proposed
    Full three-dimensional statistic at the design split.
ps
    In-phase/quadrature samples only, at the design split.
iie
    Rectified level only with all power rectified; one point per ring
    (amplitude levels), independent of the design split.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.special import ndtri

from .constellation import (
    FULL,
    Constellation,
    build_constellation,
    noise_models,
    whitened_distances,
)
from .bounds import q_function
from .errors import ConfigError, SingularCovariance
from .system import PowerSplit, SystemParams

__all__ = [
    "MODES",
    "DesignPoint",
    "OptimizationResult",
    "mode_dims",
    "resolve_params",
    "check_feasible",
    "solve_p2",
    "solve_p1",
    "sweep_rho",
    "staircase",
    "staircase_csv",
    "table_grid",
]

MODES = ("proposed", "ps", "iie")
NOISE_MODES = ("preset", "eb_n0")
MAX_RINGS = 32


@dataclass(frozen=True)
class DesignPoint:
    """Operating point of a constellation design.

    Attributes
    ----------
    rho : float
        Power split.
    target_pep : float
        Bound on every pairwise error probability, in (0, 1/2).
    params : SystemParams
        Scenario; ``P`` is the average received-symbol power budget.
    mode : str
        Receiver model, one of ``MODES``.
    noise_mode : str
        ``"eb_n0"`` (default) sets every noise variance (antenna, rectifier,
        effective) to ``N0 = h^2 P / (log2(M) 10^(eb_n0_db / 10))`` for each
        candidate order ``M``, i.e. a fixed received bit-energy to noise
        ratio. ``"preset"`` uses the noise variances of ``params`` as given.
    eb_n0_db : float
        Bit-energy to noise ratio used by the ``eb_n0`` noise mode.
    min_rings : int
        Fewest rings a multi-ring design may use. The default of 2 excludes
        single-ring PSK; the rectified-only receiver ignores it.
    """

    rho: float
    target_pep: float = 1e-3
    params: SystemParams = field(default_factory=SystemParams)
    mode: str = "proposed"
    noise_mode: str = "eb_n0"
    eb_n0_db: float = 20.0
    min_rings: int = 2

    def __post_init__(self):
        if not 0.0 < self.target_pep < 0.5:
            raise ConfigError(f"target_pep must lie in (0, 1/2), got {self.target_pep}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.noise_mode not in NOISE_MODES:
            raise ConfigError(f"noise_mode must be one of {NOISE_MODES}, got {self.noise_mode!r}")
        if not 1 <= self.min_rings <= MAX_RINGS:
            raise ConfigError(f"min_rings must lie in [1, {MAX_RINGS}], got {self.min_rings}")
        PowerSplit(self.rho)

    def with_rho(self, rho: float) -> "DesignPoint":
        return replace(self, rho=float(rho))

    @property
    def split(self) -> PowerSplit:
        return PowerSplit(1.0 if self.mode == "iie" else self.rho)

    @property
    def distance_threshold(self) -> float:
        """Smallest whitened distance whose pairwise error meets the target."""
        return -2.0 * float(ndtri(self.target_pep))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["params"] = self.params.to_dict()
        return out


@dataclass(frozen=True)
class OptimizationResult:
    """Best design found for one design point.

    Infeasible points (not even two symbols meet the target) report
    ``best_M = 1`` and ``best_N_a = 0``, shown as ``(0, 0)`` in tables.
    ``binding_pair`` is the ordered pair attaining ``achieved_max_pep``.
    """

    rho: float
    target_pep: float
    mode: str
    best_M: int
    best_N_a: int
    points_per_ring: tuple[int, ...]
    achieved_max_pep: float
    feasible: bool
    binding_pair: tuple[int, int] | None = None
    constellation: Constellation | None = None
    params: SystemParams | None = None

    @property
    def log2_M(self) -> int:
        return int(round(math.log2(self.best_M))) if self.feasible else 0

    @property
    def log2_N_a(self) -> int:
        return int(round(math.log2(self.best_N_a))) if self.feasible else 0

    @property
    def cell(self) -> tuple[int, int]:
        return (self.log2_M, self.log2_N_a)

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "target_pep": self.target_pep,
            "mode": self.mode,
            "best_M": self.best_M,
            "best_N_a": self.best_N_a,
            "log2_M": self.log2_M,
            "log2_N_a": self.log2_N_a,
            "points_per_ring": list(self.points_per_ring),
            "achieved_max_pep": self.achieved_max_pep,
            "feasible": self.feasible,
            "binding_pair": None if self.binding_pair is None else list(self.binding_pair),
        }


def mode_dims(mode: str) -> tuple[int, ...]:
    return {"proposed": FULL, "ps": (0, 1), "iie": (2,)}[mode]


def resolve_params(point: DesignPoint, M: int) -> SystemParams:
    """Scenario used to evaluate an order-``M`` design at ``point``."""
    if point.noise_mode == "preset" or M < 2:
        return point.params
    n0 = point.params.snr_gain / (math.log2(M) * 10.0 ** (point.eb_n0_db / 10.0))
    return point.params.replace(sigma2_ant=n0, sigma2_rec=n0, sigma2_eff=n0)


def _neighbour_pairs(sizes: tuple[int, ...]) -> np.ndarray:
    """Index pairs of nearest neighbours: along each ring and across adjacent rings."""
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    pairs = []
    for k, m in enumerate(sizes):
        base = offsets[k]
        if m > 1:
            idx = np.arange(m)
            pairs.append(np.stack([base + idx, base + (idx + 1) % m], axis=1))
        if k + 1 < len(sizes):
            # closest point on the next ring to each point of this ring
            m2 = sizes[k + 1]
            ang = np.arange(m) / m
            j = np.rint(ang * m2).astype(int) % m2
            pairs.append(np.stack([base + np.arange(m), offsets[k + 1] + j], axis=1))
    if not pairs:
        return np.zeros((0, 2), dtype=int)
    pairs = np.concatenate(pairs)
    return np.concatenate([pairs, pairs[:, ::-1]])


def _pair_distances(means, covs, pairs) -> np.ndarray:
    i, j = pairs[:, 0], pairs[:, 1]
    diff = means[i] - means[j]
    z = np.linalg.solve(covs[i], diff[..., None])[..., 0]
    return np.sqrt(np.maximum(np.sum(diff * z, axis=-1), 0.0))


def _min_distance(con: Constellation, params: SystemParams, split: PowerSplit, dims, threshold):
    """(min whitened distance, binding pair), short-circuiting when a neighbour already fails."""
    if con.M < 2:
        return math.inf, None
    try:
        means, covs, _ = noise_models(con, params, split, dims)
    except SingularCovariance:
        return 0.0, (0, 1)
    pairs = _neighbour_pairs(con.points_per_ring)
    if len(pairs):
        near = _pair_distances(means, covs, pairs)
        k = int(np.argmin(near))
        if near[k] < threshold:
            return float(near[k]), (int(pairs[k, 0]), int(pairs[k, 1]))
    dist = whitened_distances(con, params, split, dims)
    np.fill_diagonal(dist, np.inf)
    k = int(np.argmin(dist))
    i, j = divmod(k, con.M)
    return float(dist[i, j]), (i, j)


def check_feasible(constellation: Constellation, point: DesignPoint):
    """Evaluate the pairwise-error constraint over all ordered pairs.

    Returns
    -------
    (bool, float)
        Whether every pairwise error probability is within the target, and
        the largest one.
    """
    if constellation.M < 2:
        return True, 0.0
    params = resolve_params(point, constellation.M)
    dist, _ = _min_distance(constellation, params, point.split, mode_dims(point.mode), -math.inf)
    max_pep = q_function(0.5 * dist)
    return bool(max_pep <= point.target_pep), max_pep


def _candidate_rings(M: int, point: DesignPoint):
    """Power-of-two ring counts dividing ``M`` (P2 search space)."""
    if point.mode == "iie":
        return [M] if M <= MAX_RINGS else []
    out = []
    n = 1
    while n <= min(M, MAX_RINGS):
        if M % n == 0 and n >= point.min_rings:
            out.append(n)
        n *= 2
    return out


def _evaluate(point: DesignPoint, sizes: tuple[int, ...]):
    con = build_constellation(None, sizes, 1.0)
    params = resolve_params(point, con.M)
    dist, pair = _min_distance(
        con, params, point.split, mode_dims(point.mode), point.distance_threshold
    )
    return con, params, dist, pair


def _result(point, con, params, dist, pair) -> OptimizationResult:
    pep = q_function(0.5 * dist) if math.isfinite(dist) else 0.0
    return OptimizationResult(
        rho=point.rho,
        target_pep=point.target_pep,
        mode=point.mode,
        best_M=con.M,
        best_N_a=con.n_rings,
        points_per_ring=con.points_per_ring,
        achieved_max_pep=float(pep),
        feasible=True,
        binding_pair=pair,
        constellation=con,
        params=params,
    )


def _infeasible(point, pep=0.5, pair=None) -> OptimizationResult:
    return OptimizationResult(
        point.rho, point.target_pep, point.mode, 1, 0, (), float(pep), False, pair
    )


def solve_p2(point: DesignPoint, M_cap: int = 1024) -> OptimizationResult:
    """Largest power-of-two order with equal ring populations meeting the target.

    Among feasible designs of the largest order the one with the smallest
    maximal pairwise error wins; remaining ties go to fewer rings. When no
    design is feasible the result is infeasible and reports the smallest
    maximal pairwise error among the smallest-order designs.

    Parameters
    ----------
    point : DesignPoint
    M_cap : int
        Largest order searched (rounded down to a power of two).
    """
    if M_cap < 2:
        raise ConfigError("M_cap must be at least 2")
    best = None
    best_key = None
    fallback = (0.0, None)
    fallback_M = None
    M = 2
    while M <= M_cap:
        for n_rings in _candidate_rings(M, point):
            sizes = (M // n_rings,) * n_rings
            con, params, dist, pair = _evaluate(point, sizes)
            fallback_M = M if fallback_M is None else fallback_M
            if M == fallback_M and dist > fallback[0]:
                fallback = (dist, pair)
            if dist < point.distance_threshold:
                continue
            # larger M first, then larger min distance (smaller PEP), then fewer rings
            key = (M, dist, -n_rings)
            if best_key is None or key > best_key:
                best_key = key
                best = (con, params, dist, pair)
        M *= 2
    if best is None:
        return _infeasible(point, q_function(0.5 * fallback[0]), fallback[1])
    return _result(point, *best)


def _partitions(total: int, parts: int, smallest: int = 1):
    """Non-decreasing tuples of ``parts`` positive integers summing to ``total``."""
    if parts == 1:
        if total >= smallest:
            yield (total,)
        return
    for first in range(smallest, total // parts + 1):
        for rest in _partitions(total - first, parts - 1, first):
            yield (first,) + rest


def _p1_candidates(M: int, point: DesignPoint, max_rings: int):
    if point.mode == "iie":
        if M <= MAX_RINGS:
            yield (1,) * M
        return
    seen = set()
    for n_rings in range(point.min_rings, min(max_rings, M) + 1):
        for sizes in _partitions(M, n_rings):
            seen.add(sizes)
            yield sizes
    # equal populations on more rings keep the P2 designs inside the search space
    for n_rings in range(point.min_rings, min(M, MAX_RINGS) + 1):
        sizes = (M // n_rings,) * n_rings
        if M % n_rings == 0 and sizes not in seen:
            yield sizes


def solve_p1(point: DesignPoint, M_cap: int = 32, max_rings: int = 8) -> OptimizationResult:
    """Largest order with free ring populations meeting the target.

    Searches every order ``M <= M_cap`` from the top down, over ring
    populations that do not decrease outwards (outer rings have more room)
    with at most ``max_rings`` rings, plus every equal-population design;
    the first order with a feasible design is optimal over that space.
    Ties are broken as in :func:`solve_p2`, then lexicographically on the
    populations. The search space grows quickly with ``M_cap``: about
    2 * 10^4 designs for the default.
    """
    if M_cap < 2:
        raise ConfigError("M_cap must be at least 2")
    fallback = (0.0, None)
    for M in range(M_cap, 1, -1):
        best = None
        best_key = None
        for sizes in _p1_candidates(M, point, max_rings):
            con, params, dist, pair = _evaluate(point, sizes)
            if dist > fallback[0]:
                fallback = (dist, pair)
            if dist < point.distance_threshold:
                continue
            key = (dist, -len(sizes), tuple(-s for s in sizes))
            if best_key is None or key > best_key:
                best_key = key
                best = (con, params, dist, pair)
        if best is not None:
            return _result(point, *best)
    return _infeasible(point, q_function(0.5 * fallback[0]), fallback[1])


def table_grid(step: float = 1.0 / 40.0) -> np.ndarray:
    """Uniform split grid ``0, step, ..., 1``."""
    n = int(round(1.0 / step))
    return np.arange(n + 1) / n


@lru_cache(maxsize=4096)
def _solve_cached(point: DesignPoint, M_cap: int) -> OptimizationResult:
    return solve_p2(point, M_cap)


def sweep_rho(template: DesignPoint, rho_grid=None, mode: str | None = None, M_cap: int = 1024):
    """Solve P2 at every split of ``rho_grid`` for one receiver mode.

    Returns a list of :class:`OptimizationResult`, one per grid value. The
    rectified-only receiver does not depend on the split, so it is solved
    once and repeated.
    """
    grid = table_grid() if rho_grid is None else np.asarray(rho_grid, dtype=float)
    if grid.size == 0:
        raise ConfigError("rho grid is empty")
    point = template if mode is None else replace(template, mode=mode)
    if point.mode == "iie":
        base = _solve_cached(point.with_rho(0.0), M_cap)
        return [replace(base, rho=float(r)) for r in grid]
    return [_solve_cached(point.with_rho(r), M_cap) for r in grid]


def staircase(results) -> list[dict]:
    """Merge consecutive grid points with the same (log2 M, log2 N_a) cell."""
    rows = []
    for res in results:
        if rows and (rows[-1]["log2M"], rows[-1]["log2Na"]) == res.cell:
            rows[-1]["rho_hi"] = res.rho
            rows[-1]["max_pep"] = max(rows[-1]["max_pep"], res.achieved_max_pep)
            continue
        rows.append(
            {
                "rho_lo": res.rho,
                "rho_hi": res.rho,
                "log2M": res.log2_M,
                "log2Na": res.log2_N_a,
                "max_pep": res.achieved_max_pep,
            }
        )
    return rows


STAIRCASE_COLUMNS = ("rho_lo", "rho_hi", "log2M", "log2Na", "max_pep")


def staircase_csv(results, provenance: dict | None = None, extra: dict | None = None) -> str:
    """CSV staircase table; ``extra`` columns (e.g. mode, target) are repeated on every row."""
    buf = io.StringIO()
    if provenance is not None:
        buf.write("# " + json.dumps(provenance, sort_keys=True) + "\n")
    extra = extra or {}
    writer = csv.DictWriter(
        buf, fieldnames=list(extra) + list(STAIRCASE_COLUMNS), lineterminator="\n"
    )
    writer.writeheader()
    for row in staircase(results):
        writer.writerow({**extra, **row})
    return buf.getvalue()

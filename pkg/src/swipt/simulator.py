"""Monte-Carlo symbol-error simulation of the three-dimensional receiver.

Each trial sends a uniformly drawn symbol through both branches. The
in-phase/quadrature samples and the rectified level share one antenna-noise
draw per trial:

``n1 + j n2 = sqrt(1 - rho) z_ant + z_eff``,
``n3 = alpha1 Re(z_ant) + alpha2 Im(z_ant) + z_rec``,

with ``alpha1 + j alpha2 = 2 sqrt(P) rho h s exp(j theta)``. This is the
linearized rectifier behind the analytic noise covariance; with
``exact_rectifier`` the neglected quadratic term ``rho |z_ant|^2`` is added
back to ``n3`` while the detector keeps the linearized model.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .constellation import FULL, Constellation, ml_detect, noise_covariance, symbol_statistic
from .bounds import q_function
from .errors import ConfigError
from .system import PowerSplit, SystemParams, noise_generators

__all__ = ["MIN_TRIALS", "SimReport", "draw_noise", "simulate_ser", "validate_pep"]

MIN_TRIALS = 10_000
_BATCH = 1 << 17


@dataclass(frozen=True)
class SimReport:
    """Outcome of a symbol-error simulation.

    ``confusion[i, j]`` counts trials that sent symbol ``i`` and decided ``j``.
    """

    n_trials: int
    symbol_errors: int
    ser: float
    confusion: np.ndarray
    wall_time: float
    theta: float = 0.0
    exact_rectifier: bool = False

    @property
    def std_error(self) -> float:
        """Binomial standard error of ``ser``."""
        return math.sqrt(self.ser * (1.0 - self.ser) / self.n_trials)

    def to_dict(self) -> dict:
        return {
            "n_trials": self.n_trials,
            "symbol_errors": self.symbol_errors,
            "ser": self.ser,
            "std_error": self.std_error,
            "confusion": self.confusion.tolist(),
            "wall_time": self.wall_time,
            "theta": self.theta,
            "exact_rectifier": self.exact_rectifier,
        }


def draw_noise(symbols, params: SystemParams, split: PowerSplit, generators, exact_rectifier=False):
    """Observation noise ``(n, 3)`` for the given transmitted symbols.

    ``generators`` is the (antenna, rectifier, effective) triple from
    :func:`swipt.system.noise_generators`; the antenna stream feeds all three
    components.
    """
    g_ant, g_rec, g_eff = generators
    s = np.asarray(symbols, dtype=complex)
    n = s.shape[0]
    rho = split.rho
    z_ant = math.sqrt(params.sigma2_ant / 2.0) * g_ant.standard_normal((n, 2))
    z_eff = math.sqrt(params.sigma2_eff / 2.0) * g_eff.standard_normal((n, 2))
    z_rec = math.sqrt(params.sigma2_rec) * g_rec.standard_normal(n)
    rot = s * np.exp(1j * params.theta)
    scale = 2.0 * math.sqrt(params.P) * rho * params.h
    out = np.empty((n, 3))
    out[:, :2] = math.sqrt(1.0 - rho) * z_ant + z_eff
    out[:, 2] = scale * (rot.real * z_ant[:, 0] + rot.imag * z_ant[:, 1]) + z_rec
    if exact_rectifier:
        out[:, 2] += rho * np.sum(z_ant * z_ant, axis=1)
    return out


def simulate_ser(
    constellation: Constellation,
    params: SystemParams,
    split: PowerSplit,
    n_trials: int,
    seed=0,
    exact_rectifier: bool = False,
    theta: float | None = None,
    logdet: bool = False,
    dims=FULL,
) -> SimReport:
    """Symbol error rate of minimum whitened-distance detection.

    Parameters
    ----------
    n_trials : int
        Number of transmitted symbols, at least 10^4.
    seed : int or SeedSequence
        Root seed. Symbols and the channel phase come from one child stream,
        the three noise streams from another, so runs that differ only in
        ``exact_rectifier`` see identical symbols and noise.
    theta : float, optional
        Channel phase, known to the detector. By default drawn uniformly
        once per run.
    logdet, dims
        Passed to :func:`swipt.constellation.ml_detect`.
    """
    n_trials = int(n_trials)
    if n_trials < MIN_TRIALS:
        raise ConfigError(f"n_trials must be at least {MIN_TRIALS}, got {n_trials}")
    start = time.perf_counter()
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    root = np.random.SeedSequence(root.entropy, spawn_key=root.spawn_key)
    sym_seed, noise_seed = root.spawn(2)
    rng = np.random.Generator(np.random.Philox(sym_seed))
    phase = float(rng.uniform(0.0, 2.0 * math.pi)) if theta is None else float(theta)
    params = params.replace(theta=phase)
    gens = noise_generators(noise_seed)
    symbols = constellation.symbols
    M = constellation.M
    confusion = np.zeros((M, M), dtype=np.int64)
    dims = list(dims)
    done = 0
    while done < n_trials:
        n = min(_BATCH, n_trials - done)
        sent = rng.integers(0, M, size=n)
        s = symbols[sent]
        y = symbol_statistic(s, params, split) + draw_noise(s, params, split, gens, exact_rectifier)
        decided = ml_detect(y[:, dims], constellation, params, split, logdet=logdet, dims=dims)
        np.add.at(confusion, (sent, decided), 1)
        done += n
    errors = int(n_trials - np.trace(confusion))
    return SimReport(
        n_trials=n_trials,
        symbol_errors=errors,
        ser=errors / n_trials,
        confusion=confusion,
        wall_time=time.perf_counter() - start,
        theta=phase,
        exact_rectifier=bool(exact_rectifier),
    )


def validate_pep(
    constellation: Constellation,
    params: SystemParams,
    split: PowerSplit,
    pair: tuple[int, int],
    n_trials: int,
    seed=0,
    dims=FULL,
    metric: str = "transmitted",
):
    """Compare the analytic pairwise error with a two-hypothesis simulation.

    Only symbol ``i`` is sent and a trial counts as an error when ``j``
    scores better than ``i``; exact ties (coincident hypotheses) count as
    half an error, the outcome of a fair coin.

    Parameters
    ----------
    metric : {"transmitted", "detector"}
        ``"transmitted"`` whitens both hypotheses with the transmitted
        symbol's covariance, the metric the analytic expression describes,
        so the two agree up to sampling error whenever the simulated noise
        follows the covariance model. ``"detector"`` scores each hypothesis
        with its own covariance, as :func:`swipt.constellation.ml_detect`
        does; the analytic value is then only an approximation.

    Returns
    -------
    (analytic, empirical, rel_err)
        ``rel_err`` is ``|empirical - analytic| / analytic`` (inf if the
        analytic value is zero).
    """
    if metric not in ("transmitted", "detector"):
        raise ConfigError(f"metric must be 'transmitted' or 'detector', got {metric!r}")
    i, j = (int(v) for v in pair)
    if i == j:
        raise ValueError("pair needs two distinct indices")
    n_trials = int(n_trials)
    if n_trials < 1:
        raise ConfigError("n_trials must be positive")
    dims = list(dims)
    s = constellation.symbols
    model_i = noise_covariance(s[i], params, split, dims)
    model_j = model_i if metric == "transmitted" else noise_covariance(s[j], params, split, dims)
    u_j = symbol_statistic(s[j], params, split)[dims]
    delta = model_i.whitener @ (u_j - model_i.mean)
    analytic = q_function(0.5 * float(np.linalg.norm(delta)))
    gens = noise_generators(seed)
    errors = 0.0
    done = 0
    while done < n_trials:
        n = min(_BATCH, n_trials - done)
        noise = draw_noise(np.full(n, s[i]), params, split, gens)[:, dims]
        y = model_i.mean + noise
        score_i = np.sum(model_i.whiten(y) ** 2, axis=1)
        score_j = np.sum(((y - u_j) @ model_j.whitener.T) ** 2, axis=1)
        errors += np.count_nonzero(score_j < score_i) + 0.5 * np.count_nonzero(score_j == score_i)
        done += n
    empirical = float(errors) / n_trials
    rel_err = abs(empirical - analytic) / analytic if analytic > 0 else math.inf
    return analytic, empirical, rel_err

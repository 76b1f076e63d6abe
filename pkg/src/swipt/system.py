"""Scenario parameters, received-signal models and harvested-energy accounting.

Unit symbol period throughout, so power and energy are interchangeable.
The rectifier follows the quadratic law with unit second-order coefficient,
and the rectified-path tap fraction is fixed to 1 (the SNR of the tap does
not depend on it, and the energy bookkeeping uses the vanishing-tap limit).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

__all__ = [
    "SystemParams",
    "PowerSplit",
    "PRESETS",
    "preset",
    "parse_scenario",
    "load_scenario",
    "harvested_energy",
    "noise_generators",
    "sample_rectified",
    "sample_baseband",
]

_KEYS = ("P", "h", "theta", "sigma2_ant", "sigma2_rec", "sigma2_eff", "zeta")


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of one scenario.

    Attributes
    ----------
    P : float
        Average transmit power (W).
    h : float
        Channel amplitude gain, real and non-negative.
    theta : float
        Channel phase shift in radians, reduced to [0, 2*pi).
    sigma2_ant : float
        Antenna noise variance (complex, circularly symmetric).
    sigma2_rec : float
        Rectifier noise variance (real), in the units of the squared envelope.
    sigma2_eff : float
        Effective down-conversion/ADC noise variance (complex).
    zeta : float
        RF-to-DC energy conversion efficiency in (0, 1].
    """

    P: float = 100.0
    h: float = 1.0
    theta: float = 0.0
    sigma2_ant: float = 1.0
    sigma2_rec: float = 1.0
    sigma2_eff: float = 1.0
    zeta: float = 0.6

    def __post_init__(self):
        for name in _KEYS:
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.P < 0:
            raise ConfigError(f"P must be non-negative, got {self.P}")
        if self.h < 0:
            raise ConfigError(f"h must be non-negative, got {self.h}")
        for name in ("sigma2_ant", "sigma2_rec", "sigma2_eff"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if not 0.0 < self.zeta <= 1.0:
            raise ConfigError(f"zeta must lie in (0, 1], got {self.zeta}")
        object.__setattr__(self, "theta", self.theta % (2 * math.pi))

    @property
    def snr_gain(self) -> float:
        """Received signal power h^2 P."""
        return self.h**2 * self.P

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PowerSplit:
    """Fraction ``rho`` of received power routed to the rectifier."""

    rho: float
    eta: float = 1.0

    def __post_init__(self):
        rho, eta = float(self.rho), float(self.eta)
        if not 0.0 <= rho <= 1.0:
            raise ConfigError(f"rho must lie in [0, 1], got {rho}")
        if not 0.0 < eta <= 1.0:
            raise ConfigError(f"eta must lie in (0, 1], got {eta}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "eta", eta)


PRESETS = {
    # unit noise everywhere, P = 100
    "fig4": SystemParams(),
    # large effective (ADC) noise
    "fig5": SystemParams(sigma2_eff=10.0),
}
PRESETS["fig3"] = PRESETS["fig4"]
PRESETS["fig6"] = PRESETS["fig4"]
PRESETS["fig7"] = PRESETS["fig4"]


def preset(name: str) -> SystemParams:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None


def parse_scenario(text: str, base: SystemParams | None = None) -> SystemParams:
    """Parse ``key = value`` lines (or a JSON object) into :class:`SystemParams`.

    Unspecified keys keep the value from ``base`` (default: the ``fig4`` preset).
    A ``preset`` key selects the base by name.
    """
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            raw = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON scenario: {exc}") from exc
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            raw[key] = value
    base = base or PRESETS["fig4"]
    if "preset" in raw:
        base = preset(str(raw.pop("preset")))
    unknown = set(raw) - set(_KEYS)
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    try:
        values = {k: float(v) for k, v in raw.items()}
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"non-numeric scenario value: {exc}") from exc
    return base.replace(**values)


def load_scenario(path: str | Path) -> SystemParams:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(text)


def harvested_energy(params: SystemParams, split: PowerSplit) -> float:
    """Energy stored per symbol, zeta * rho * h^2 * P (noise contributes nothing)."""
    return params.zeta * split.rho * params.snr_gain


def noise_generators(seed) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent (antenna, rectifier, effective) noise streams for ``seed``.

    Every sampler draws antenna noise from the first stream, so two samplers
    called with the same seed and shape see the same antenna-noise realization.
    """
    if isinstance(seed, np.random.SeedSequence):
        # spawning mutates a SeedSequence, so work on a fresh copy
        root = np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key)
    else:
        root = np.random.SeedSequence(seed)
    children = root.spawn(3)
    return tuple(np.random.Generator(np.random.Philox(c)) for c in children)


def _complex_normal(rng: np.random.Generator, var: float, size) -> np.ndarray:
    z = rng.standard_normal((2,) + tuple(np.atleast_1d(size) if size is not None else ()))
    return math.sqrt(var / 2.0) * (z[0] + 1j * z[1])


def _scalar_or_array(x, size):
    return x if size is not None else x.item()


def sample_rectified(params: SystemParams, split: PowerSplit, amplitude, seed, size=None):
    """Draw the rectified-path observation ``|sqrt(rho h^2 P) x_a + sqrt(rho) z_ant|^2 + z_rec``.

    ``amplitude`` is broadcast against ``size``; returns a float when ``size``
    is None. A complex value is taken as the full symbol and rotated by the
    channel phase before squaring.
    """
    amplitude = np.asarray(amplitude)
    if np.iscomplexobj(amplitude):
        signal = amplitude * np.exp(1j * params.theta)
    else:
        signal = amplitude.astype(float)
        if np.any(signal < 0):
            raise ValueError("amplitude must be non-negative")
    g_ant, g_rec, _ = noise_generators(seed)
    z_ant = _complex_normal(g_ant, params.sigma2_ant, size)
    z_rec = math.sqrt(params.sigma2_rec) * g_rec.standard_normal(
        () if size is None else size
    )
    rho = split.rho
    env = math.sqrt(rho * params.snr_gain) * signal + math.sqrt(rho) * z_ant
    out = np.abs(env) ** 2 + z_rec
    return _scalar_or_array(np.asarray(out), size)


def sample_baseband(params: SystemParams, split: PowerSplit, symbol, seed, size=None):
    """Draw the baseband decoder input on the (1 - rho) branch.

    ``sqrt((1-rho) h^2 P) x + sqrt(1-rho) z_ant + z_eff``; the channel phase is
    assumed compensated (receiver has channel state information).
    """
    symbol = np.asarray(symbol, dtype=complex)
    g_ant, _, g_eff = noise_generators(seed)
    z_ant = _complex_normal(g_ant, params.sigma2_ant, size)
    z_eff = _complex_normal(g_eff, params.sigma2_eff, size)
    keep = 1.0 - split.rho
    out = math.sqrt(keep * params.snr_gain) * symbol + math.sqrt(keep) * z_ant + z_eff
    return _scalar_or_array(np.asarray(out), size)

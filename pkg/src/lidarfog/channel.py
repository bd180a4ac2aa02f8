"""LiDAR received-power model: clear weather, fog hard target, fog volume.

Power is expressed in the normalisation of the clear-weather closed form,
``P_clear(R) = C_A P0 beta0 / R0^2 * sin^2(pi (R - R0) / (c tau_H))``. That
form absorbs the ``2/c`` Jacobian of the range delta into ``C_A``; the soft
(fog volume) integral is evaluated in the same normalisation, i.e. its time
integral is multiplied by ``c/2``, so hard and soft returns are comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lidarfog import kernels
from lidarfog.errors import DomainError
from lidarfog.quadrature import composite_simpson
from lidarfog.units import SPEED_OF_LIGHT

DEFAULT_N_SIMPSON = 64
DEAD_ZONE = 0.5  # m; fog inside the sensor housing returns nothing


@dataclass(frozen=True)
class PulseConfig:
    p0: float = 1.0
    tau_h: float = 10e-9  # s, half-power pulse width
    c_a: float = 1.0
    speed_of_light: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.p0 > 0:
            raise DomainError(f"p0 must be positive, got {self.p0}")
        if not self.tau_h > 0:
            raise DomainError(f"tau_h must be positive, got {self.tau_h}")
        if not self.c_a > 0:
            raise DomainError(f"c_a must be positive, got {self.c_a}")

    @property
    def pulse_length(self):
        """``c * tau_H`` in metres: width of the clear-weather echo in range."""
        return self.speed_of_light * self.tau_h


@dataclass(frozen=True)
class CrossoverModel:
    """Transmitter/receiver overlap: linear ramp from ``r_zero`` to ``r_full``."""

    r_zero: float = 0.0
    r_full: float = 10.0

    def __post_init__(self):
        if not 0 <= self.r_zero < self.r_full:
            raise DomainError(f"need 0 <= r_zero < r_full, got {self.r_zero}, {self.r_full}")

    def __call__(self, r):
        out = np.clip((np.asarray(r, dtype=np.float64) - self.r_zero) / (self.r_full - self.r_zero), 0.0, 1.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class HardTarget:
    r0: float  # m
    beta0: float  # differential reflectivity

    def __post_init__(self):
        if not self.r0 > 0:
            raise DomainError(f"target range must be positive, got {self.r0}")
        if not self.beta0 >= 0:
            raise DomainError(f"beta0 must be >= 0, got {self.beta0}")

    @classmethod
    def from_intensity(cls, r0, intensity, cfg=PulseConfig()):
        """Invert the clear-weather peak: a recorded intensity ``i`` at ``r0``."""
        return cls(r0=r0, beta0=intensity * r0 * r0 / (cfg.c_a * cfg.p0))


def transmit_pulse(t, cfg=PulseConfig()):
    t = np.asarray(t, dtype=np.float64)
    on = (t >= 0.0) & (t <= 2.0 * cfg.tau_h)
    out = np.where(on, cfg.p0 * np.sin(np.pi * t / (2.0 * cfg.tau_h)) ** 2, 0.0)
    return float(out) if out.ndim == 0 else out


def clear_power(R, target, cfg=PulseConfig()):
    R = np.asarray(R, dtype=np.float64)
    u = R - target.r0
    on = (u >= 0.0) & (u <= cfg.pulse_length)
    peak = cfg.c_a * cfg.p0 * target.beta0 / target.r0**2
    out = np.where(on, peak * np.sin(np.pi * u / cfg.pulse_length) ** 2, 0.0)
    return float(out) if out.ndim == 0 else out


def hard_fog_power(R, target, optics, cfg=PulseConfig()):
    # attenuation at the fixed target range, not at R
    return math.exp(-2.0 * optics.alpha * target.r0) * clear_power(R, target, cfg)


def _check_intervals(n_simpson):
    if isinstance(n_simpson, bool) or int(n_simpson) != n_simpson or n_simpson < 2 or n_simpson % 2:
        raise DomainError(f"n_simpson must be an even integer >= 2, got {n_simpson!r}")
    return int(n_simpson)


def soft_prefactor(optics, cfg=PulseConfig()):
    return cfg.c_a * cfg.p0 * optics.beta * 0.5 * cfg.speed_of_light


def soft_fog_power(
    R,
    target,
    optics,
    crossover=CrossoverModel(),
    cfg=PulseConfig(),
    n_simpson=DEFAULT_N_SIMPSON,
    min_range=DEAD_ZONE,
    integrand=None,
):
    """Fog-volume received power at range ``R`` by composite Simpson 1/3.

    The rule is applied on the part of ``[0, 2 tau_H]`` where the integrand is
    nonzero, so its jumps at the dead zone and at the target fall on panel
    edges. The window is
    ``t in [max(0, 2 (R - R0) / c), min(2 tau_H, 2 (R - min_range) / c)]``.

    ``integrand``, when given, replaces the physical integrand: a callable of
    ``t`` integrated over the full ``[0, 2 tau_H]`` with no prefactor. It
    exists to audit the rule itself.
    """
    n = _check_intervals(n_simpson)
    if integrand is not None:
        return composite_simpson(integrand, 0.0, 2.0 * cfg.tau_h, n)
    if optics.beta == 0.0:
        return 0.0 if np.ndim(R) == 0 else np.zeros(np.shape(R))
    ranges = np.atleast_1d(np.asarray(R, dtype=np.float64))
    out = soft_prefactor(optics, cfg) * kernels.soft_power(
        ranges,
        float(target.r0),
        float(optics.alpha),
        float(cfg.tau_h),
        float(cfg.speed_of_light),
        float(crossover.r_zero),
        float(crossover.r_full),
        float(min_range),
        n,
    )
    return float(out[0]) if np.ndim(R) == 0 else out


def total_fog_power(
    R,
    target,
    optics,
    crossover=CrossoverModel(),
    cfg=PulseConfig(),
    n_simpson=DEFAULT_N_SIMPSON,
    min_range=DEAD_ZONE,
):
    return hard_fog_power(R, target, optics, cfg) + soft_fog_power(
        R, target, optics, crossover, cfg, n_simpson, min_range
    )


def power_table(r_grid, target, optics, crossover=CrossoverModel(), cfg=PulseConfig(), n_simpson=DEFAULT_N_SIMPSON):
    """Columns ``R, P_clear, P_hard, P_soft, P_total`` on ``r_grid``."""
    R = np.asarray(r_grid, dtype=np.float64)
    clear = clear_power(R, target, cfg)
    hard = hard_fog_power(R, target, optics, cfg)
    soft = soft_fog_power(R, target, optics, crossover, cfg, n_simpson)
    return np.column_stack((R, clear, hard, soft, hard + soft))

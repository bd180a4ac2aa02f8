"""Fog droplet size distributions.

Two families are supported:

* the four-parameter gamma law in droplet radius ``r = D/2``,
  ``N = gamma*rho*b**((a+1)/gamma) / Gamma((a+1)/gamma) * r**a * exp(-b*r**gamma)``
  with ``b = a / (gamma * r_c**gamma)``, evaluated as written with no D/r
  Jacobian; its integral over ``r`` is ``rho``.
* the Junge power law ``N = scale * D**(-exponent)`` truncated to
  ``[d_min, d_max]``.

Units are cm^-3 for number densities and micrometres for sizes; the optics
module converts to SI.

The Junge coefficients are sometimes written ``131.5 e^-1.76``, a constant
that cannot give a decaying size spectrum; the power law ``131.5 * D**-1.76``
is used instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from lidarfog.errors import DomainError, PresetLookupError
from lidarfog.quadrature import simpson, uniform_grid


@dataclass(frozen=True)
class GammaPsd:
    rho: float  # cm^-3
    a: int
    gamma_exp: float
    r_c: float  # um, mode radius
    b: float = field(init=False)  # um^-gamma

    def __post_init__(self):
        if isinstance(self.a, bool) or int(self.a) != self.a:
            raise DomainError(f"shape parameter a must be an integer, got {self.a!r}")
        object.__setattr__(self, "a", int(self.a))
        for name in ("rho", "a", "gamma_exp", "r_c"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v!r}")
        object.__setattr__(self, "b", self.a / (self.gamma_exp * self.r_c**self.gamma_exp))

    @property
    def norm(self):
        k = (self.a + 1) / self.gamma_exp
        return self.gamma_exp * self.rho * self.b**k / math.gamma(k)

    def scaled(self, factor):
        return GammaPsd(self.rho * factor, self.a, self.gamma_exp, self.r_c)

    def radius_upper(self, tail=1e-14):
        """Radius beyond which ``exp(-b r^gamma)`` is below ``tail`` of its scale."""
        shape = (self.a + 1) / self.gamma_exp
        return ((-math.log(tail) + 4.0 * shape) / self.b) ** (1.0 / self.gamma_exp)


@dataclass(frozen=True)
class JungePsd:
    scale: float = 131.5  # cm^-3 um^-1 at D = 1 um
    exponent: float = 1.76
    d_min: float = 0.01  # um
    d_max: float = 100.0  # um

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise DomainError(f"scale must be positive, got {self.scale!r}")
        if not (math.isfinite(self.exponent) and self.exponent > 0):
            raise DomainError(f"exponent must be positive, got {self.exponent!r}")
        if not (0 < self.d_min <= self.d_max and math.isfinite(self.d_max)):
            raise DomainError(f"need 0 < d_min <= d_max, got {self.d_min}, {self.d_max}")

    def scaled(self, factor):
        return JungePsd(self.scale * factor, self.exponent, self.d_min, self.d_max)


Psd = Union[GammaPsd, JungePsd]


@dataclass(frozen=True)
class FogPreset:
    name: str
    psd: Psd
    mor: float | None = None  # metres; None when no MOR pairing is defined


def _as_nonnegative(d):
    arr = np.asarray(d, dtype=np.float64)
    if np.any(~(arr >= 0)):
        raise DomainError("diameter must be non-negative")
    return arr


def gamma_density(psd, d):
    """Gamma-law density at diameter ``d`` [um]; scalar in, scalar out."""
    arr = _as_nonnegative(d)
    r = 0.5 * arr
    out = psd.norm * r**psd.a * np.exp(-psd.b * r**psd.gamma_exp)
    return float(out) if out.ndim == 0 else out


def junge_density(psd, d):
    """Power-law density at diameter ``d`` [um]; zero outside the support."""
    arr = np.asarray(d, dtype=np.float64)
    inside = (arr >= psd.d_min) & (arr <= psd.d_max)
    with np.errstate(divide="ignore"):
        out = np.where(inside, psd.scale * np.where(inside, arr, 1.0) ** (-psd.exponent), 0.0)
    return float(out) if out.ndim == 0 else out


def density(psd, d):
    if isinstance(psd, GammaPsd):
        return gamma_density(psd, d)
    if isinstance(psd, JungePsd):
        return junge_density(psd, d)
    raise TypeError(f"unsupported distribution {type(psd).__name__}")


def total_number_density(psd, intervals=20_000):
    """Integrated number density [cm^-3].

    The gamma law integrates over radius (it is normalised to ``rho`` in that
    variable); the Junge law over diameter on its truncated support.
    """
    if isinstance(psd, GammaPsd):
        r = uniform_grid(0.0, psd.radius_upper(), intervals)
        return simpson(gamma_density(psd, 2.0 * r), r)
    if isinstance(psd, JungePsd):
        if psd.d_max == psd.d_min:
            return 0.0
        d = uniform_grid(psd.d_min, psd.d_max, intervals)
        return simpson(junge_density(psd, d), d)
    raise TypeError(f"unsupported distribution {type(psd).__name__}")


def mode_radius(psd, step=1e-3):
    """Radius [um] maximising the gamma density, located on a grid of ``step``."""
    r = np.arange(0.0, psd.radius_upper(), step)
    return float(r[np.argmax(gamma_density(psd, 2.0 * r))])


PRESETS = {
    "strong_advection": FogPreset("strong_advection", GammaPsd(rho=20.0, a=3, gamma_exp=1.0, r_c=10.0), mor=40.0),
    "moderate_advection": FogPreset("moderate_advection", GammaPsd(rho=20.0, a=3, gamma_exp=1.0, r_c=8.0), mor=80.0),
    "moderate_junge": FogPreset("moderate_junge", JungePsd()),
}


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise PresetLookupError(
            f"unknown preset {name!r}; choose from {', '.join(PRESETS)}"
        ) from None

"""Lorenz-Mie efficiencies of a homogeneous water sphere.

The series uses Wiscombe's truncation order, a Lentz-seeded downward
recurrence for the logarithmic derivative D_n(mx) and upward recurrence for
the Riccati-Bessel functions (Bohren & Huffman, appendix A).

The backscattering efficiency is the lidar/radar convention

    Q_b = |sum_n (2n+1) (-1)^n (a_n - b_n)|^2 / x^2,

i.e. 4*pi times the differential cross-section at 180 degrees, normalised by
the geometric cross-section. It tends to 4 x^4 |K|^2 in the Rayleigh limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lidarfog import kernels
from lidarfog.errors import DomainError, UnsupportedRegimeError

MAX_SIZE_PARAMETER = 1e4

# Liquid water near 905 nm. Not given by the source model; override as needed.
WATER_905NM = complex(1.327, 4.86e-7)


@dataclass(frozen=True)
class OpticalConstants:
    """Wavelength [m] and complex refractive index of the droplet material."""

    wavelength: float = 905e-9
    refractive_index: complex = WATER_905NM

    def __post_init__(self):
        m = complex(self.refractive_index)
        object.__setattr__(self, "refractive_index", m)
        if not self.wavelength > 0:
            raise DomainError(f"wavelength must be positive, got {self.wavelength}")
        if not m.real > 1.0:
            raise DomainError(f"real part of refractive index must exceed 1, got {m.real}")
        if m.imag < 0:
            raise DomainError(f"imaginary part of refractive index must be >= 0, got {m.imag}")

    def size_parameter(self, diameter):
        return np.pi * np.asarray(diameter, dtype=np.float64) / self.wavelength


@dataclass(frozen=True)
class ScatteringEfficiencies:
    q_ext: float
    q_sca: float
    q_back: float
    size_parameter: float

    @property
    def q_abs(self):
        return self.q_ext - self.q_sca


def _checked_size_parameters(diameters, constants):
    d = np.atleast_1d(np.asarray(diameters, dtype=np.float64))
    if not np.all(d > 0):
        raise DomainError("droplet diameter must be positive")
    x = constants.size_parameter(d)
    if np.any(x > MAX_SIZE_PARAMETER):
        raise UnsupportedRegimeError(
            f"size parameter {x.max():.4g} exceeds the supported maximum {MAX_SIZE_PARAMETER:g}"
        )
    return x


def efficiency_table(diameters, constants=OpticalConstants(), extra_terms=0):
    """Vectorised efficiencies.

    Parameters
    ----------
    diameters : array_like
        Droplet diameters in metres.
    constants : OpticalConstants
    extra_terms : int
        Terms added beyond the Wiscombe order (convergence audits only).

    Returns
    -------
    ndarray, shape (n, 3)
        Columns ``q_ext, q_sca, q_back``.
    """
    x = _checked_size_parameters(diameters, constants)
    return kernels.mie_sums(x, constants.refractive_index, int(extra_terms))


def efficiencies(diameter, constants=OpticalConstants(), extra_terms=0):
    """Mie efficiencies for a single droplet of diameter ``diameter`` [m]."""
    if not (isinstance(diameter, (int, float, np.floating, np.integer)) and math.isfinite(diameter)):
        raise DomainError(f"diameter must be a finite scalar, got {diameter!r}")
    row = efficiency_table([diameter], constants, extra_terms)[0]
    return ScatteringEfficiencies(
        q_ext=float(row[0]),
        q_sca=float(row[1]),
        q_back=float(row[2]),
        size_parameter=float(constants.size_parameter(diameter)),
    )


def efficiency_curve(d_min, d_max, n_points, constants=OpticalConstants()):
    """Efficiencies on a uniform diameter grid ``[d_min, d_max]`` (metres).

    Returns a list of ``(D, ScatteringEfficiencies)`` with strictly
    increasing ``D``.
    """
    if not 0 < d_min < d_max:
        raise DomainError(f"need 0 < d_min < d_max, got {d_min}, {d_max}")
    if int(n_points) < 2:
        raise DomainError("n_points must be >= 2")
    grid = np.linspace(d_min, d_max, int(n_points))
    table = efficiency_table(grid, constants)
    x = constants.size_parameter(grid)
    return [
        (float(d), ScatteringEfficiencies(float(q[0]), float(q[1]), float(q[2]), float(xi)))
        for d, q, xi in zip(grid, table, x)
    ]


"""Fog attenuation and backscattering coefficients.

``alpha = (pi/8) * integral D^2 Q_ext(D) N(D) dD`` and the same with ``Q_b``
for ``beta``, integrated by composite Simpson on a uniform diameter grid.
The MOR route uses ``beta = 0.046 / MOR``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from functools import lru_cache

from lidarfog import mie
from lidarfog.errors import AccuracyError, DomainError, PresetLookupError
from lidarfog.mie import OpticalConstants
from lidarfog.psd import GammaPsd, JungePsd, density, get_preset
from lidarfog.quadrature import intervals_for_step, simpson, uniform_grid
from lidarfog.units import COEFF_UM2_PER_CM3_TO_PER_M, UM

MOR_BETA_CONSTANT = 0.046
SOURCES = ("mie_psd", "mor", "explicit")
MODES = ("distribution", "mor")
CSV_COLUMNS = ("preset", "source", "alpha_m^-1", "beta_m^-1", "mor_m")


@dataclass(frozen=True)
class QuadratureSettings:
    """Diameter grid for the coefficient integrals (micrometres).

    ``d_min_um``/``d_max_um`` bound gamma-law integrals; Junge integrals use
    the distribution's own support. ``rel_tol`` bounds the relative change
    between the grid and its every-other-node subgrid. Narrow Mie resonances
    are not resolved by any practical uniform grid, so beta keeps ~1% of
    sampling noise at half resolution; the default leaves room for it while
    still rejecting grids of 0.04 um and coarser.
    """

    step_um: float = 0.02
    d_min_um: float = 0.01
    d_max_um: float = 150.0
    rel_tol: float = 2e-2

    def __post_init__(self):
        if not self.step_um > 0:
            raise DomainError(f"step_um must be positive, got {self.step_um}")
        if not 0 < self.d_min_um < self.d_max_um:
            raise DomainError("need 0 < d_min_um < d_max_um")

    def refined(self, factor=2):
        return QuadratureSettings(self.step_um / factor, self.d_min_um, self.d_max_um, self.rel_tol)


@dataclass(frozen=True)
class FogOptics:
    alpha: float  # m^-1
    beta: float  # m^-1
    source: str = "mie_psd"
    psd_name: str | None = None
    mor: float | None = None  # m

    def __post_init__(self):
        if self.source not in SOURCES:
            raise DomainError(f"source must be one of {SOURCES}, got {self.source!r}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be finite and >= 0, got {v!r}")
        if self.source == "mor" and not (self.mor is not None and self.mor > 0):
            raise DomainError("MOR-sourced optics must record a positive MOR")

    def to_dict(self):
        return asdict(self)

    def csv_row(self):
        return {
            "preset": self.psd_name or "",
            "source": self.source,
            "alpha_m^-1": repr(self.alpha),
            "beta_m^-1": repr(self.beta),
            "mor_m": "" if self.mor is None else repr(self.mor),
        }


def to_csv(rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.csv_row())
    return buf.getvalue()


@lru_cache(maxsize=32)
def _efficiency_grid(lo, hi, intervals, constants):
    d_um = uniform_grid(lo, hi, intervals)
    q = mie.efficiency_table(d_um * UM, constants)
    d_um.setflags(write=False)
    q.setflags(write=False)
    return d_um, q


def _support(psd, quad):
    if isinstance(psd, JungePsd):
        return psd.d_min, psd.d_max
    if isinstance(psd, GammaPsd):
        return quad.d_min_um, quad.d_max_um
    raise TypeError(f"unsupported distribution {type(psd).__name__}")


def _integrals(psd, constants, quad):
    lo, hi = _support(psd, quad)
    if hi <= lo:
        return (0.0, 0.0), (0.0, 0.0)
    n = intervals_for_step(lo, hi, quad.step_um, multiple=4)
    d, q = _efficiency_grid(lo, hi, n, constants)
    weight = (math.pi / 8.0) * COEFF_UM2_PER_CM3_TO_PER_M * d**2 * density(psd, d)
    fine = (simpson(weight * q[:, 0], d), simpson(weight * q[:, 2], d))
    coarse = (simpson(weight[::2] * q[::2, 0], d[::2]), simpson(weight[::2] * q[::2, 2], d[::2]))
    return fine, coarse


def coefficients_from_psd(psd, constants=OpticalConstants(), quad=QuadratureSettings(), psd_name=None):
    """Attenuation and backscattering coefficients [m^-1] of a size distribution.

    Raises
    ------
    AccuracyError
        If halving the node count moves either coefficient by more than
        ``quad.rel_tol`` (relative). ``estimates`` carries
        ``((alpha_coarse, beta_coarse), (alpha_fine, beta_fine))``.
    """
    fine, coarse = _integrals(psd, constants, quad)
    for f, c, label in zip(fine, coarse, ("alpha", "beta")):
        if f > 0 and abs(f - c) > quad.rel_tol * abs(f):
            raise AccuracyError(
                f"{label} quadrature not converged: {c:.6g} -> {f:.6g} (tol {quad.rel_tol:g})",
                estimates=(coarse, fine),
            )
    return FogOptics(alpha=fine[0], beta=fine[1], source="mie_psd", psd_name=psd_name)


def beta_from_mor(mor, alpha=0.0, psd_name=None):
    """``beta = 0.046 / MOR``; ``alpha`` is carried through unchanged."""
    if not (isinstance(mor, (int, float)) and math.isfinite(mor) and mor > 0):
        raise DomainError(f"MOR must be a positive finite distance, got {mor!r}")
    return FogOptics(alpha=alpha, beta=MOR_BETA_CONSTANT / mor, source="mor", psd_name=psd_name, mor=float(mor))


def preset_optics(name, mode="distribution", constants=OpticalConstants(), quad=QuadratureSettings()):
    """Optics for a named preset.

    In ``mor`` mode alpha still comes from the preset's size distribution and
    only beta is replaced by the MOR value paired with the preset.
    """
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    preset = get_preset(name)
    if mode == "mor" and preset.mor is None:
        raise PresetLookupError(f"preset {name!r} has no MOR pairing; use mode 'distribution'")
    from_psd = coefficients_from_psd(preset.psd, constants, quad, psd_name=name)
    if mode == "distribution":
        return from_psd
    return beta_from_mor(preset.mor, alpha=from_psd.alpha, psd_name=name)


# Reference coefficient rows, in report order.
TABLE_ROWS = (
    ("strong_advection", "mor"),
    ("strong_advection", "distribution"),
    ("moderate_advection", "mor"),
    ("moderate_advection", "distribution"),
    ("moderate_junge", "distribution"),
)


def table_rows(constants=OpticalConstants(), quad=QuadratureSettings()):
    return [preset_optics(name, mode, constants, quad) for name, mode in TABLE_ROWS]


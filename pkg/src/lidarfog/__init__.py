"""Physics-based advection fog simulation for LiDAR point clouds.

Fog optical coefficients are computed from Mie theory integrated over
droplet size distributions (or from the MOR approximation), fed into a
hard/soft target received-power model, and used to augment KITTI velodyne
scans into foggy variants.
"""

from lidarfog._accel import BACKEND
from lidarfog.channel import CrossoverModel, HardTarget, PulseConfig
from lidarfog.errors import (
    AccuracyError,
    DomainError,
    LidarFogError,
    MalformedFileError,
    PresetLookupError,
    UnsupportedRegimeError,
)
from lidarfog.fogsim import FogSimConfig, LidarPoint, Status, augment_cloud, augment_point
from lidarfog.mie import OpticalConstants, ScatteringEfficiencies, efficiencies
from lidarfog.optics import FogOptics, beta_from_mor, coefficients_from_psd, preset_optics
from lidarfog.psd import GammaPsd, JungePsd, get_preset

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AccuracyError",
    "CrossoverModel",
    "DomainError",
    "FogOptics",
    "FogSimConfig",
    "GammaPsd",
    "HardTarget",
    "JungePsd",
    "LidarFogError",
    "LidarPoint",
    "MalformedFileError",
    "OpticalConstants",
    "PresetLookupError",
    "PulseConfig",
    "ScatteringEfficiencies",
    "Status",
    "UnsupportedRegimeError",
    "augment_cloud",
    "augment_point",
    "beta_from_mor",
    "coefficients_from_psd",
    "efficiencies",
    "get_preset",
    "preset_optics",
]

"""Semiclassical quantization of planar billiards on closed ray-bundle skeletons."""

from .bundles import Bundle, BundleMap, build_map, split_by_target
from .geometry import BoundaryCurve, curve_from_spec, shoot
from .quantize import (
    CommensurateSpec,
    SpectrumEntry,
    bouncing_mode_spectrum,
    broken_rectangle_spectrum,
    circle_spectrum,
    rectangle_spectrum,
)
from .skeleton import Skeleton, build_skeleton, last_quantization_residual, trace_orbit
from .transport import ChiSeries, build_chi_series, reflect_chi
from .wavefield import FieldGrid, GridSpec, scar_profile

__version__ = "0.1.0"

__all__ = [
    "BoundaryCurve",
    "Bundle",
    "BundleMap",
    "ChiSeries",
    "CommensurateSpec",
    "FieldGrid",
    "GridSpec",
    "Skeleton",
    "SpectrumEntry",
    "bouncing_mode_spectrum",
    "broken_rectangle_spectrum",
    "build_chi_series",
    "build_map",
    "build_skeleton",
    "circle_spectrum",
    "curve_from_spec",
    "last_quantization_residual",
    "rectangle_spectrum",
    "reflect_chi",
    "scar_profile",
    "shoot",
    "split_by_target",
    "trace_orbit",
]

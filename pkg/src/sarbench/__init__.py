"""sarbench: circular-track SAR simulation, backprojection image formation
and a from-scratch CNN classification workbench."""

from .backprojection import BackprojectedImage, backproject
from .scene import (
    Circle,
    Ellipse,
    ReflectivityMap,
    Rhombus,
    RoiGrid,
    Square,
    render,
    sample_center,
)
from .simulate import (
    FastTimeAxis,
    FlightTrack,
    RawSarData,
    circle_integral,
    default_time_axis,
    flight_positions,
    ground_circle_radius,
    reference_time_axis,
    simulate,
    smooth,
    smoothing_weight,
)

__version__ = "0.1.0"

__all__ = [
    "BackprojectedImage",
    "Circle",
    "Ellipse",
    "FastTimeAxis",
    "FlightTrack",
    "RawSarData",
    "ReflectivityMap",
    "Rhombus",
    "RoiGrid",
    "Square",
    "backproject",
    "circle_integral",
    "default_time_axis",
    "flight_positions",
    "ground_circle_radius",
    "reference_time_axis",
    "render",
    "sample_center",
    "simulate",
    "smooth",
    "smoothing_weight",
]

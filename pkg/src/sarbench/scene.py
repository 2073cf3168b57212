"""Region-of-interest grid and parametric reflectivity maps.

The scene is a square grid of ground coordinates carrying a reflectivity
map. Rendered maps are binary: 1 on the union of a list of parametric
bumps (circle, square, ellipse, rhombus), 0 elsewhere. Membership is
evaluated at pixel center coordinates with closed boundaries.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import ClassVar

import numpy as np

__all__ = [
    "RoiGrid",
    "Circle",
    "Square",
    "Ellipse",
    "Rhombus",
    "ReflectivityMap",
    "render",
    "sample_center",
    "shape_from_dict",
]


@dataclass(frozen=True)
class RoiGrid:
    """Square grid over [z_min, z_max]^2, n points per axis, endpoints included."""

    z_min: float = -10.0
    z_max: float = 10.0
    n: int = 100

    def __post_init__(self):
        if not self.z_min < self.z_max:
            raise ValueError(f"z_min must be < z_max, got [{self.z_min}, {self.z_max}]")
        if self.n < 2:
            raise ValueError(f"need at least 2 grid points per axis, got n={self.n}")

    @property
    def spacing(self) -> float:
        return (self.z_max - self.z_min) / (self.n - 1)

    @cached_property
    def coords(self) -> np.ndarray:
        return np.linspace(self.z_min, self.z_max, self.n)


def _require_positive(**params: float) -> None:
    for name, value in params.items():
        if not value > 0:
            raise ValueError(f"shape parameter {name} must be positive, got {value}")


@dataclass(frozen=True)
class Circle:
    """Disk of given radius: (z1-c1)^2 + (z2-c2)^2 <= radius^2."""

    center: tuple[float, float]
    radius: float
    kind: ClassVar[str] = "circle"

    def __post_init__(self):
        _require_positive(radius=self.radius)

    def contains(self, z1, z2):
        return (z1 - self.center[0]) ** 2 + (z2 - self.center[1]) ** 2 <= self.radius**2


@dataclass(frozen=True)
class Square:
    """Axis-aligned square of given side length centered at `center`."""

    center: tuple[float, float]
    side: float
    kind: ClassVar[str] = "square"

    def __post_init__(self):
        _require_positive(side=self.side)

    def contains(self, z1, z2):
        h = self.side / 2.0
        return (np.abs(z1 - self.center[0]) <= h) & (np.abs(z2 - self.center[1]) <= h)


@dataclass(frozen=True)
class Ellipse:
    """Axis-aligned ellipse with semi-axes (a, b) along (z1, z2)."""

    center: tuple[float, float]
    a: float
    b: float
    kind: ClassVar[str] = "ellipse"

    def __post_init__(self):
        _require_positive(a=self.a, b=self.b)

    def contains(self, z1, z2):
        return (
            (z1 - self.center[0]) ** 2 / self.a**2
            + (z2 - self.center[1]) ** 2 / self.b**2
        ) <= 1.0


@dataclass(frozen=True)
class Rhombus:
    """Diamond |z1-c1| + |z2-c2| <= d, where d is the half-diagonal."""

    center: tuple[float, float]
    d: float
    kind: ClassVar[str] = "rhombus"

    def __post_init__(self):
        _require_positive(d=self.d)

    def contains(self, z1, z2):
        return np.abs(z1 - self.center[0]) + np.abs(z2 - self.center[1]) <= self.d


Shape = Circle | Square | Ellipse | Rhombus

_SHAPE_CLASSES = {cls.kind: cls for cls in (Circle, Square, Ellipse, Rhombus)}


def shape_to_dict(shape: Shape) -> dict:
    out = {"kind": shape.kind, "center": list(shape.center)}
    for name in shape.__dataclass_fields__:
        if name != "center":
            out[name] = getattr(shape, name)
    return out


def shape_from_dict(spec: dict) -> Shape:
    params = dict(spec)
    cls = _SHAPE_CLASSES[params.pop("kind")]
    params["center"] = tuple(params["center"])
    return cls(**params)


@dataclass(frozen=True)
class ReflectivityMap:
    """Reflectivity values on a grid; values[i, j] = V(coords[i], coords[j])."""

    grid: RoiGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"values shape {v.shape} does not match grid ({self.grid.n}, {self.grid.n})"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("reflectivity values must be finite")
        if np.any(v < 0):
            raise ValueError("reflectivity values must be >= 0")
        object.__setattr__(self, "values", v)

    @cached_property
    def support_box(self) -> tuple[float, float, float, float] | None:
        """Bounding box of the nonzero support, padded by one grid spacing and
        clipped to the grid extent. None when the map is identically zero."""
        rows = np.flatnonzero(self.values.any(axis=1))
        if rows.size == 0:
            return None
        cols = np.flatnonzero(self.values.any(axis=0))
        c = self.grid.coords
        pad = self.grid.spacing
        return (
            max(c[rows[0]] - pad, self.grid.z_min),
            min(c[rows[-1]] + pad, self.grid.z_max),
            max(c[cols[0]] - pad, self.grid.z_min),
            min(c[cols[-1]] + pad, self.grid.z_max),
        )


def render(grid: RoiGrid, shapes: list[Shape], on_empty: str = "warn") -> ReflectivityMap:
    """Rasterize the union of `shapes` as a binary map on `grid`.

    A pixel is 1 iff its coordinate lies in at least one shape set;
    overlapping shapes saturate at 1. A shape whose membership test fires
    at no pixel triggers `on_empty` handling ("warn", "error" or "ignore").
    """
    if not shapes:
        raise ValueError("render needs at least one shape")
    if on_empty not in ("warn", "error", "ignore"):
        raise ValueError(f"unknown on_empty policy {on_empty!r}")
    z1, z2 = np.meshgrid(grid.coords, grid.coords, indexing="ij")
    values = np.zeros((grid.n, grid.n), dtype=np.float64)
    for shape in shapes:
        mask = shape.contains(z1, z2)
        if not mask.any():
            msg = f"{shape.kind} at {shape.center} covers no pixel of the grid extent"
            if on_empty == "error":
                raise ValueError(msg)
            if on_empty == "warn":
                warnings.warn(msg, stacklevel=2)
        np.maximum(values, mask, out=values)
    return ReflectivityMap(grid, values)


def sample_center(lo: float, hi: float, rng: np.random.Generator) -> tuple[float, float]:
    """Draw both coordinates of a bump center independently and uniformly from [lo, hi]."""
    if lo > hi:
        raise ValueError(f"empty center interval: lo={lo} > hi={hi}")
    z1, z2 = rng.uniform(lo, hi, size=2)
    return (float(z1), float(z2))

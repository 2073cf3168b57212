"""Raw data acquisition: circular flight track, circular line integrals, fast-time smoothing.

A monostatic antenna on a circular track at height h measures, for each
fast time t and track position s, the line integral of the reflectivity
map over the ground circle of radius sqrt((c0*t/2)^2 - h^2) centered at
the antenna's horizontal position. Integrals are approximated by arc
quadrature with bilinear interpolation of the map, with points outside
the grid extent contributing zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .scene import ReflectivityMap, RoiGrid

__all__ = [
    "FlightTrack",
    "FastTimeAxis",
    "RawSarData",
    "flight_positions",
    "ground_circle_radius",
    "circle_integral",
    "simulate",
    "smooth",
    "smoothing_weight",
    "default_time_axis",
    "reference_time_axis",
    "LITERAL_TIME_WINDOW",
]

# Fixed fast-time window used by the --paper-times configuration switch.
LITERAL_TIME_WINDOW = (5.0, 23.0)


@dataclass(frozen=True)
class FlightTrack:
    """Circular antenna track of given radius at constant height."""

    radius: float = 20.0
    height: float = 5.0
    n_positions: int = 100
    wave_speed: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"track radius must be positive, got {self.radius}")
        if self.height < 0:
            raise ValueError(f"track height must be >= 0, got {self.height}")
        if self.n_positions < 1:
            raise ValueError(f"need at least one antenna position, got {self.n_positions}")
        if not self.wave_speed > 0:
            raise ValueError(f"wave speed must be positive, got {self.wave_speed}")


@dataclass(frozen=True)
class FastTimeAxis:
    """Evenly spaced fast-time samples including both endpoints."""

    t_min: float
    t_max: float
    n_t: int = 100

    def __post_init__(self):
        if not self.t_min < self.t_max:
            raise ValueError(f"t_min must be < t_max, got [{self.t_min}, {self.t_max}]")
        if self.n_t < 2:
            raise ValueError(f"need at least 2 fast-time samples, got {self.n_t}")

    @cached_property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.n_t)

    @property
    def spacing(self) -> float:
        return (self.t_max - self.t_min) / (self.n_t - 1)


@dataclass(frozen=True)
class RawSarData:
    """Fast-time x slow-time data matrix with its acquisition geometry."""

    values: np.ndarray
    axis: FastTimeAxis
    track: FlightTrack
    smoothed: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.axis.n_t, self.track.n_positions):
            raise ValueError(
                f"data shape {v.shape} does not match (n_t, n_positions) ="
                f" ({self.axis.n_t}, {self.track.n_positions})"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("data entries must be finite")
        object.__setattr__(self, "values", v)


def flight_positions(track: FlightTrack) -> np.ndarray:
    """Antenna positions (n_positions, 3): angle 2*pi*k/n on the circle, at height h."""
    theta = 2.0 * np.pi * np.arange(track.n_positions) / track.n_positions
    return np.column_stack(
        (
            track.radius * np.cos(theta),
            track.radius * np.sin(theta),
            np.full(track.n_positions, float(track.height)),
        )
    )


def ground_circle_radius(t: float, height: float, wave_speed: float = 1.0) -> float | None:
    """Radius of the ground circle swept at fast time t, or None when the
    sphere of radius c0*t/2 does not reach the ground plane."""
    if not t > 0:
        raise ValueError(f"fast time must be positive, got {t}")
    half = wave_speed * t / 2.0
    if half**2 <= height**2:
        return None
    return math.sqrt(half**2 - height**2)


def _arc_counts(radii: np.ndarray, spacing: float, arc_factor: float) -> np.ndarray:
    base = np.maximum(64, np.ceil(2.0 * np.pi * radii / (spacing / 2.0)))
    return np.maximum(1, (base * arc_factor)).astype(np.int64)


def _sample_bilinear(
    vmap: ReflectivityMap,
    x: np.ndarray,
    y: np.ndarray,
    out: np.ndarray | None = None,
) -> np.ndarray:
    """Bilinear interpolation of the map at (x, y); zero outside the grid extent.

    Points outside the padded support box are skipped: every interpolation
    corner there is zero, so the result is unchanged.
    """
    if out is None:
        out = np.zeros(x.shape, dtype=np.float64)
    else:
        out[...] = 0.0
    box = vmap.support_box
    if box is None:
        return out
    keep = (x >= box[0]) & (x <= box[1]) & (y >= box[2]) & (y <= box[3])
    idx = np.flatnonzero(keep)
    if idx.size == 0:
        return out
    grid = vmap.grid
    fx = (x[idx] - grid.z_min) / grid.spacing
    fy = (y[idx] - grid.z_min) / grid.spacing
    ix = np.minimum(fx.astype(np.int64), grid.n - 2)
    iy = np.minimum(fy.astype(np.int64), grid.n - 2)
    wx = fx - ix
    wy = fy - iy
    v = vmap.values
    vals = (
        (1.0 - wx) * (1.0 - wy) * v[ix, iy]
        + wx * (1.0 - wy) * v[ix + 1, iy]
        + (1.0 - wx) * wy * v[ix, iy + 1]
        + wx * wy * v[ix + 1, iy + 1]
    )
    out[idx] = vals
    return out


def _integrate_arcs(
    vmap: ReflectivityMap,
    x: np.ndarray,
    y: np.ndarray,
    seg_starts: np.ndarray,
    weights: np.ndarray,
    work: np.ndarray | None = None,
) -> np.ndarray:
    vals = _sample_bilinear(vmap, x, y, out=work)
    return np.add.reduceat(vals, seg_starts) * weights


def _unit_arcs(radii: np.ndarray, spacing: float, arc_factor: float):
    """Concatenated circle sample offsets for every radius, with segment starts
    and per-circle quadrature weights 2*pi*r/n_arc."""
    counts = _arc_counts(radii, spacing, arc_factor)
    seg_starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    xs = np.empty(int(counts.sum()), dtype=np.float64)
    ys = np.empty_like(xs)
    for r, n_arc, start in zip(radii, counts, seg_starts):
        phi = 2.0 * np.pi * np.arange(n_arc) / n_arc
        xs[start : start + n_arc] = r * np.cos(phi)
        ys[start : start + n_arc] = r * np.sin(phi)
    weights = 2.0 * np.pi * radii / counts
    return xs, ys, seg_starts, weights


def circle_integral(
    vmap: ReflectivityMap,
    center: tuple[float, float],
    radius: float,
    _arc_factor: float = 1.0,
) -> float:
    """Line integral of the map over the circle of given radius about `center`.

    Quadrature uses max(64, ceil(2*pi*r / (spacing/2))) equally spaced angle
    samples with bilinear interpolation; the result is (2*pi*r/N) * sum.
    """
    if not radius > 0:
        raise ValueError(f"integration circle radius must be positive, got {radius}")
    xs, ys, seg_starts, weights = _unit_arcs(
        np.array([radius]), vmap.grid.spacing, _arc_factor
    )
    sums = _integrate_arcs(vmap, xs + center[0], ys + center[1], seg_starts, weights)
    return float(sums[0])


def simulate(
    vmap: ReflectivityMap,
    track: FlightTrack,
    axis: FastTimeAxis,
    _arc_factor: float = 1.0,
) -> RawSarData:
    """Raw data matrix: entry (i, j) is the circle integral of the map at the
    ground circle of fast time t_i around antenna j, zero when the circle
    does not reach the ground."""
    times = axis.times
    radii = np.full(axis.n_t, np.nan)
    for i, t in enumerate(times):
        r = ground_circle_radius(t, track.height, track.wave_speed)
        if r is not None:
            radii[i] = r
    valid = np.flatnonzero(np.isfinite(radii))
    data = np.zeros((axis.n_t, track.n_positions), dtype=np.float64)
    if valid.size == 0:
        return RawSarData(data, axis, track, smoothed=False)

    xs, ys, seg_starts, weights = _unit_arcs(
        radii[valid], vmap.grid.spacing, _arc_factor
    )
    positions = flight_positions(track)
    px = np.empty_like(xs)
    py = np.empty_like(ys)
    vals = np.empty_like(xs)
    for j in range(track.n_positions):
        np.add(xs, positions[j, 0], out=px)
        np.add(ys, positions[j, 1], out=py)
        data[valid, j] = _integrate_arcs(vmap, px, py, seg_starts, weights, work=vals)
    return RawSarData(data, axis, track, smoothed=False)


def smoothing_weight(t: float, t_min: float, t_max: float) -> float:
    """Fast-time taper exp(-((t-t_min)^-2 + (t_max-t)^-2)); zero at and
    outside the endpoints (limit value)."""
    if t <= t_min or t >= t_max:
        return 0.0
    return math.exp(-((t - t_min) ** -2 + (t_max - t) ** -2))


def smooth(raw: RawSarData) -> RawSarData:
    """Apply the fast-time taper to every row; rejects double smoothing."""
    if raw.smoothed:
        raise ValueError("data is already smoothed")
    t = raw.axis.times
    mu = np.zeros(raw.axis.n_t)
    inner = (t > raw.axis.t_min) & (t < raw.axis.t_max)
    ti = t[inner]
    mu[inner] = np.exp(
        -((ti - raw.axis.t_min) ** -2.0 + (raw.axis.t_max - ti) ** -2.0)
    )
    return replace(raw, values=raw.values * mu[:, None], smoothed=True)


def default_time_axis(track: FlightTrack, grid: RoiGrid, n_t: int = 100) -> FastTimeAxis:
    """Fast-time window covering the scene: [2*d_min/c0, 2*d_max/c0] where
    d_min/d_max are the extremal 3-D distances from any antenna position to
    any grid pixel at ground level. Zero distances are excluded, so a
    degenerate track is clamped to the smallest positive pixel distance."""
    positions = flight_positions(track)
    c = grid.coords
    z1, z2 = np.meshgrid(c, c, indexing="ij")
    px = z1.ravel()
    py = z2.ravel()
    d_min = np.inf
    d_max = 0.0
    h2 = float(track.height) ** 2
    for j in range(track.n_positions):
        d2 = (px - positions[j, 0]) ** 2 + (py - positions[j, 1]) ** 2 + h2
        positive = d2[d2 > 0.0]
        if positive.size:
            d_min = min(d_min, math.sqrt(positive.min()))
        d_max = max(d_max, math.sqrt(d2.max()))
    if not np.isfinite(d_min) or d_max <= 0.0:
        raise ValueError("degenerate geometry: every antenna sits on every pixel")
    c0 = track.wave_speed
    return FastTimeAxis(2.0 * d_min / c0, 2.0 * d_max / c0, n_t)


def reference_time_axis(n_t: int = 100) -> FastTimeAxis:
    """The fixed fast-time window [5, 23] selected by --paper-times."""
    return FastTimeAxis(LITERAL_TIME_WINDOW[0], LITERAL_TIME_WINDOW[1], n_t)

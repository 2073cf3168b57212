"""Image formation by backprojection of smoothed raw data.

Each data value is spread over every grid pixel whose horizontal distance
to the antenna lies within the ground-circle radius +/- tol; accumulated
values are averaged per pixel and the image is rescaled to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scene import RoiGrid
from .simulate import RawSarData, flight_positions, ground_circle_radius

__all__ = ["BackprojectedImage", "backproject", "accumulate_circles"]

DEFAULT_TOLERANCE = 0.1


@dataclass(frozen=True)
class BackprojectedImage:
    """Reconstructed scene on the grid, rescaled to [0, 1]."""

    grid: RoiGrid
    values: np.ndarray
    tolerance: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(
                f"image shape {v.shape} does not match grid ({self.grid.n}, {self.grid.n})"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("image values must be finite")
        object.__setattr__(self, "values", v)


def backproject(
    data: RawSarData, grid: RoiGrid, tol: float = DEFAULT_TOLERANCE
) -> BackprojectedImage:
    """Backproject smoothed data onto the grid.

    Pixels never touched by any ground circle stay 0. The accumulated
    image is divided by per-pixel hit counts and rescaled affinely so
    min -> 0 and max -> 1; an all-constant image maps to all zeros.
    """
    if not data.smoothed:
        raise ValueError("backprojection expects smoothed data")
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")

    track = data.track
    radii = np.full(data.axis.n_t, np.nan)
    for i, t in enumerate(data.axis.times):
        r = ground_circle_radius(t, track.height, track.wave_speed)
        if r is not None:
            radii[i] = r
    image = accumulate_circles(data.values, flight_positions(track), radii, grid, tol)
    return BackprojectedImage(grid, image, tol)


def accumulate_circles(
    values: np.ndarray,
    positions: np.ndarray,
    radii: np.ndarray,
    grid: RoiGrid,
    tol: float,
) -> np.ndarray:
    """Accumulation core of the backprojection.

    `values[i, j]` is spread over every pixel whose horizontal distance to
    `positions[j]` lies within `radii[i] +- tol` (NaN radii are skipped),
    counts are averaged and the result rescaled to [0, 1]. Antennas are
    accumulated in canonical angle order, so permuting the columns together
    with their positions leaves the output bit-identical.
    """
    valid = np.flatnonzero(np.isfinite(radii))
    flat_image = np.zeros(grid.n * grid.n, dtype=np.float64)
    count = np.zeros(grid.n * grid.n, dtype=np.int64)
    c = grid.coords
    z1, z2 = np.meshgrid(c, c, indexing="ij")
    px = z1.ravel()
    py = z2.ravel()

    if valid.size:
        order = np.argsort(radii[valid], kind="stable")
        r_sorted = radii[valid][order]
        row_sorted = valid[order]
        antenna_order = np.argsort(
            np.arctan2(positions[:, 1], positions[:, 0]), kind="stable"
        )
        for j in antenna_order:
            dist = np.sqrt((px - positions[j, 0]) ** 2 + (py - positions[j, 1]) ** 2)
            lo = np.searchsorted(r_sorted, dist - tol, side="left")
            hi = np.searchsorted(r_sorted, dist + tol, side="right")
            csum = np.concatenate(([0.0], np.cumsum(values[row_sorted, j])))
            flat_image += csum[hi] - csum[lo]
            count += hi - lo

    touched = count > 0
    flat_image[touched] /= count[touched]
    flat_image[~touched] = 0.0

    lo_v = flat_image.min()
    hi_v = flat_image.max()
    if hi_v > lo_v:
        flat_image = (flat_image - lo_v) / (hi_v - lo_v)
    else:
        flat_image = np.zeros_like(flat_image)
    return flat_image.reshape(grid.n, grid.n)

"""Dataset generation for the simulated classification tasks, ingestion of
externally supplied ice-type imagery, and stratified splitting.

Every generated sample owns a seed derived from (dataset seed, class,
index), and its provenance record carries everything needed to regenerate
the identical input matrix (see `regenerate`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backprojection import DEFAULT_TOLERANCE, backproject
from .pgm import read_pgm
from .scene import (
    Circle,
    Ellipse,
    ReflectivityMap,
    Rhombus,
    RoiGrid,
    Square,
    render,
    sample_center,
    shape_from_dict,
)
from .scene import shape_to_dict
from .simulate import (
    FastTimeAxis,
    FlightTrack,
    default_time_axis,
    reference_time_axis,
    simulate,
    smooth,
)

__all__ = [
    "Sample",
    "LabeledDataset",
    "split",
    "gen_shape_dataset",
    "gen_shape_pair",
    "gen_multiscatterer_dataset",
    "gen_radius_dataset",
    "gen_count_dataset",
    "load_ice_dataset",
    "regenerate",
    "SHAPE_LABELS",
    "ICE_LABELS",
    "DEFAULT_FRACTIONS",
]

DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)

SHAPE_LABELS = {1: "circle", 2: "square", 3: "ellipse", 4: "rhombus"}
RADIUS_CLASSES = (1.0, 2.0, 5.0, 10.0)
ICE_LABELS = {
    1: "black border",
    2: "old ice",
    3: "first year ice",
    4: "glaciers",
    5: "icebergs",
    6: "mountains",
    7: "young ice",
    8: "water group",
}

# Attempt budget for the center rejection samplers.
_MAX_ATTEMPTS = 1000


@dataclass
class Sample:
    input: np.ndarray
    label: int
    provenance: dict = field(default_factory=dict)


@dataclass
class LabeledDataset:
    """Ordered samples with disjoint, exhaustive train/val/test index sets."""

    samples: list[Sample]
    class_count: int
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray

    def __post_init__(self):
        n = len(self.samples)
        for name in ("train_idx", "val_idx", "test_idx"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        merged = np.concatenate((self.train_idx, self.val_idx, self.test_idx))
        if len(merged) != n or len(np.unique(merged)) != n:
            raise ValueError("split indices must be disjoint and cover every sample")
        for sample in self.samples:
            if not 1 <= sample.label <= self.class_count:
                raise ValueError(
                    f"label {sample.label} outside 1..{self.class_count}"
                )

    @property
    def input_size(self) -> int:
        return self.samples[0].input.shape[0]

    def indices(self, split_name: str) -> np.ndarray:
        try:
            return getattr(self, f"{split_name}_idx")
        except AttributeError:
            raise ValueError(f"unknown split {split_name!r}") from None

    def arrays(self, split_name: str) -> tuple[np.ndarray, np.ndarray]:
        idx = self.indices(split_name)
        if len(idx) == 0:
            p = self.input_size
            return np.zeros((0, p, p)), np.zeros(0, dtype=np.int64)
        x = np.stack([self.samples[i].input for i in idx])
        y = np.array([self.samples[i].label for i in idx], dtype=np.int64)
        return x, y

    def split_sizes(self) -> tuple[int, int, int]:
        return (len(self.train_idx), len(self.val_idx), len(self.test_idx))


def split(
    dataset: LabeledDataset,
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS,
    seed: int = 0,
) -> LabeledDataset:
    """Stratified re-split: each class is shuffled (seeded) and partitioned
    so every split preserves the class balance within one sample."""
    if len(fractions) != 3:
        raise ValueError("expected (train, val, test) fractions")
    if any(f < 0 or f > 1 for f in fractions):
        raise ValueError(f"fractions must lie in [0, 1], got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {fractions}")
    rng = np.random.default_rng(seed)
    labels = np.array([s.label for s in dataset.samples])
    parts: list[list[np.ndarray]] = [[], [], []]
    for label in range(1, dataset.class_count + 1):
        idx = np.flatnonzero(labels == label)
        idx = idx[rng.permutation(len(idx))]
        m = len(idx)
        b1 = int(math.floor(m * fractions[0] + 0.5))
        b2 = int(math.floor(m * (fractions[0] + fractions[1]) + 0.5))
        parts[0].append(idx[:b1])
        parts[1].append(idx[b1:b2])
        parts[2].append(idx[b2:])
    train, val, test = (
        np.sort(np.concatenate(p)) if p else np.zeros(0, dtype=np.int64) for p in parts
    )
    return LabeledDataset(
        samples=dataset.samples,
        class_count=dataset.class_count,
        train_idx=train,
        val_idx=val,
        test_idx=test,
    )


def _sample_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, *key)))


def _shape_for_label(label: int, center: tuple[float, float]):
    if label == 1:
        return Circle(center, radius=2.0)
    if label == 2:
        return Square(center, side=5.5)
    if label == 3:
        return Ellipse(center, a=1.5, b=3.0)
    if label == 4:
        return Rhombus(center, d=3.0)
    raise ValueError(f"unknown shape label {label}")


def _geometry(height: float, grid, n_positions: int, n_t: int, paper_times: bool):
    grid = grid if grid is not None else RoiGrid()
    track = FlightTrack(height=height, n_positions=n_positions)
    if paper_times:
        axis = reference_time_axis(n_t)
    else:
        axis = default_time_axis(track, grid, n_t)
    return grid, track, axis


def _geometry_provenance(grid, track, axis) -> dict:
    return {
        "grid": [grid.z_min, grid.z_max, grid.n],
        "track": [track.radius, track.height, track.n_positions, track.wave_speed],
        "time_axis": [axis.t_min, axis.t_max, axis.n_t],
    }


def _scene_raw(shapes, grid, track, axis):
    vmap = render(grid, shapes)
    return smooth(simulate(vmap, track, axis))


def _scene_input(shapes, grid, track, axis, mode: str, tol: float) -> np.ndarray:
    raw = _scene_raw(shapes, grid, track, axis)
    if mode == "raw":
        return raw.values
    return backproject(raw, grid, tol).values


def _finish(samples, class_count, seed) -> LabeledDataset:
    unsplit = LabeledDataset(
        samples=samples,
        class_count=class_count,
        train_idx=np.arange(len(samples)),
        val_idx=np.zeros(0, dtype=np.int64),
        test_idx=np.zeros(0, dtype=np.int64),
    )
    return split(unsplit, DEFAULT_FRACTIONS, seed)


def _check_mode(mode: str) -> None:
    if mode not in ("raw", "backprojected"):
        raise ValueError(f"mode must be 'raw' or 'backprojected', got {mode!r}")


def gen_shape_dataset(
    n_per_class: int = 1000,
    height: float = 5.0,
    mode: str = "raw",
    seed: int = 0,
    paper_times: bool = False,
    tol: float = DEFAULT_TOLERANCE,
    grid: RoiGrid | None = None,
    n_positions: int = 100,
    n_t: int = 100,
) -> LabeledDataset:
    """Four-class single-bump dataset (circle/square/ellipse/rhombus); bump
    centers drawn uniformly from [3, 6]^2 per sample."""
    _check_mode(mode)
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    if height < 0:
        raise ValueError("antenna height must be >= 0")
    grid, track, axis = _geometry(height, grid, n_positions, n_t, paper_times)
    geom = _geometry_provenance(grid, track, axis)
    samples = []
    for label in sorted(SHAPE_LABELS):
        for i in range(n_per_class):
            rng = _sample_rng(seed, label, i)
            shape = _shape_for_label(label, sample_center(3.0, 6.0, rng))
            values = _scene_input([shape], grid, track, axis, mode, tol)
            samples.append(
                Sample(
                    input=values,
                    label=label,
                    provenance={
                        "task": "shape",
                        "mode": mode,
                        "seed": seed,
                        "index": i,
                        "shapes": [shape_to_dict(shape)],
                        "tol": tol,
                        **geom,
                    },
                )
            )
    return _finish(samples, len(SHAPE_LABELS), seed)


def gen_shape_pair(
    n_per_class: int = 1000,
    height: float = 5.0,
    seed: int = 0,
    paper_times: bool = False,
    tol: float = DEFAULT_TOLERANCE,
    grid: RoiGrid | None = None,
    n_positions: int = 100,
    n_t: int = 100,
) -> tuple[LabeledDataset, LabeledDataset]:
    """Raw and backprojected shape datasets over the identical scenes,
    sharing one simulation pass per scene. Equals calling
    `gen_shape_dataset` twice with the two modes and the same seed."""
    grid, track, axis = _geometry(height, grid, n_positions, n_t, paper_times)
    geom = _geometry_provenance(grid, track, axis)
    raw_samples = []
    bp_samples = []
    for label in sorted(SHAPE_LABELS):
        for i in range(n_per_class):
            rng = _sample_rng(seed, label, i)
            shape = _shape_for_label(label, sample_center(3.0, 6.0, rng))
            raw = _scene_raw([shape], grid, track, axis)
            image = backproject(raw, grid, tol)
            base = {
                "task": "shape",
                "seed": seed,
                "index": i,
                "shapes": [shape_to_dict(shape)],
                "tol": tol,
                **geom,
            }
            raw_samples.append(
                Sample(raw.values, label, {**base, "mode": "raw"})
            )
            bp_samples.append(
                Sample(image.values, label, {**base, "mode": "backprojected"})
            )
    return (
        _finish(raw_samples, len(SHAPE_LABELS), seed),
        _finish(bp_samples, len(SHAPE_LABELS), seed),
    )


def _separated_pair(rng, r: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """Centers for the two-bump class: first in [0, 5]^2, second in [-4, -1]^2,
    redrawn until the supports are disjoint (separation > 2r). When the attempt
    budget runs out (large radii make disjointness unsatisfiable) the last,
    possibly overlapping, draw is kept."""
    for _ in range(_MAX_ATTEMPTS):
        c1 = sample_center(0.0, 5.0, rng)
        c2 = sample_center(-4.0, -1.0, rng)
        if math.dist(c1, c2) > 2.0 * r:
            return c1, c2
    return c1, c2


def gen_multiscatterer_dataset(
    r: float,
    n_per_class: int = 2500,
    seed: int = 0,
    height: float = 5.0,
    paper_times: bool = False,
    grid: RoiGrid | None = None,
    n_positions: int = 100,
    n_t: int = 100,
) -> LabeledDataset:
    """Two-class dataset: one circular bump (center in [0, 5]^2) versus two
    circular bumps of the same radius (second center in [-4, -1]^2)."""
    if not r > 0:
        raise ValueError(f"bump radius must be positive, got {r}")
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    grid, track, axis = _geometry(height, grid, n_positions, n_t, paper_times)
    geom = _geometry_provenance(grid, track, axis)
    samples = []
    for label in (1, 2):
        for i in range(n_per_class):
            rng = _sample_rng(seed, label, i)
            if label == 1:
                shapes = [Circle(sample_center(0.0, 5.0, rng), radius=r)]
            else:
                c1, c2 = _separated_pair(rng, r)
                shapes = [Circle(c1, radius=r), Circle(c2, radius=r)]
            values = _scene_input(shapes, grid, track, axis, "raw", DEFAULT_TOLERANCE)
            samples.append(
                Sample(
                    input=values,
                    label=label,
                    provenance={
                        "task": "multiscatterer",
                        "mode": "raw",
                        "seed": seed,
                        "index": i,
                        "radius": r,
                        "shapes": [shape_to_dict(s) for s in shapes],
                        **geom,
                    },
                )
            )
    return _finish(samples, 2, seed)


def gen_radius_dataset(
    n_per_class: int = 1250,
    seed: int = 0,
    height: float = 0.0,
    paper_times: bool = False,
    grid: RoiGrid | None = None,
    n_positions: int = 100,
    n_t: int = 100,
) -> LabeledDataset:
    """Four-class dataset of single circular bumps with radius 1, 2, 5 or 10.

    Centers (uniform in [3, 6]^2) are keyed by the sample index only, so
    the four classes contain matched-center scenes."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    grid, track, axis = _geometry(height, grid, n_positions, n_t, paper_times)
    geom = _geometry_provenance(grid, track, axis)
    samples = []
    for label, r in enumerate(RADIUS_CLASSES, start=1):
        for i in range(n_per_class):
            center = sample_center(3.0, 6.0, _sample_rng(seed, 0, i))
            shape = Circle(center, radius=r)
            values = _scene_input([shape], grid, track, axis, "raw", DEFAULT_TOLERANCE)
            samples.append(
                Sample(
                    input=values,
                    label=label,
                    provenance={
                        "task": "radius",
                        "mode": "raw",
                        "seed": seed,
                        "index": i,
                        "shapes": [shape_to_dict(shape)],
                        **geom,
                    },
                )
            )
    return _finish(samples, len(RADIUS_CLASSES), seed)


def _scattered_centers(rng, count: int, r: float, grid: RoiGrid) -> list[tuple[float, float]]:
    centers: list[tuple[float, float]] = []
    failures = 0
    while len(centers) < count:
        c = sample_center(grid.z_min, grid.z_max, rng)
        if all(math.dist(c, other) > 2.0 * r for other in centers):
            centers.append(c)
        else:
            failures += 1
            if failures >= _MAX_ATTEMPTS:
                raise RuntimeError(
                    f"placed {len(centers)}/{count} bumps after {failures} rejected"
                    f" draws: grid too crowded for radius {r}"
                )
    return centers


def gen_count_dataset(
    n_total: int = 6000,
    seed: int = 0,
    height: float = 0.0,
    r: float = 2.0,
    paper_times: bool = False,
    grid: RoiGrid | None = None,
    n_positions: int = 100,
    n_t: int = 100,
) -> LabeledDataset:
    """Three balanced classes of 1, 2 or 3 non-overlapping circular bumps,
    centers anywhere on the grid with pairwise separation > 2r."""
    if n_total < 3 or n_total % 3 != 0:
        raise ValueError(f"n_total must be a positive multiple of 3, got {n_total}")
    grid, track, axis = _geometry(height, grid, n_positions, n_t, paper_times)
    geom = _geometry_provenance(grid, track, axis)
    n_per_class = n_total // 3
    samples = []
    for label in (1, 2, 3):
        for i in range(n_per_class):
            rng = _sample_rng(seed, label, i)
            centers = _scattered_centers(rng, label, r, grid)
            shapes = [Circle(c, radius=r) for c in centers]
            values = _scene_input(shapes, grid, track, axis, "raw", DEFAULT_TOLERANCE)
            samples.append(
                Sample(
                    input=values,
                    label=label,
                    provenance={
                        "task": "count",
                        "mode": "raw",
                        "seed": seed,
                        "index": i,
                        "radius": r,
                        "shapes": [shape_to_dict(s) for s in shapes],
                        **geom,
                    },
                )
            )
    return _finish(samples, 3, seed)


def _class_images(class_dir: Path) -> list[tuple[str, np.ndarray]]:
    """All images of one class directory: P5 graymaps plus any SARD dataset
    containers (every contained sample belongs to this class)."""
    from . import sard  # local import: sard depends on this module

    units: list[tuple[str, np.ndarray]] = []
    for path in sorted(class_dir.iterdir()):
        if path.suffix.lower() == ".pgm":
            units.append((str(path), read_pgm(path)))
        elif path.suffix.lower() == ".sard":
            contained = sard.read_dataset(path)
            for k, sample in enumerate(contained.samples):
                units.append((f"{path}#{k}", sample.input))
    return units


def load_ice_dataset(
    root: str | Path, n_per_class: int = 1170, seed: int = 0
) -> LabeledDataset:
    """Load ice-type imagery from `root`/1 .. `root`/8 and subsample each
    class to n_per_class images (uniform, seeded, without replacement).

    Images must be square grayscale rasters of one common size; graymap
    pixel values are scaled to [0, 1] by the file's maxval.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(
            f"ice dataset root {root} not found; supply the externally"
            " distributed imagery as class directories 1..8"
        )
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    samples = []
    size: int | None = None
    for label in sorted(ICE_LABELS):
        class_dir = root / str(label)
        if not class_dir.is_dir():
            raise FileNotFoundError(f"missing class directory {class_dir}")
        units = _class_images(class_dir)
        if len(units) < n_per_class:
            raise ValueError(
                f"class directory {class_dir} holds {len(units)} images,"
                f" need {n_per_class}"
            )
        chosen = np.sort(rng.choice(len(units), size=n_per_class, replace=False))
        for k in chosen:
            name, values = units[k]
            if values.ndim != 2 or values.shape[0] != values.shape[1]:
                raise ValueError(f"{name}: expected a square image, got {values.shape}")
            if size is None:
                size = values.shape[0]
            elif values.shape[0] != size:
                raise ValueError(
                    f"{name}: image size {values.shape[0]} differs from {size}"
                )
            samples.append(
                Sample(
                    input=np.asarray(values, dtype=np.float64),
                    label=label,
                    provenance={"task": "ice", "file": name, "seed": seed},
                )
            )
    return _finish(samples, len(ICE_LABELS), seed)


def regenerate(provenance: dict) -> np.ndarray:
    """Rebuild a simulated sample's input matrix from its provenance record."""
    task = provenance["task"]
    if task == "ice":
        raise ValueError("ice samples come from external files and cannot be re-simulated")
    grid = RoiGrid(*provenance["grid"][:2], int(provenance["grid"][2]))
    radius, height, n_positions, wave_speed = provenance["track"]
    track = FlightTrack(radius, height, int(n_positions), wave_speed)
    t_min, t_max, n_t = provenance["time_axis"]
    axis = FastTimeAxis(t_min, t_max, int(n_t))
    shapes = [shape_from_dict(d) for d in provenance["shapes"]]
    return _scene_input(
        shapes, grid, track, axis, provenance["mode"], provenance.get("tol", DEFAULT_TOLERANCE)
    )

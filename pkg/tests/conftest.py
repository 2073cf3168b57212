"""Shared test helpers: synthetic texture imagery standing in for the
externally distributed ice dataset."""

from pathlib import Path

import numpy as np

from sarbench.pgm import write_pgm


def make_texture(label: int, rng: np.random.Generator, size: int = 256) -> np.ndarray:
    """One of eight procedurally distinct grayscale textures in [0, 1].

    Orientation, frequency and structure differ per class; phase and noise
    vary per draw so samples within a class are not copies.
    """
    u, v = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    phase = rng.uniform(0, 2 * np.pi)
    if label == 1:
        base = np.sin(2 * np.pi * u / 16 + phase)
    elif label == 2:
        base = np.sin(2 * np.pi * v / 16 + phase)
    elif label == 3:
        base = np.sin(2 * np.pi * (u + v) / 24 + phase)
    elif label == 4:
        base = np.sign(np.sin(2 * np.pi * u / 32 + phase) * np.sin(2 * np.pi * v / 32 + phase))
    elif label == 5:
        cx, cy = rng.uniform(0.3, 0.7, size=2) * size
        base = np.exp(-((u - cx) ** 2 + (v - cy) ** 2) / (2 * (size / 6) ** 2)) * 2 - 1
    elif label == 6:
        cx, cy = rng.uniform(0.4, 0.6, size=2) * size
        base = np.sin(np.hypot(u - cx, v - cy) / 4 + phase)
    elif label == 7:
        base = rng.uniform(-1, 1, size=(size, size))
    elif label == 8:
        base = 2 * (u + v) / (2 * size) - 1 + 0.2 * np.sin(2 * np.pi * v / 8 + phase)
    else:
        raise ValueError(f"no texture for label {label}")
    noisy = 0.5 + 0.4 * base / max(1e-9, np.abs(base).max())
    noisy += rng.normal(0, 0.02, size=(size, size))
    return np.clip(noisy, 0.0, 1.0)


def build_texture_root(
    root: Path, n_per_class: int, size: int = 256, seed: int = 0, classes: int = 8
) -> Path:
    """Write the class-directory layout the ice loader expects."""
    rng = np.random.default_rng(seed)
    for label in range(1, classes + 1):
        class_dir = root / str(label)
        class_dir.mkdir(parents=True, exist_ok=True)
        for i in range(n_per_class):
            write_pgm(class_dir / f"img_{i:03d}.pgm", make_texture(label, rng, size))
    return root

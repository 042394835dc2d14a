"""Coordinate grids and synthetic targets."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import rng
from .errors import ShapeError
from .io import ImageGrid, decode_ppm


def pixel_centers(n: int) -> np.ndarray:
    """``-1 + (2i + 1) / n`` for i = 0..n-1: cell centres of [-1, 1]."""
    if n < 1:
        raise ValueError(f"grid size must be >= 1, got {n}")
    return -1.0 + (2.0 * np.arange(n) + 1.0) / n


def make_coord_grid(width: int, height: int) -> np.ndarray:
    """(H*W, 2) coordinates ``(x, y)`` in row-major pixel order."""
    xs, ys = pixel_centers(width), pixel_centers(height)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.reshape(-1), gy.reshape(-1)])


def coord_grid_1d(n: int) -> np.ndarray:
    return pixel_centers(n)[:, None]


def coord_grid_3d(R: int) -> np.ndarray:
    """(R^3, 3) cell centres, ``x`` varying fastest."""
    c = pixel_centers(R)
    gz, gy, gx = np.meshgrid(c, c, c, indexing="ij")
    return np.column_stack([gx.reshape(-1), gy.reshape(-1), gz.reshape(-1)])


@dataclass
class OccupancyGrid:
    """Binary occupancy over R^3 cells, indexed (z, y, x)."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 3 or len(set(v.shape)) != 1:
            raise ShapeError(f"occupancy grid must be (R, R, R), got {v.shape}")
        if not np.all((v == 0) | (v == 1)):
            raise ValueError("occupancy values must be 0 or 1")
        self.values = v.astype(np.uint8)

    @property
    def resolution(self) -> int:
        return self.values.shape[0]

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1, 1).astype(np.float64)

    @classmethod
    def from_predictions(cls, pred, R: int, threshold: float = 0.5) -> "OccupancyGrid":
        return cls((np.asarray(pred).reshape(R, R, R) >= threshold).astype(np.uint8))


def sphere_occupancy(R: int, radius: float = 0.6) -> OccupancyGrid:
    pts = coord_grid_3d(R)
    inside = np.linalg.norm(pts, axis=1) <= radius
    return OccupancyGrid(inside.reshape(R, R, R))


def generate_noise_block(size: int, rho: float, seed: int) -> ImageGrid:
    """Zero image with a centred square of uniform [0, 1] noise.

    The square has side ``round(sqrt(rho) * size)`` (halves rounded up), so
    it covers a fraction ``rho`` of the image up to rounding.
    """
    if not 0 < rho <= 1:
        raise ValueError(f"rho must be in (0, 1], got {rho}")
    if size < 1:
        raise ValueError(f"size must be >= 1, got {size}")
    side = int(np.floor(np.sqrt(rho) * size + 0.5))
    lo = (size - side) // 2
    mask = np.zeros((size, size))
    mask[lo:lo + side, lo:lo + side] = 1.0
    noise = rng.stream(seed, "data").random((size, size))
    smooth = np.zeros((size, size))
    return ImageGrid(mask * noise + (1.0 - mask) * smooth)


def noise_block_fraction(size: int, rho: float) -> float:
    side = int(np.floor(np.sqrt(rho) * size + 0.5))
    return side * side / (size * size)


def product_of_sines(x: np.ndarray, f1: float = 3.0, f2: float = 7.0) -> np.ndarray:
    """``sin(2 pi f1 x) sin(2 pi f2 x)`` as a column vector."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    return (np.sin(2 * np.pi * f1 * x) * np.sin(2 * np.pi * f2 * x))[:, None]


def ramp_plus_checker(n: int = 128, period: int = 8, amplitude: float = 0.25) -> np.ndarray:
    """1-D target: a smooth ramp plus a square wave of ``period`` samples."""
    x = pixel_centers(n)
    ramp = 0.5 + 0.25 * x
    checker = np.where((np.arange(n) // (period // 2)) % 2 == 0, amplitude, -amplitude)
    return (ramp + checker)[:, None]


def desk_image() -> ImageGrid:
    """The bundled 128x128 grayscale test image."""
    data = resources.files("cafe").joinpath("data/desk128.pgm").read_bytes()
    return decode_ppm(data)

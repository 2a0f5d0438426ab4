"""Dense grid helpers, box geometry and the max-projection primitives.

Grids are plain numpy arrays: a scalar grid is ``(h, w)`` and a vector grid
is ``(h, w, c)``. Boxes use the half-open pixel convention
``[x1, x2) x [y1, y2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box; ``(x1, y1)`` upper-left, ``(x2, y2)`` exclusive lower-right."""

    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise GridError(f"degenerate box {self.as_tuple()}")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x1, self.y1, self.x2, self.y2)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)

    @property
    def width(self) -> int:
        return self.x2 - self.x1

    @property
    def height(self) -> int:
        return self.y2 - self.y1

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.width, self.height))

    def clamp(self, h: int, w: int) -> "BBox":
        """Clip to a ``h x w`` frame; raises if nothing remains."""
        x1, x2 = max(self.x1, 0), min(self.x2, w)
        y1, y2 = max(self.y1, 0), min(self.y2, h)
        if x1 >= x2 or y1 >= y2:
            raise GridError(f"box {self.as_tuple()} lies outside the {h}x{w} frame")
        return BBox(x1, y1, x2, y2)

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "BBox":
        """Tight box around the nonzero pixels of ``mask``."""
        rows = np.flatnonzero(mask.any(axis=1))
        cols = np.flatnonzero(mask.any(axis=0))
        if rows.size == 0:
            raise GridError("empty mask has no bounding box")
        return cls(int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)


def check_grid(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim not in (2, 3):
        raise GridError(f"expected a (h, w) or (h, w, c) grid, got shape {grid.shape}")
    if grid.shape[0] < 1 or grid.shape[1] < 1:
        raise GridError("grid must be at least 1x1")
    if not np.all(np.isfinite(grid)):
        raise GridError("grid contains non-finite values")
    return grid


def sigmoid_map(logits: np.ndarray) -> np.ndarray:
    """Elementwise logistic function, overflow-safe for large |z|."""
    z = np.asarray(logits, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def avg_pool(grid: np.ndarray, kernel: int = 4, stride: int = 4) -> np.ndarray:
    """Non-overlapping mean pooling without padding.

    Trailing rows/columns that do not fill a whole ``kernel x kernel`` block
    are dropped. Works on scalar and vector grids alike.
    """
    if kernel != stride:
        raise GridError("only non-overlapping pooling (kernel == stride) is supported")
    if kernel < 1:
        raise GridError("kernel must be >= 1")
    grid = check_grid(grid)
    h, w = grid.shape[:2]
    if h < kernel or w < kernel:
        raise GridError("grid too small")
    ph, pw = h // kernel, w // kernel
    block = grid[: ph * kernel, : pw * kernel]
    block = block.reshape((ph, kernel, pw, kernel) + grid.shape[2:])
    return block.mean(axis=(1, 3))


def upsample_nearest(grid: np.ndarray, factor: int, shape: tuple[int, int] | None = None) -> np.ndarray:
    """Nearest-neighbour upsampling by an integer factor.

    When ``shape`` is given the result is cropped, or padded by repeating the
    last row/column, to exactly that ``(h, w)``.
    """
    up = np.repeat(np.repeat(np.asarray(grid), factor, axis=0), factor, axis=1)
    if shape is None:
        return up
    h, w = shape
    up = up[:h, :w]
    pad_h, pad_w = h - up.shape[0], w - up.shape[1]
    if pad_h or pad_w:
        pad = [(0, pad_h), (0, pad_w)] + [(0, 0)] * (up.ndim - 2)
        up = np.pad(up, pad, mode="edge")
    return up


def project_x(m: np.ndarray) -> np.ndarray:
    """Column-wise max: one value per column (length ``w``)."""
    return np.asarray(m, dtype=float).max(axis=0)


def project_y(m: np.ndarray) -> np.ndarray:
    """Row-wise max: one value per row (length ``h``)."""
    return np.asarray(m, dtype=float).max(axis=1)


def box_indicator(b: BBox, h: int, w: int) -> np.ndarray:
    """Rasterize ``b`` as a 0/1 mask; parts outside the frame are clipped."""
    b = b.clamp(h, w)
    mask = np.zeros((h, w), dtype=np.uint8)
    mask[b.y1 : b.y2, b.x1 : b.x2] = 1
    return mask

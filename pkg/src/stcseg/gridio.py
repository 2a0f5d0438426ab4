"""Reader and writer for the plain-text ``STCGRID v1`` grid format.

Layout::

    STCGRID <channels> <height> <width>
    <row 0 values, channels interleaved per pixel>
    ...

Readers accept any whitespace layout after the header; writers emit one grid
row per line with 9 significant digits.
"""
from __future__ import annotations

import os

import numpy as np

MAGIC = "STCGRID"


class GridFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.line = line


def format_grid(grid: np.ndarray) -> str:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim == 2:
        grid = grid[:, :, None]
    if grid.ndim != 3:
        raise ValueError(f"cannot serialise array of shape {grid.shape}")
    h, w, c = grid.shape
    lines = [f"{MAGIC} {c} {h} {w}"]
    for row in grid.reshape(h, w * c):
        lines.append(" ".join(f"{v:.9g}" for v in row))
    return "\n".join(lines) + "\n"


def parse_grid(text: str, path: str | None = None) -> np.ndarray:
    """Parse STCGRID text; returns ``(h, w)`` for one channel, else ``(h, w, c)``."""
    lines = text.splitlines()
    header_idx = next((i for i, ln in enumerate(lines) if ln.strip()), None)
    if header_idx is None:
        raise GridFormatError("empty file", line=1, path=path)
    parts = lines[header_idx].split()
    if len(parts) != 4 or parts[0] != MAGIC:
        raise GridFormatError(
            f"malformed header {lines[header_idx]!r}, expected 'STCGRID <channels> <height> <width>'",
            line=header_idx + 1, path=path,
        )
    try:
        c, h, w = (int(p) for p in parts[1:])
    except ValueError:
        raise GridFormatError("header dimensions must be integers", line=header_idx + 1, path=path) from None
    if c < 1 or h < 1 or w < 1:
        raise GridFormatError("header dimensions must be positive", line=header_idx + 1, path=path)

    values: list[float] = []
    for lineno, ln in enumerate(lines[header_idx + 1 :], start=header_idx + 2):
        for tok in ln.split():
            try:
                values.append(float(tok))
            except ValueError:
                raise GridFormatError(f"not a number: {tok!r}", line=lineno, path=path) from None
    expected = c * h * w
    if len(values) != expected:
        raise GridFormatError(
            f"expected {expected} values, found {len(values)}", line=len(lines), path=path
        )
    arr = np.array(values, dtype=float).reshape(h, w, c)
    if not np.all(np.isfinite(arr)):
        raise GridFormatError("non-finite value in grid", path=path)
    return arr[:, :, 0] if c == 1 else arr


def read_grid(path: str | os.PathLike) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        return parse_grid(fh.read(), path=str(path))


def write_grid(path: str | os.PathLike, grid: np.ndarray) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_grid(grid))

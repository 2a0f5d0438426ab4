"""Pseudo-label generation from depth and optical flow.

Each input is average-pooled, turned into a contextual salience map by
comparing every cell with its dilated 3x3 neighbourhood, and the two maps are
fused with per-signal thresholds. The fused mask is upsampled back to frame
resolution.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridError, avg_pool, check_grid, upsample_nearest


def _default_kernel() -> np.ndarray:
    k = np.ones((3, 3))
    k[1, 1] = 0.0
    return k


@dataclass
class SignalConfig:
    r: float = 0.5
    p_norm: float = 2
    dilation: int = 2
    kernel_weights: np.ndarray = field(default_factory=_default_kernel)
    pool_kernel: int = 4
    pool_stride: int = 4
    phi_s: float = 0.3
    phi_t: float = 0.4

    def __post_init__(self):
        self.kernel_weights = np.asarray(self.kernel_weights, dtype=float)
        problems = []
        if not self.r > 0:
            problems.append("r must be > 0")
        if self.dilation < 1:
            problems.append("dilation must be >= 1")
        if self.pool_kernel != self.pool_stride or self.pool_kernel < 1:
            problems.append("pool_kernel must equal pool_stride and be >= 1")
        if self.phi_s < 0 or self.phi_t < 0:
            problems.append("thresholds must be >= 0")
        if self.kernel_weights.shape != (3, 3) or not np.isin(self.kernel_weights, (0.0, 1.0)).all():
            problems.append("kernel_weights must be a 3x3 array of 0/1")
        if problems:
            raise ValueError("invalid SignalConfig: " + "; ".join(problems))


def contextual_salience(x: np.ndarray, cfg: SignalConfig | None = None) -> np.ndarray:
    """Per-cell discrepancy with the dilated neighbourhood.

    ``S[i, j] = sum_k w_k * (exp(r * ||x[i + lam*k1, j + lam*k2] - x[i, j]||_p) - 1)``
    with replicate padding at the borders. The ``- 1`` removes the identity
    response so that uniform regions score exactly zero.
    """
    cfg = cfg or SignalConfig()
    x = check_grid(x)
    if x.ndim == 2:
        x = x[:, :, None]
    h, w = x.shape[:2]
    lam = cfg.dilation
    if h < 2 * lam + 1 or w < 2 * lam + 1:
        raise GridError("grid too small for dilation")

    padded = np.pad(x, ((lam, lam), (lam, lam), (0, 0)), mode="edge")
    s = np.zeros((h, w))
    for a, k1 in enumerate((-1, 0, 1)):
        for b, k2 in enumerate((-1, 0, 1)):
            wk = cfg.kernel_weights[a, b]
            if wk == 0:
                continue
            nb = padded[lam + lam * k1 : lam + lam * k1 + h, lam + lam * k2 : lam + lam * k2 + w]
            d = np.linalg.norm(nb - x, ord=cfg.p_norm, axis=2) if x.shape[2] > 1 else np.abs(nb - x)[:, :, 0]
            s += wk * np.expm1(cfg.r * d)
    return s


def fuse_signals(s_spatial: np.ndarray, s_temporal: np.ndarray, cfg: SignalConfig | None = None) -> np.ndarray:
    """Logical AND of the two thresholded salience maps."""
    cfg = cfg or SignalConfig()
    s_spatial, s_temporal = np.asarray(s_spatial), np.asarray(s_temporal)
    if s_spatial.shape != s_temporal.shape:
        raise GridError(f"signal shapes differ: {s_spatial.shape} vs {s_temporal.shape}")
    return ((s_spatial > cfg.phi_s) & (s_temporal > cfg.phi_t)).astype(np.uint8)


def salience_maps(depth: np.ndarray, flow: np.ndarray, cfg: SignalConfig | None = None):
    """Pooled spatial (depth) and temporal (flow) salience maps."""
    cfg = cfg or SignalConfig()
    s_sp = contextual_salience(avg_pool(depth, cfg.pool_kernel, cfg.pool_stride), cfg)
    s_tm = contextual_salience(avg_pool(flow, cfg.pool_kernel, cfg.pool_stride), cfg)
    return s_sp, s_tm


def generate_pseudo_label(
    depth: np.ndarray,
    flow: np.ndarray,
    cfg: SignalConfig | None = None,
    signals: str = "fused",
) -> np.ndarray:
    """Binary pseudo-label at frame resolution.

    ``signals`` selects ``"fused"`` (both maps, the default), ``"depth"`` or
    ``"flow"``; a single-signal label thresholds only that signal's map.
    """
    cfg = cfg or SignalConfig()
    depth, flow = check_grid(depth), check_grid(flow)
    if depth.shape[:2] != flow.shape[:2]:
        raise GridError(f"depth {depth.shape[:2]} and flow {flow.shape[:2]} frame sizes differ")
    s_sp, s_tm = salience_maps(depth, flow, cfg)
    if signals == "fused":
        pooled = fuse_signals(s_sp, s_tm, cfg)
    elif signals == "depth":
        pooled = (s_sp > cfg.phi_s).astype(np.uint8)
    elif signals == "flow":
        pooled = (s_tm > cfg.phi_t).astype(np.uint8)
    else:
        raise ValueError(f"unknown signal selection {signals!r}")
    return upsample_nearest(pooled, cfg.pool_stride, shape=depth.shape[:2]).astype(np.uint8)

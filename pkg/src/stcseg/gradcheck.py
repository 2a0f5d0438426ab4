"""Finite-difference verification of the analytic puzzle-loss gradient."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import BBox, sigmoid_map
from .puzzle import puzzle_loss, puzzle_loss_grad

TIE_GAP = 1e-3


def central_difference(f, x: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Elementwise ``(f(x + h e_i) - f(x - h e_i)) / 2h`` for scalar ``f``."""
    x = np.array(x, dtype=float)
    g = np.empty_like(x)
    flat, gflat = x.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = f(x)
        flat[i] = orig - step
        lo = f(x)
        flat[i] = orig
        gflat[i] = (hi - lo) / (2.0 * step)
    return g


def _top_gap(probs: np.ndarray, axis: int) -> float:
    s = np.sort(probs, axis=axis)
    top2 = np.take(s, [-1, -2], axis=axis)
    return float(np.min(np.take(top2, 0, axis=axis) - np.take(top2, 1, axis=axis)))


def random_instance(rng: np.random.Generator, h: int, w: int, logit_scale: float = 2.0):
    """Random ``(logits, M, box)`` with no near-ties among row or column maxima."""
    if h < 2 or w < 2:
        raise ValueError("gradcheck needs a grid of at least 2x2")
    while True:
        logits = logit_scale * rng.standard_normal((h, w))
        p = sigmoid_map(logits)
        if min(_top_gap(p, 0), _top_gap(p, 1)) < TIE_GAP:
            continue
        m = (rng.random((h, w)) < 0.3).astype(np.uint8)
        x1, x2 = sorted(rng.choice(w + 1, 2, replace=False))
        y1, y2 = sorted(rng.choice(h + 1, 2, replace=False))
        return logits, m, BBox(int(x1), int(y1), int(x2), int(y2))


@dataclass
class GradCheckResult:
    max_rel_error: float
    max_abs_error: float
    analytic: np.ndarray
    numeric: np.ndarray


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """``max|a - n| / max(max|a|, max|n|)``, the max-norm relative error (0 when both vanish)."""
    scale = max(np.abs(analytic).max(), np.abs(numeric).max())
    return float(np.abs(analytic - numeric).max() / scale) if scale > 0 else 0.0


def check_instance(logits, m, b, step: float = 1e-4) -> GradCheckResult:
    analytic = puzzle_loss_grad(logits, m, b)
    numeric = central_difference(lambda z: puzzle_loss(z, m, b).total, logits, step)
    return GradCheckResult(relative_error(analytic, numeric), float(np.abs(analytic - numeric).max()), analytic, numeric)


def gradcheck(seed: int = 0, h: int = 16, w: int = 16, step: float = 1e-4) -> GradCheckResult:
    rng = np.random.default_rng(seed)
    return check_instance(*random_instance(rng, h, w), step=step)

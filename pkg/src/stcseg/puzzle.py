"""Puzzle loss: positive-only boundary term plus projected box term.

The box term compares the x/y max-projections of the predicted mask with the
projections of the box annotation using dice loss with a position penalty
that charges predicted mass lying outside the box extent. Every loss here has
an analytic gradient with respect to the logits; max-projection gradients are
routed to the first maximiser (lowest row for ``project_x``, lowest column for
``project_y``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import BBox, GridError, box_indicator, project_x, project_y, sigmoid_map

EPS = 1e-7


@dataclass(frozen=True)
class LossBreakdown:
    l_bd: float
    l_bx_x: float
    l_bx_y: float

    @property
    def l_bx(self) -> float:
        return self.l_bx_x + self.l_bx_y

    @property
    def total(self) -> float:
        return self.l_bd + self.l_bx_x + self.l_bx_y


def _same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise GridError(f"shape mismatch: {a.shape} vs {b.shape}")


def boundary_loss(probs: np.ndarray, m: np.ndarray) -> float:
    """Cross entropy over positive pseudo-label pixels only, averaged over the grid."""
    probs, m = np.asarray(probs, dtype=float), np.asarray(m, dtype=float)
    _same_shape(probs, m)
    p = np.clip(probs, EPS, 1.0 - EPS)
    return float(-(m * np.log(p)).sum() / m.size)


def boundary_loss_grad_probs(probs: np.ndarray, m: np.ndarray) -> np.ndarray:
    probs, m = np.asarray(probs, dtype=float), np.asarray(m, dtype=float)
    inside = (probs >= EPS) & (probs <= 1.0 - EPS)
    return np.where(inside, -m / np.clip(probs, EPS, 1.0) / m.size, 0.0)


def bce_loss(probs: np.ndarray, m: np.ndarray) -> float:
    """Full binary cross entropy (positives and negatives) against ``m``."""
    probs, m = np.asarray(probs, dtype=float), np.asarray(m, dtype=float)
    _same_shape(probs, m)
    p = np.clip(probs, EPS, 1.0 - EPS)
    return float(-(m * np.log(p) + (1.0 - m) * np.log(1.0 - p)).sum() / m.size)


def bce_loss_grad_probs(probs: np.ndarray, m: np.ndarray) -> np.ndarray:
    probs, m = np.asarray(probs, dtype=float), np.asarray(m, dtype=float)
    inside = (probs >= EPS) & (probs <= 1.0 - EPS)
    p = np.clip(probs, EPS, 1.0 - EPS)
    return np.where(inside, (-m / p + (1.0 - m) / (1.0 - p)) / m.size, 0.0)


def _check_projection(p: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    p, g = np.asarray(p, dtype=float), np.asarray(g, dtype=float)
    if p.shape != g.shape or p.ndim != 1 or p.size < 1:
        raise GridError(f"projection vectors must be 1-D of equal length, got {p.shape} and {g.shape}")
    g_sq = float((g * g).sum())
    if g_sq == 0.0:
        raise GridError("empty ground-truth projection")
    return p, g, g_sq


def dice_loss(p: np.ndarray, g: np.ndarray) -> float:
    """Plain dice loss ``1 - 2 sum(pg) / sum(p^2 + g^2)``."""
    p, g, _ = _check_projection(p, g)
    return float(1.0 - 2.0 * (p * g).sum() / (p * p + g * g).sum())


def position_penalty(p: np.ndarray, g: np.ndarray) -> float:
    """Squared excess of ``p`` over ``g``, relative to the ground-truth mass."""
    p, g, g_sq = _check_projection(p, g)
    return float((np.maximum(p - g, 0.0) ** 2).sum() / g_sq)


def dice_prime(p: np.ndarray, g: np.ndarray) -> float:
    """Dice loss with position penalty."""
    return dice_loss(p, g) + position_penalty(p, g)


def dice_loss_grad(p: np.ndarray, g: np.ndarray) -> np.ndarray:
    p, g, _ = _check_projection(p, g)
    inter = (p * g).sum()
    denom = (p * p + g * g).sum()
    return -2.0 * g / denom + 4.0 * inter * p / denom**2


def position_penalty_grad(p: np.ndarray, g: np.ndarray) -> np.ndarray:
    p, g, g_sq = _check_projection(p, g)
    return 2.0 * np.maximum(p - g, 0.0) / g_sq


def dice_prime_grad(p: np.ndarray, g: np.ndarray) -> np.ndarray:
    return dice_loss_grad(p, g) + position_penalty_grad(p, g)


def _box_projections(b: BBox, h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    box = box_indicator(b, h, w)
    return project_x(box), project_y(box)


def box_term(probs: np.ndarray, b: BBox, penalty: bool = True) -> tuple[float, float]:
    """``(l_bx_x, l_bx_y)``; ``penalty=False`` gives the plain-dice variant."""
    probs = np.asarray(probs, dtype=float)
    h, w = probs.shape
    gx, gy = _box_projections(b, h, w)
    fn = dice_prime if penalty else dice_loss
    return fn(project_x(probs), gx), fn(project_y(probs), gy)


def box_term_grad_probs(probs: np.ndarray, b: BBox, penalty: bool = True) -> np.ndarray:
    """Subgradient of the box term with respect to the probability map."""
    probs = np.asarray(probs, dtype=float)
    h, w = probs.shape
    gx, gy = _box_projections(b, h, w)
    fn = dice_prime_grad if penalty else dice_loss_grad
    out = np.zeros_like(probs)
    cols = np.arange(w)
    rows = np.arange(h)
    # argmax returns the first maximiser, which is the tie-breaking rule
    out[probs.argmax(axis=0), cols] += fn(probs.max(axis=0), gx)
    out[rows, probs.argmax(axis=1)] += fn(probs.max(axis=1), gy)
    return out


def puzzle_loss(logits: np.ndarray, m: np.ndarray, b: BBox) -> LossBreakdown:
    """Boundary term plus box term (with position penalty) for one instance."""
    logits, m = np.asarray(logits, dtype=float), np.asarray(m)
    _same_shape(logits, m)
    probs = sigmoid_map(logits)
    lx, ly = box_term(probs, b)
    return LossBreakdown(boundary_loss(probs, m), lx, ly)


def puzzle_loss_grad(logits: np.ndarray, m: np.ndarray, b: BBox) -> np.ndarray:
    """Gradient of ``puzzle_loss(...).total`` with respect to each logit."""
    logits, m = np.asarray(logits, dtype=float), np.asarray(m)
    _same_shape(logits, m)
    probs = sigmoid_map(logits)
    d_probs = boundary_loss_grad_probs(probs, m) + box_term_grad_probs(probs, b)
    return d_probs * probs * (1.0 - probs)

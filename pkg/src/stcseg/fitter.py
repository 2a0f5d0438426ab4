"""Desk-scale mask fitting: gradient descent on a logit field under a loss variant.

A segmentation network shares parameters across pixels, so supervision on a
few pixels shapes the whole mask. The fitter mimics that with a two-scale
field over a region of interest around the box::

    logits = init_logit + G(fine_sigma) * theta_fine + G(coarse_sigma) * theta_coarse

where ``G`` is a zero-padded Gaussian blur (a symmetric linear operator, so
its adjoint is itself). Both fields start at zero and follow plain momentum
gradient descent. Pixels outside the region are background.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.ndimage import gaussian_filter

from . import puzzle
from .grid import BBox, GridError, sigmoid_map
from .signals import SignalConfig, generate_pseudo_label


class LossVariant(str, Enum):
    BX_DICE = "BX_DICE"
    BX_DICEP = "BX_DICEP"
    BCE_BX_DICE = "BCE_BX_DICE"
    BCE_BX_DICEP = "BCE_BX_DICEP"
    BD_BX_DICE = "BD_BX_DICE"
    BD_BX_DICEP = "BD_BX_DICEP"

    @property
    def pixel_term(self) -> str | None:
        if self.name.startswith("BCE_"):
            return "bce"
        if self.name.startswith("BD_"):
            return "bd"
        return None

    @property
    def penalty(self) -> bool:
        return self.name.endswith("DICEP")

    @classmethod
    def parse(cls, value: "str | LossVariant") -> "LossVariant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown loss variant {value!r}; choose from {[v.value for v in cls]}") from None


class FitError(RuntimeError):
    pass


@dataclass
class FitConfig:
    learning_rate: float = 8.0
    steps: int = 500
    momentum: float = 0.9
    init_logit: float = 0.0
    loss_variant: LossVariant = LossVariant.BD_BX_DICEP
    signals: str = "fused"
    roi_margin: int = 8
    fine_sigma: float = 0.5
    coarse_sigma: float = 3.0

    def __post_init__(self):
        self.loss_variant = LossVariant.parse(self.loss_variant)
        bad = []
        if self.learning_rate < 0:
            bad.append("learning_rate must be >= 0")
        if self.steps < 1:
            bad.append("steps must be >= 1")
        if not 0.0 <= self.momentum < 1.0:
            bad.append("momentum must lie in [0, 1)")
        if self.signals not in ("fused", "depth", "flow"):
            bad.append("signals must be fused, depth or flow")
        if self.roi_margin < 0 or self.fine_sigma < 0 or self.coarse_sigma < 0:
            bad.append("roi_margin and sigmas must be >= 0")
        if bad:
            raise ValueError("invalid FitConfig: " + "; ".join(bad))


@dataclass
class FitResult:
    final_mask: np.ndarray = field(repr=False)
    loss_curve: np.ndarray = field(repr=False)
    iou_vs_gt: float | None = None
    probs: np.ndarray | None = field(default=None, repr=False)
    roi: BBox | None = None


def iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two binary masks; 1.0 when both are empty."""
    a, b = np.asarray(a).astype(bool), np.asarray(b).astype(bool)
    if a.shape != b.shape:
        raise GridError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def variant_loss(probs: np.ndarray, m: np.ndarray, b: BBox, variant: LossVariant) -> float:
    lx, ly = puzzle.box_term(probs, b, penalty=variant.penalty)
    total = lx + ly
    if variant.pixel_term == "bd":
        total += puzzle.boundary_loss(probs, m)
    elif variant.pixel_term == "bce":
        total += puzzle.bce_loss(probs, m)
    return total


def variant_grad_logits(probs: np.ndarray, m: np.ndarray, b: BBox, variant: LossVariant) -> np.ndarray:
    g = puzzle.box_term_grad_probs(probs, b, penalty=variant.penalty)
    if variant.pixel_term == "bd":
        g = g + puzzle.boundary_loss_grad_probs(probs, m)
    elif variant.pixel_term == "bce":
        g = g + puzzle.bce_loss_grad_probs(probs, m)
    return g * probs * (1.0 - probs)


def _blur(a: np.ndarray, sigma: float) -> np.ndarray:
    return gaussian_filter(a, sigma, mode="constant") if sigma > 0 else a


class LogitField:
    """The two-scale parameterisation; ``grad`` maps logit gradients to parameter gradients."""

    def __init__(self, shape: tuple[int, int], cfg: FitConfig):
        self.cfg = cfg
        self.fine = np.zeros(shape)
        self.coarse = np.zeros(shape)

    def logits(self) -> np.ndarray:
        return self.cfg.init_logit + _blur(self.fine, self.cfg.fine_sigma) + _blur(self.coarse, self.cfg.coarse_sigma)

    def grad(self, g_logits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _blur(g_logits, self.cfg.fine_sigma), _blur(g_logits, self.cfg.coarse_sigma)


def roi_for(b: BBox, h: int, w: int, margin: int) -> BBox:
    return BBox(b.x1 - margin, b.y1 - margin, b.x2 + margin, b.y2 + margin).clamp(h, w)


def fit_logits(m: np.ndarray, b: BBox, cfg: FitConfig) -> tuple[np.ndarray, np.ndarray]:
    """Optimise a logit field for pseudo-label ``m`` and box ``b`` on the same grid.

    Returns ``(logits, loss_curve)``; the curve holds the loss before each step.
    """
    m = np.asarray(m, dtype=float)
    variant = cfg.loss_variant
    fld = LogitField(m.shape, cfg)
    v_fine = np.zeros(m.shape)
    v_coarse = np.zeros(m.shape)
    curve = np.empty(cfg.steps)
    for step in range(cfg.steps):
        probs = sigmoid_map(fld.logits())
        curve[step] = variant_loss(probs, m, b, variant)
        if not np.isfinite(curve[step]):
            raise FitError(f"diverged at step {step}")
        g_fine, g_coarse = fld.grad(variant_grad_logits(probs, m, b, variant))
        v_fine = cfg.momentum * v_fine - cfg.learning_rate * g_fine
        v_coarse = cfg.momentum * v_coarse - cfg.learning_rate * g_coarse
        fld.fine += v_fine
        fld.coarse += v_coarse
    logits = fld.logits()
    if not np.all(np.isfinite(logits)):
        raise FitError("diverged: non-finite logits")
    return logits, curve


def fit_mask(
    depth: np.ndarray,
    flow: np.ndarray,
    b: BBox,
    cfg: FitConfig | None = None,
    gt_mask: np.ndarray | None = None,
    pseudo_label: np.ndarray | None = None,
    signal_cfg: SignalConfig | None = None,
) -> FitResult:
    """Fit one instance mask inside the region around ``b``.

    The pseudo-label is generated from ``depth``/``flow`` unless given.
    ``final_mask`` is frame-sized with ``probs > 0.5`` inside the region.
    """
    cfg = cfg or FitConfig()
    depth = np.asarray(depth, dtype=float)
    h, w = depth.shape[:2]
    if not isinstance(b, BBox):
        b = BBox(*b)
    b = b.clamp(h, w)
    if pseudo_label is None:
        pseudo_label = generate_pseudo_label(depth, flow, signal_cfg, signals=cfg.signals)
    roi = roi_for(b, h, w, cfg.roi_margin)
    crop = (slice(roi.y1, roi.y2), slice(roi.x1, roi.x2))
    local_box = BBox(b.x1 - roi.x1, b.y1 - roi.y1, b.x2 - roi.x1, b.y2 - roi.y1)

    logits, curve = fit_logits(np.asarray(pseudo_label)[crop], local_box, cfg)
    probs = np.zeros((h, w))
    probs[crop] = sigmoid_map(logits)
    final = np.zeros((h, w), dtype=np.uint8)
    final[crop] = probs[crop] > 0.5
    score = iou(final, gt_mask) if gt_mask is not None else None
    return FitResult(final, curve, score, probs, roi)

"""Weakly supervised video instance segmentation core on dense grids.

Pseudo-labels from depth and flow, the puzzle loss with analytic gradients, a
logit-field mask fitter, a diagonal-point tracker, a synthetic scene
generator and MOTS metrics.
"""
__version__ = "0.1.0"

from .fitter import FitConfig, FitResult, LossVariant, fit_mask, iou
from .grid import BBox, GridError, avg_pool, box_indicator, project_x, project_y, upsample_nearest
from .gridio import GridFormatError, read_grid, write_grid
from .metrics import EvalReport, evaluate
from .puzzle import LossBreakdown, box_term, dice_prime, puzzle_loss, puzzle_loss_grad
from .scene import ObjectSpec, SceneConfig, SceneFrame, generate_scene
from .signals import SignalConfig, contextual_salience, generate_pseudo_label
from .tracker import Detection, Tracker, TrackerConfig, bi_greedy_match, multi_stage_match

__all__ = [
    "BBox", "Detection", "EvalReport", "FitConfig", "FitResult", "GridError", "GridFormatError",
    "LossBreakdown", "LossVariant", "ObjectSpec", "SceneConfig", "SceneFrame", "SignalConfig",
    "Tracker", "TrackerConfig", "avg_pool", "bi_greedy_match", "box_term", "box_indicator",
    "contextual_salience", "dice_prime", "evaluate", "fit_mask", "generate_pseudo_label",
    "generate_scene", "iou", "multi_stage_match", "project_x", "project_y", "puzzle_loss",
    "puzzle_loss_grad", "read_grid", "upsample_nearest", "write_grid",
]

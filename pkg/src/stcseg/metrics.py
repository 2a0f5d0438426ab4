"""MOTS-style evaluation: sMOTSA, MOTSA, MOTSP and identity switches.

Per frame, predicted masks are matched one-to-one to ground-truth masks by
greedy descending IoU, accepting only pairs with IoU > 0.5. Above that
threshold a mask can overlap more than half of at most one disjoint partner,
so the greedy assignment is also the optimal one.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .grid import box_indicator

IOU_THRESHOLD = 0.5


class EvalError(ValueError):
    pass


@dataclass
class EvalReport:
    motsa: float
    smotsa: float
    motsp: float
    id_switches: int
    tp: int
    fp: int
    fn: int
    mean_iou: float
    n_gt: int

    def as_dict(self) -> dict:
        return asdict(self)

    def machine(self) -> str:
        lines = []
        for k, v in self.as_dict().items():
            lines.append(f"{k}={v}" if isinstance(v, int) else f"{k}={v:.6f}")
        return "\n".join(lines) + "\n"

    def text(self) -> str:
        return (
            f"sMOTSA {self.smotsa:7.4f}  MOTSA {self.motsa:7.4f}  MOTSP {self.motsp:6.4f}\n"
            f"TP {self.tp}  FP {self.fp}  FN {self.fn}  IDS {self.id_switches}  GT {self.n_gt}\n"
        )


def iou_matrix(pred: list[np.ndarray], gt: list[np.ndarray]) -> np.ndarray:
    if not pred or not gt:
        return np.zeros((len(pred), len(gt)))
    P = np.stack([np.asarray(m, dtype=bool).ravel() for m in pred]).astype(float)
    G = np.stack([np.asarray(m, dtype=bool).ravel() for m in gt]).astype(float)
    inter = P @ G.T
    union = P.sum(1)[:, None] + G.sum(1)[None, :] - inter
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(union > 0, inter / np.where(union > 0, union, 1.0), 0.0)


def greedy_iou_match(ious: np.ndarray, threshold: float = IOU_THRESHOLD) -> list[tuple[int, int]]:
    """``[(pred, gt)]`` pairs taken in descending IoU order, each index used once.

    Ties resolve by lower prediction index, then lower ground-truth index.
    """
    ious = np.asarray(ious, dtype=float)
    pairs = [(-ious[i, j], i, j) for i in range(ious.shape[0]) for j in range(ious.shape[1]) if ious[i, j] > threshold]
    pairs.sort()
    used_p, used_g, out = set(), set(), []
    for _, i, j in pairs:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        out.append((i, j))
    return sorted(out)


def _pred_mask(rec, shape) -> np.ndarray:
    if rec.mask is not None:
        m = np.asarray(rec.mask, dtype=bool)
        if m.shape != tuple(shape):
            raise EvalError(f"frame {rec.frame_id} track {rec.track_id}: mask shape {m.shape} != frame {tuple(shape)}")
        return m
    return box_indicator(rec.bbox, shape[0], shape[1]).astype(bool)


def evaluate(tracks, gt_frames) -> EvalReport:
    """Score tracker output against ground truth.

    ``tracks`` is a flat iterable of records with ``frame_id``, ``track_id``,
    ``bbox`` and optional ``mask`` (the box is rasterised when the mask is
    absent). ``gt_frames`` is a sequence of frames with ``frame_id`` and
    ``gt`` instances carrying ``instance_id`` and ``mask``.
    """
    gt_by_frame = {}
    for f in gt_frames:
        if f.frame_id in gt_by_frame:
            raise EvalError(f"duplicate ground-truth frame {f.frame_id}")
        gt_by_frame[f.frame_id] = f
    pred_by_frame: dict[int, list] = {}
    for rec in tracks:
        if rec.frame_id not in gt_by_frame:
            raise EvalError(f"frame mismatch: tracks reference frame {rec.frame_id} absent from ground truth")
        pred_by_frame.setdefault(rec.frame_id, []).append(rec)

    tp = fp = fn = ids = n_gt = 0
    iou_sum = 0.0
    last_track: dict[int, int] = {}
    for fid in sorted(gt_by_frame):
        frame = gt_by_frame[fid]
        gts = list(frame.gt)
        preds = sorted(pred_by_frame.get(fid, []), key=lambda r: r.track_id)
        n_gt += len(gts)
        if gts:
            shape = np.asarray(gts[0].mask).shape
        elif preds:
            fp += len(preds)
            continue
        else:
            continue
        ious = iou_matrix([_pred_mask(r, shape) for r in preds], [g.mask for g in gts])
        pairs = greedy_iou_match(ious)
        tp += len(pairs)
        fp += len(preds) - len(pairs)
        fn += len(gts) - len(pairs)
        # ground-truth order keeps the float sum independent of track labels
        for i, j in sorted(pairs, key=lambda ij: ij[1]):
            iou_sum += ious[i, j]
            gid, tid = gts[j].instance_id, preds[i].track_id
            if gid in last_track and last_track[gid] != tid:
                ids += 1
            last_track[gid] = tid

    if n_gt == 0:
        motsa = smotsa = 0.0
    else:
        motsa = 1.0 - (fn + fp + ids) / n_gt
        smotsa = (iou_sum - fp - ids) / n_gt
    motsp = iou_sum / tp if tp else 0.0
    return EvalReport(float(motsa), float(smotsa), float(motsp), ids, tp, fp, fn, float(motsp), n_gt)

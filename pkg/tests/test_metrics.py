import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import exhaustive_best_matching, mask_iou
from stcseg.grid import BBox
from stcseg.metrics import EvalError, evaluate, greedy_iou_match, iou_matrix
from stcseg.scene import ObjectSpec, SceneConfig, generate_scene
from stcseg.tracker import TrackOutput


def _frames(seed=0, n_frames=6):
    rng = np.random.default_rng(seed)
    objs = [ObjectSpec("ellipse", (10, 12), (float(4 + 20 * k), float(rng.integers(5, 30))), (1.0, 0.0), 2.0 + k)
            for k in range(3)]
    return generate_scene(SceneConfig(height=48, width=72, objects=objs, n_frames=n_frames, seed=seed))


def _perfect(frames, id_of=lambda g: g.instance_id + 10):
    return [TrackOutput(f.frame_id, id_of(g), g.bbox, g.mask) for f in frames for g in f.gt]


def test_perfect_predictions():
    frames = _frames()
    r = evaluate(_perfect(frames), frames)
    assert (r.motsa, r.smotsa, r.motsp, r.id_switches, r.fp, r.fn) == (1.0, 1.0, 1.0, 0, 0, 0)
    assert r.tp == r.n_gt == 18


def test_empty_predictions():
    frames = _frames()
    r = evaluate([], frames)
    assert r.fn == r.n_gt and r.motsa == 0 and r.smotsa == 0 and r.motsp == 0


def test_box_is_used_when_mask_missing():
    frames = _frames()
    recs = [TrackOutput(o.frame_id, o.track_id, o.bbox) for o in _perfect(frames)]
    r = evaluate(recs, frames)
    # an ellipse covers about pi/4 of its box
    assert r.tp == r.n_gt and 0.7 < r.motsp < 0.85


def test_unknown_frame_is_an_error():
    frames = _frames()
    with pytest.raises(EvalError, match="frame mismatch"):
        evaluate([TrackOutput(99, 1, BBox(0, 0, 2, 2))], frames)


def test_report_formats():
    frames = _frames()
    r = evaluate(_perfect(frames), frames)
    lines = dict(ln.split("=") for ln in r.machine().splitlines())
    assert lines["motsa"] == "1.000000" and lines["id_switches"] == "0"
    assert "sMOTSA" in r.text()


def _noisy_predictions(frames, seed):
    rng = np.random.default_rng(seed)
    out = []
    for f in frames:
        for g in f.gt:
            if rng.random() < 0.2:
                continue
            m = g.mask.copy()
            m[rng.random(m.shape) < 0.02] ^= 1
            out.append(TrackOutput(f.frame_id, int(rng.integers(1, 5)), g.bbox, m))
        if rng.random() < 0.5:
            fp = np.zeros_like(f.depth, dtype=np.uint8)
            fp[40:46, 60:70] = 1
            out.append(TrackOutput(f.frame_id, 9, BBox(60, 40, 70, 46), fp))
    return out


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.integers(0, 2**31 - 1))
def test_metric_invariants(scene_seed, seed):
    frames = _frames(scene_seed)
    preds = _noisy_predictions(frames, seed)
    r = evaluate(preds, frames)
    assert r.smotsa <= r.motsa
    assert r.tp + r.fn == r.n_gt
    assert 0 <= r.motsp <= 1

    perm = {i: p for i, p in zip(range(1, 10), np.random.default_rng(seed).permutation(np.arange(101, 110)))}
    relabelled = [TrackOutput(o.frame_id, int(perm[o.track_id]), o.bbox, o.mask) for o in preds]
    assert evaluate(relabelled, frames) == r

    fps = [o for o in preds if o.track_id == 9]
    if fps:
        fewer = [o for o in preds if o is not fps[0]]
        assert evaluate(fewer, frames).motsa > r.motsa


def test_greedy_iou_match_examples():
    ious = np.array([[0.9, 0.6], [0.7, 0.55]])
    assert greedy_iou_match(ious) == [(0, 0), (1, 1)]
    assert greedy_iou_match(np.array([[0.5]])) == []


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_greedy_equals_exhaustive_on_disjoint_gt(seed):
    rng = np.random.default_rng(seed)
    gt = []
    for k in range(int(rng.integers(1, 4))):
        m = np.zeros((12, 30), dtype=np.uint8)
        m[2:10, 10 * k + 1 : 10 * k + 9] = 1
        gt.append(m)
    pred = []
    for _ in range(int(rng.integers(0, 5))):
        m = np.zeros((12, 30), dtype=np.uint8)
        x, y = int(rng.integers(0, 24)), int(rng.integers(0, 6))
        m[y : y + int(rng.integers(3, 9)), x : x + int(rng.integers(3, 9))] = 1
        pred.append(m)
    ious = iou_matrix(pred, gt)
    assert np.allclose(ious, [[mask_iou(p, g) for g in gt] for p in pred]) if pred else ious.shape == (0, len(gt))
    pairs = greedy_iou_match(ious)
    best = exhaustive_best_matching(ious.tolist())
    assert len(pairs) == best[0]
    assert sum(ious[i, j] for i, j in pairs) == pytest.approx(best[1])

"""Ablation harness: loss variants, supervision signals, signal noise and tracking strategies.

Two fixed synthetic suites are generated from a single seed:

* a 10-scene fitting suite (two objects per 128x128 scene, one per half,
  alternating rectangles and ellipses) fitted once per object and variant;
* a 50-sequence tracking suite of two objects crossing at different depths
  with detection jitter and random misses.

Every trend check is directional. Results are independent of the worker
count because each job is pure and results are reassembled in job order.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .fitter import FitConfig, LossVariant, fit_mask
from .metrics import evaluate
from .scene import ObjectSpec, SceneConfig, generate_scene
from .tracker import TrackerConfig, track_frames

DEFAULT_SEED = 42
NOISY_SIGMA = 0.5
MARGIN = 0.01

# CP: box-centre distance only; DP: diagonal-corner distance only;
# DP+SD: corner distance plus depth and flow sampled along the diagonal
TRACKING_VARIANTS = {
    "CP": dict(alpha=(1.0, 0.0, 0.0), location="center"),
    "DP": dict(alpha=(1.0, 0.0, 0.0), location="diagonal"),
    "DP+SD": dict(),
}


class SuiteError(RuntimeError):
    pass


def worker_count() -> int:
    n = os.cpu_count() or 1
    cap = os.environ.get("STCSEG_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValueError(f"STCSEG_THREADS must be an integer, got {cap!r}") from None
    return n


def _map(fn, items: list, workers: int | None = None) -> list:
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def fitting_scene_configs(seed: int = DEFAULT_SEED, n: int = 10, noise_sigma: float = 0.0) -> list[SceneConfig]:
    out = []
    for s in range(n):
        rng = np.random.default_rng([seed, 0, s])
        objs = []
        for k in range(2):
            hh, ww = int(rng.integers(20, 41)), int(rng.integers(20, 41))
            x = 8 + 64 * k + int(rng.integers(0, 56 - ww + 1))
            y = int(rng.integers(8, 128 - hh - 8))
            v = (float(rng.choice([-3, -2, 2, 3])), float(rng.choice([-2, -1, 1, 2])))
            shape = "rectangle" if (s + k) % 2 == 0 else "ellipse"
            objs.append(ObjectSpec(shape, (hh, ww), (x, y), v, float(rng.uniform(3, 7))))
        out.append(SceneConfig(objects=objs, n_frames=1, noise_sigma=noise_sigma, seed=seed * 1000 + s))
    return out


def tracking_sequence_configs(seed: int = DEFAULT_SEED, n: int = 50, jitter: int = 2, miss_prob: float = 0.1) -> list[SceneConfig]:
    """Two objects entering from opposite sides on nearby rows, one near and one far."""
    out = []
    W = H = 128
    for s in range(n):
        rng = np.random.default_rng([seed, 1, s])
        sizes = [(int(rng.integers(14, 30)), int(rng.integers(14, 30))) for _ in range(2)]
        depths = [float(rng.uniform(2, 4)), float(rng.uniform(6, 8))]
        if rng.random() < 0.5:
            depths.reverse()
        speeds = [float(rng.uniform(3, 5)), float(rng.uniform(3, 5))]
        y0 = int(rng.integers(30, 70))
        dy = int(rng.integers(-6, 7))
        objs = []
        for k in range(2):
            h, w = sizes[k]
            x = 4.0 if k == 0 else W - w - 4.0
            vx = speeds[k] if k == 0 else -speeds[k]
            y = min(max(y0 + (dy if k else 0), 0), H - h)
            vy = float(rng.uniform(-0.5, 0.5))
            shape = ("rectangle", "ellipse")[int(rng.integers(2))]
            objs.append(ObjectSpec(shape, (h, w), (x, float(y)), (vx, vy), depths[k]))
        out.append(SceneConfig(height=H, width=W, objects=objs, n_frames=20, jitter=jitter, miss_prob=miss_prob, seed=seed * 1000 + s))
    return out


def perfect_sequence_config(seed: int = DEFAULT_SEED) -> SceneConfig:
    """Non-crossing rectangles with exact detections (no jitter, no misses)."""
    objs = [
        ObjectSpec("rectangle", (16, 20), (5.0, 10.0), (3.0, 1.0), 4.0),
        ObjectSpec("rectangle", (24, 18), (100.0, 80.0), (-2.0, -1.0), 6.0),
    ]
    return SceneConfig(objects=objs, n_frames=20, seed=seed)


def _fit_job(job) -> list[float]:
    cfg, variant, signals = job
    frame = generate_scene(cfg)[0]
    fc = FitConfig(loss_variant=variant, signals=signals)
    return [fit_mask(frame.depth, frame.flow, g.bbox, fc, gt_mask=g.mask).iou_vs_gt for g in frame.gt]


def _track_job(job) -> tuple[int, float, float]:
    cfg, tracker_kw = job
    frames = generate_scene(cfg)
    out = track_frames(frames, TrackerConfig(**tracker_kw))
    r = evaluate([o for f in out for o in f], frames)
    return r.id_switches, r.motsa, r.smotsa


def fit_suite_ious(configs: list[SceneConfig], variant, signals: str = "fused", workers: int | None = None) -> np.ndarray:
    variant = LossVariant.parse(variant)
    try:
        per_scene = _map(_fit_job, [(c, variant, signals) for c in configs], workers)
    except Exception as e:
        raise SuiteError(f"fitting variant {variant.value}/{signals} failed: {e}") from e
    return np.array([v for scene in per_scene for v in scene])


def track_suite(configs: list[SceneConfig], tracker_kw: dict, name: str = "", workers: int | None = None) -> dict:
    try:
        rows = _map(_track_job, [(c, tracker_kw) for c in configs], workers)
    except Exception as e:
        raise SuiteError(f"tracking variant {name or tracker_kw} failed: {e}") from e
    ids, motsa, smotsa = (np.array(x) for x in zip(*rows))
    return {"ids": int(ids.sum()), "motsa": float(motsa.mean()), "smotsa": float(smotsa.mean())}


@dataclass
class SuiteReport:
    seed: int
    fit_rows: dict[str, float] = field(default_factory=dict)
    track_rows: dict[str, dict] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def text(self) -> str:
        lines = [f"ablation suite (seed {self.seed})", "", f"{'fitting run':<28} {'mean IoU':>8}"]
        for k, v in self.fit_rows.items():
            lines.append(f"{k:<28} {v:8.4f}")
        lines += ["", f"{'tracking variant':<12} {'IDS':>5} {'MOTSA':>8} {'sMOTSA':>8}"]
        for k, r in self.track_rows.items():
            lines.append(f"{k:<12} {r['ids']:5d} {r['motsa']:8.4f} {r['smotsa']:8.4f}")
        lines += ["", "trend checks"]
        for k, ok in self.checks.items():
            lines.append(f"  {'PASS' if ok else 'FAIL'}  {k}")
        return "\n".join(lines) + "\n"

    def machine(self) -> str:
        lines = [f"seed={self.seed}"]
        for k, v in self.fit_rows.items():
            lines.append(f"fit.{k}.mean_iou={v:.6f}")
        for k, r in self.track_rows.items():
            lines.append(f"track.{k}.ids={r['ids']}")
            lines.append(f"track.{k}.motsa={r['motsa']:.6f}")
            lines.append(f"track.{k}.smotsa={r['smotsa']:.6f}")
        for k, ok in self.checks.items():
            lines.append(f"check.{k}={'pass' if ok else 'fail'}")
        return "\n".join(lines) + "\n"


LOSS_ORDER = ["BD_BX_DICEP", "BD_BX_DICE", "BCE_BX_DICE", "BX_DICE"]


def run_ablation_suite(seed: int = DEFAULT_SEED, workers: int | None = None, include_tracking: bool = True, include_fitting: bool = True) -> SuiteReport:
    rep = SuiteReport(seed)
    if include_fitting:
        clean = fitting_scene_configs(seed)
        for v in LossVariant:
            rep.fit_rows[f"loss.{v.value}"] = float(fit_suite_ious(clean, v, workers=workers).mean())
        fused = rep.fit_rows["loss.BD_BX_DICEP"]
        for sig in ("depth", "flow"):
            rep.fit_rows[f"signals.{sig}"] = float(fit_suite_ious(clean, "BD_BX_DICEP", sig, workers).mean())
        rep.fit_rows["signals.fused"] = fused
        noisy = fitting_scene_configs(seed, noise_sigma=NOISY_SIGMA)
        rep.fit_rows["noise.clean"] = fused
        rep.fit_rows["noise.sigma_0.5"] = float(fit_suite_ious(noisy, "BD_BX_DICEP", workers=workers).mean())

        order = [rep.fit_rows[f"loss.{v}"] for v in LOSS_ORDER]
        rep.checks["loss_order"] = all(a - b >= MARGIN for a, b in zip(order, order[1:]))
        rep.checks["fused_signals"] = fused >= max(rep.fit_rows["signals.depth"], rep.fit_rows["signals.flow"]) - MARGIN
        rep.checks["clean_vs_noisy"] = fused >= rep.fit_rows["noise.sigma_0.5"]

    if include_tracking:
        seqs = tracking_sequence_configs(seed)
        for name, kw in TRACKING_VARIANTS.items():
            rep.track_rows[name] = track_suite(seqs, kw, name, workers)
        perfect = track_suite([perfect_sequence_config(seed)], {"min_hits": 1}, "perfect", workers)
        rep.track_rows["perfect"] = perfect
        cp, dp, sd = (rep.track_rows[k] for k in ("CP", "DP", "DP+SD"))
        rep.checks["ids_order"] = sd["ids"] <= dp["ids"] <= cp["ids"]
        rep.checks["motsa_sd_vs_cp"] = sd["motsa"] >= cp["motsa"]
        rep.checks["perfect_tracking"] = perfect["ids"] == 0 and perfect["motsa"] == 1.0
    return rep


def write_suite_outputs(rep: SuiteReport, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.txt"), "w") as fh:
        fh.write(rep.text())
    with open(os.path.join(out_dir, "report.machine"), "w") as fh:
        fh.write(rep.machine())

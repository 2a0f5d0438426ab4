"""Deterministic synthetic scenes: moving rigid objects over a flat background.

Depth and flow are piecewise constant per object, occlusion is resolved by
depth (nearest object wins, lower index on ties) and detections are the
ground-truth boxes with seeded integer jitter, random misses and a score
that drops with the occluded fraction of the object.

Random numbers come from ``numpy.random.Generator(PCG64(seed))``. Per frame
the draws happen in this order: depth noise (``h*w`` normals) and flow noise
(``h*w*2`` normals) when ``noise_sigma > 0``; then, for each visible
instance in ascending id order, one uniform for the miss test, four integers
for the box jitter and one uniform for the score noise. Draws are made even
when their result is unused so streams do not depend on earlier outcomes.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import BBox
from .tracker import Detection

SHAPES = ("rectangle", "ellipse")


class SceneConfigError(ValueError):
    pass


@dataclass
class ObjectSpec:
    shape: str
    size: tuple[int, int]  # (height, width)
    position: tuple[float, float]  # top-left (x, y) at frame 0
    velocity: tuple[float, float] = (0.0, 0.0)  # pixels / frame, (vx, vy)
    depth: float = 5.0
    class_id: int = 0

    def template(self) -> np.ndarray:
        h, w = self.size
        if self.shape == "rectangle":
            return np.ones((h, w), dtype=bool)
        yy, xx = np.mgrid[0:h, 0:w]
        return ((yy + 0.5 - h / 2) / (h / 2)) ** 2 + ((xx + 0.5 - w / 2) / (w / 2)) ** 2 <= 1.0

    def top_left(self, t: int) -> tuple[int, int]:
        x = self.position[0] + t * self.velocity[0]
        y = self.position[1] + t * self.velocity[1]
        return int(np.floor(x)), int(np.floor(y))


@dataclass
class SceneConfig:
    height: int = 128
    width: int = 128
    objects: list[ObjectSpec] = field(default_factory=list)
    background_depth: float = 10.0
    global_flow: tuple[float, float] = (0.0, 0.0)
    n_frames: int = 10
    jitter: int = 0
    miss_prob: float = 0.0
    base_score: float = 0.9
    score_noise: float = 0.05
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.objects = [o if isinstance(o, ObjectSpec) else ObjectSpec(**o) for o in self.objects]
        for o in self.objects:
            o.size = tuple(int(v) for v in o.size)
            o.position = tuple(float(v) for v in o.position)
            o.velocity = tuple(float(v) for v in o.velocity)
        self.global_flow = tuple(float(v) for v in self.global_flow)
        self.validate()

    def validate(self) -> None:
        bad = []
        if self.height < 1:
            bad.append("height")
        if self.width < 1:
            bad.append("width")
        if self.n_frames < 1:
            bad.append("n_frames")
        if self.jitter < 0:
            bad.append("jitter")
        if not 0.0 <= self.miss_prob < 1.0:
            bad.append("miss_prob")
        if self.noise_sigma < 0:
            bad.append("noise_sigma")
        if len(self.global_flow) != 2:
            bad.append("global_flow")
        for i, o in enumerate(self.objects):
            if o.shape not in SHAPES:
                bad.append(f"objects[{i}].shape")
            if len(o.size) != 2 or min(o.size) < 1:
                bad.append(f"objects[{i}].size")
            if not o.depth < self.background_depth:
                bad.append(f"objects[{i}].depth")
            x, y = o.top_left(0)
            if len(o.size) == 2 and not (0 <= x and 0 <= y and x + o.size[1] <= self.width and y + o.size[0] <= self.height):
                bad.append(f"objects[{i}].position")
        if bad:
            raise SceneConfigError("invalid scene config fields: " + ", ".join(bad))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["objects"] = [dict(asdict(o), size=list(o.size), position=list(o.position), velocity=list(o.velocity)) for o in self.objects]
        d["global_flow"] = list(self.global_flow)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SceneConfig":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(d) - known)
        if unknown:
            raise SceneConfigError("unknown scene config keys: " + ", ".join(unknown))
        obj_known = set(ObjectSpec.__dataclass_fields__)
        objects = []
        for i, o in enumerate(d.get("objects", [])):
            extra = sorted(set(o) - obj_known)
            if extra:
                raise SceneConfigError(f"unknown keys in objects[{i}]: " + ", ".join(extra))
            missing = sorted(k for k in ("shape", "size", "position") if k not in o)
            if missing:
                raise SceneConfigError(f"objects[{i}] missing required keys: " + ", ".join(missing))
            objects.append(ObjectSpec(**o))
        return cls(**{**d, "objects": objects})


@dataclass
class GTInstance:
    instance_id: int
    bbox: BBox
    mask: np.ndarray = field(repr=False)
    depth: float
    class_id: int = 0
    occluded_fraction: float = 0.0


@dataclass
class SceneFrame:
    frame_id: int
    depth: np.ndarray = field(repr=False)
    flow: np.ndarray = field(repr=False)
    gt: list[GTInstance]
    detections: list[Detection]


def render_frame(cfg: SceneConfig, t: int):
    """Noise-free depth, flow, owner map and per-object in-frame pixel counts at frame ``t``.

    ``owner`` holds the object index owning each pixel, ``-1`` for background.
    """
    h, w = cfg.height, cfg.width
    depth = np.full((h, w), float(cfg.background_depth))
    flow = np.empty((h, w, 2))
    flow[:] = cfg.global_flow
    owner = np.full((h, w), -1, dtype=int)
    full = np.zeros(len(cfg.objects), dtype=int)
    # far objects first so nearer ones overwrite; reversed index so lower index wins ties
    order = sorted(range(len(cfg.objects)), key=lambda i: (-cfg.objects[i].depth, -i))
    for i in order:
        o = cfg.objects[i]
        tpl = o.template()
        x0, y0 = o.top_left(t)
        ys0, xs0 = max(y0, 0), max(x0, 0)
        ys1, xs1 = min(y0 + tpl.shape[0], h), min(x0 + tpl.shape[1], w)
        if ys0 >= ys1 or xs0 >= xs1:
            continue
        sub = tpl[ys0 - y0 : ys1 - y0, xs0 - x0 : xs1 - x0]
        full[i] = int(sub.sum())
        region = (slice(ys0, ys1), slice(xs0, xs1))
        depth[region][sub] = o.depth
        flow[region][sub] = (o.velocity[0] + cfg.global_flow[0], o.velocity[1] + cfg.global_flow[1])
        owner[region][sub] = i
    return depth, flow, owner, full


def _jitter_box(b: BBox, d: np.ndarray, h: int, w: int) -> BBox:
    x1 = min(max(b.x1 + int(d[0]), 0), w - 1)
    y1 = min(max(b.y1 + int(d[1]), 0), h - 1)
    x2 = min(max(b.x2 + int(d[2]), 1), w)
    y2 = min(max(b.y2 + int(d[3]), 1), h)
    if x1 >= x2:
        x1, x2 = b.x1, b.x2
    if y1 >= y2:
        y1, y2 = b.y1, b.y2
    return BBox(x1, y1, x2, y2)


def generate_scene(cfg: SceneConfig) -> list[SceneFrame]:
    """Render every frame and its noisy detections.

    One ``PCG64(cfg.seed)`` stream is consumed in a fixed order: per frame,
    depth noise then flow noise (only when ``noise_sigma > 0``), then per
    visible object in index order one miss uniform, four jitter integers in
    ``[-jitter, jitter]`` and one score uniform in ``[-1, 1)``. The draws are
    taken even for missed detections so the stream never depends on outcomes.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    h, w = cfg.height, cfg.width
    frames = []
    for t in range(cfg.n_frames):
        depth, flow, owner, full = render_frame(cfg, t)
        if cfg.noise_sigma > 0:
            depth = depth + cfg.noise_sigma * rng.standard_normal((h, w))
            flow = flow + cfg.noise_sigma * rng.standard_normal((h, w, 2))
        gt, dets = [], []
        for i, o in enumerate(cfg.objects):
            mask = owner == i
            visible = int(mask.sum())
            if visible == 0:
                continue
            occluded = 1.0 - visible / full[i]
            inst = GTInstance(i + 1, BBox.from_mask(mask), mask.astype(np.uint8), float(o.depth), o.class_id, occluded)
            gt.append(inst)
            u_miss = rng.random()
            d = rng.integers(-cfg.jitter, cfg.jitter + 1, size=4)
            u_score = rng.uniform(-1.0, 1.0)
            if u_miss < cfg.miss_prob:
                continue
            score = float(np.clip(cfg.base_score - occluded + cfg.score_noise * u_score, 0.0, 1.0))
            dets.append(Detection(_jitter_box(inst.bbox, d, h, w), score, o.class_id, t))
        frames.append(SceneFrame(t, depth, flow, gt, dets))
    return frames

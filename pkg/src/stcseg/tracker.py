"""Diagonal-point multi-object tracker with bi-greedy matching.

Tracks are represented by their box corners ``(x1, y1, x2, y2)``. Each frame
the tracker predicts every track forward, scores track/detection pairs with a
weighted sum of corner distance, corner-depth discrepancy and corner-flow
discrepancy, and associates in two rounds: confident detections first, then
low-score detections (typically occluded objects) against the tracks still
unmatched. Only confident detections may start new tracks.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .grid import BBox

NEW = None


@dataclass
class Detection:
    bbox: BBox
    score: float = 1.0
    class_id: int = 0
    frame_id: int = 0
    mask: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.bbox, BBox):
            self.bbox = BBox(*self.bbox)
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score {self.score} outside [0, 1]")


@dataclass
class TrackerConfig:
    alpha: tuple[float, float, float] = (0.7, 0.2, 0.1)
    tau_high: float = 0.5
    tau_low: float = 0.1
    max_age: int = 30
    min_hits: int = 2
    gate_distance: float = 0.4
    process_noise: float = 1e-2
    measurement_noise: float = 1e-1
    matching: str = "bigreedy"  # or "greedy"
    motion: str = "kalman"  # or "delta"
    location: str = "diagonal"  # or "center"
    corner_inset: float = 0.25
    signature_min_score: float = 0.8

    def __post_init__(self):
        self.alpha = tuple(float(a) for a in self.alpha)
        bad = []
        if len(self.alpha) != 3 or min(self.alpha) < 0 or not np.isclose(sum(self.alpha), 1.0):
            bad.append("alpha must be three non-negative weights summing to 1")
        if not 0.0 <= self.tau_low <= self.tau_high <= 1.0:
            bad.append("need 0 <= tau_low <= tau_high <= 1")
        if self.max_age < 0 or self.min_hits < 1:
            bad.append("max_age must be >= 0 and min_hits >= 1")
        if not 0.0 <= self.corner_inset < 0.5:
            bad.append("corner_inset must lie in [0, 0.5)")
        if self.gate_distance <= 0:
            bad.append("gate_distance must be > 0")
        if self.process_noise < 0 or self.measurement_noise < 0:
            bad.append("noise scales must be >= 0")
        if self.matching not in ("bigreedy", "greedy"):
            bad.append("matching must be bigreedy or greedy")
        if self.motion not in ("kalman", "delta"):
            bad.append("motion must be kalman or delta")
        if self.location not in ("diagonal", "center"):
            bad.append("location must be diagonal or center")
        if bad:
            raise ValueError("invalid TrackerConfig: " + "; ".join(bad))


class CornerKalmanFilter:
    """Constant-velocity Kalman filter over the four corner coordinates.

    State is ``(x1, y1, x2, y2, vx1, vy1, vx2, vy2)``. Noise standard
    deviations scale with the box diagonal. With both noise scales at zero
    the prediction after two updates is exactly ``l_t + (l_t - l_{t-1})``.
    """

    def __init__(self, process_noise: float = 1e-2, measurement_noise: float = 1e-1):
        self.q = process_noise
        self.r = measurement_noise
        self.F = np.eye(8)
        self.F[:4, 4:] = np.eye(4)
        self.H = np.eye(4, 8)

    @staticmethod
    def _diag(z: np.ndarray) -> float:
        return float(np.hypot(z[2] - z[0], z[3] - z[1]))

    def initiate(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=float)
        d = self._diag(z)
        mean = np.r_[z, np.zeros(4)]
        std = np.r_[np.full(4, self.r * d), np.full(4, d)]
        return mean, np.diag(std**2)

    def predict(self, mean: np.ndarray, cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        q = self.q * self._diag(mean[:4])
        mean = self.F @ mean
        cov = self.F @ cov @ self.F.T + np.eye(8) * q**2
        return mean, cov

    def update(self, mean: np.ndarray, cov: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=float)
        r = self.r * self._diag(z)
        S = self.H @ cov @ self.H.T + np.eye(4) * r**2
        K = cov @ self.H.T @ np.linalg.pinv(S)
        mean = mean + K @ (z - self.H @ mean)
        cov = (np.eye(8) - K @ self.H) @ cov
        return mean, 0.5 * (cov + cov.T)


@dataclass
class Signature:
    """Depth and flow sampled at the two diagonal corners of a box."""

    depth: np.ndarray  # (2,)
    flow: np.ndarray  # (4,) = flow at upper-left then lower-right


def corner_pixels(b: BBox, h: int, w: int, inset: float = 0.0) -> tuple[tuple[int, int], tuple[int, int]]:
    """``(row, col)`` of the two diagonal sample points of ``b``, clamped to the frame.

    ``inset=0`` gives the upper-left and lower-right pixels of the box; a
    positive inset slides both points toward the centre along the diagonal
    by that fraction of the box size.
    """
    dx, dy = inset * (b.x2 - b.x1 - 1), inset * (b.y2 - b.y1 - 1)
    ul = (int(np.floor(b.y1 + dy)), int(np.floor(b.x1 + dx)))
    lr = (int(np.ceil(b.y2 - 1 - dy)), int(np.ceil(b.x2 - 1 - dx)))
    clamp = lambda rc: (min(max(rc[0], 0), h - 1), min(max(rc[1], 0), w - 1))
    return clamp(ul), clamp(lr)


def sample_signature(b: BBox, depth: np.ndarray, flow: np.ndarray, inset: float = 0.0) -> Signature:
    h, w = depth.shape[:2]
    ul, lr = corner_pixels(b, h, w, inset)
    return Signature(
        np.array([depth[ul], depth[lr]], dtype=float),
        np.r_[flow[ul], flow[lr]].astype(float),
    )


@dataclass
class CostTerms:
    loc: float
    depth: float
    flow: float
    total: float


@dataclass
class TrackState:
    track_id: int
    location: BBox
    velocity: np.ndarray
    kalman_mean: np.ndarray
    kalman_cov: np.ndarray
    signature: Signature
    class_id: int = 0
    hits: int = 1
    age: int = 1
    time_since_update: int = 0
    confirmed: bool = False
    last_frame: int = 0
    predicted: np.ndarray | None = None
    mask: np.ndarray | None = field(default=None, repr=False)


def predict(track: TrackState, cfg: TrackerConfig | None = None) -> np.ndarray:
    """Expected corners ``(x1, y1, x2, y2)`` in the frame after the track's last update.

    ``motion="delta"`` extrapolates the last per-frame corner displacement
    over the frames since that update; ``motion="kalman"`` runs one predict
    step of the filter (whose state is advanced every frame, matched or not).
    """
    cfg = cfg or TrackerConfig()
    if cfg.motion == "delta":
        return track.location.as_array() + (track.time_since_update + 1) * track.velocity
    kf = CornerKalmanFilter(cfg.process_noise, cfg.measurement_noise)
    mean, _ = kf.predict(track.kalman_mean, track.kalman_cov)
    return mean[:4].copy()


def _center(v: np.ndarray) -> np.ndarray:
    return np.array([(v[0] + v[2]) / 2.0, (v[1] + v[3]) / 2.0])


def cost(
    track: TrackState,
    det: Detection,
    depth: np.ndarray,
    flow: np.ndarray,
    cfg: TrackerConfig | None = None,
    predicted: np.ndarray | None = None,
) -> CostTerms:
    """Location, depth and flow discrepancy between a track and a detection.

    Each term is normalised before weighting: location by the frame diagonal,
    depth by the frame's depth range, flow by (max flow magnitude + 1).
    """
    cfg = cfg or TrackerConfig()
    h, w = depth.shape[:2]
    pred = predicted if predicted is not None else (track.predicted if track.predicted is not None else predict(track, cfg))
    box = det.bbox.as_array()
    if cfg.location == "center":
        loc = np.linalg.norm(_center(pred) - _center(box))
    else:
        loc = np.linalg.norm(pred - box)
    loc /= np.hypot(h, w)

    sig = sample_signature(det.bbox, depth, flow, cfg.corner_inset)
    depth_range = float(depth.max() - depth.min())
    d_term = np.linalg.norm(track.signature.depth - sig.depth) / (depth_range if depth_range > 0 else 1.0)
    max_flow = float(np.linalg.norm(flow, axis=-1).max()) if flow.size else 0.0
    f_term = np.linalg.norm(track.signature.flow - sig.flow) / (max_flow + 1.0)

    a1, a2, a3 = cfg.alpha
    return CostTerms(float(loc), float(d_term), float(f_term), float(a1 * loc + a2 * d_term + a3 * f_term))


def _as_table(cost_table) -> np.ndarray:
    t = np.asarray(cost_table, dtype=float)
    if t.size == 0 and t.ndim < 2:
        return t.reshape(0, 0)
    if t.ndim != 2:
        raise ValueError(f"cost table must be 2-D (tracks x detections), got shape {t.shape}")
    return t


def bi_greedy_match(cost_table: np.ndarray, gate: float = np.inf) -> list[tuple[int, int | None]]:
    """Two-pass greedy association.

    ``cost_table[t, d]`` is the cost of track ``t`` (rows, in priority order)
    against detection ``d``. Pass one: every track marks its cheapest
    detection within the gate. Pass two: every detection takes the cheapest
    of the tracks that marked it, or ``NEW`` when none did. Ties go to the
    lower index. Returns ``[(d, t or NEW)]`` for every detection, in order.
    """
    cost_table = _as_table(cost_table)
    n_tracks, n_dets = cost_table.shape
    marks: dict[int, list[int]] = {}
    for t in range(n_tracks):
        row = cost_table[t]
        allowed = np.flatnonzero(row <= gate)
        if allowed.size == 0:
            continue
        d = int(allowed[np.argmin(row[allowed])])
        marks.setdefault(d, []).append(t)
    result: list[tuple[int, int | None]] = []
    for d in range(n_dets):
        cands = marks.get(d)
        if not cands:
            result.append((d, NEW))
            continue
        best = min(cands, key=lambda t: (cost_table[t, d], t))
        result.append((d, best))
    return result


def greedy_match(cost_table: np.ndarray, gate: float = np.inf) -> list[tuple[int, int | None]]:
    """One-directional greedy: tracks in order each take their cheapest free detection."""
    cost_table = _as_table(cost_table)
    n_tracks, n_dets = cost_table.shape
    owner: dict[int, int] = {}
    for t in range(n_tracks):
        free = [d for d in range(n_dets) if d not in owner and cost_table[t, d] <= gate]
        if free:
            owner[min(free, key=lambda d: (cost_table[t, d], d))] = t
    return [(d, owner.get(d, NEW)) for d in range(n_dets)]


def cascade_order(tracks: list[TrackState]) -> list[TrackState]:
    """Most frequently matched first; ties go to the most recently updated, then lower id."""
    return sorted(tracks, key=lambda t: (-t.hits, t.time_since_update, t.track_id))


@dataclass
class Matching:
    matches: list[tuple[int, int]]  # (detection index, track id)
    new: list[int]  # detection indices that start tracks
    unmatched_tracks: list[int]  # track ids


def multi_stage_match(tracks: list[TrackState], dets: list[Detection], cfg: TrackerConfig, cost_fn) -> Matching:
    """Round one: confident detections vs all tracks; round two: low-score detections vs leftovers.

    ``cost_fn(track, det)`` returns a scalar cost. Pairs of different class
    are forbidden. Detections scoring below ``tau_low`` are ignored and
    unmatched low-score detections are dropped.
    """
    match_fn = bi_greedy_match if cfg.matching == "bigreedy" else greedy_match
    high = [i for i, d in enumerate(dets) if d.score >= cfg.tau_high]
    low = [i for i, d in enumerate(dets) if cfg.tau_low <= d.score < cfg.tau_high]

    def run(track_list: list[TrackState], det_idx: list[int]):
        table = np.full((len(track_list), len(det_idx)), np.inf)
        for a, t in enumerate(track_list):
            for b, i in enumerate(det_idx):
                if t.class_id == dets[i].class_id:
                    table[a, b] = cost_fn(t, dets[i])
        return [(det_idx[b], None if a is None else track_list[a]) for b, a in match_fn(table, cfg.gate_distance)]

    ordered = cascade_order(tracks)
    matches, new = [], []
    taken: set[int] = set()
    for i, t in run(ordered, high):
        if t is None:
            new.append(i)
        else:
            matches.append((i, t.track_id))
            taken.add(t.track_id)
    leftovers = [t for t in ordered if t.track_id not in taken]
    for i, t in run(leftovers, low):
        if t is not None:
            matches.append((i, t.track_id))
            taken.add(t.track_id)
    unmatched = [t.track_id for t in ordered if t.track_id not in taken]
    return Matching(sorted(matches), new, unmatched)


@dataclass
class TrackOutput:
    frame_id: int
    track_id: int
    bbox: BBox
    mask: np.ndarray | None = field(default=None, repr=False)


class Tracker:
    """Sequential per-video tracker; call :meth:`step` once per frame in order."""

    def __init__(self, cfg: TrackerConfig | None = None):
        self.cfg = cfg or TrackerConfig()
        self.kf = CornerKalmanFilter(self.cfg.process_noise, self.cfg.measurement_noise)
        self.tracks: list[TrackState] = []
        self.last_frame: int | None = None
        self._ids = itertools.count(1)

    def _spawn(self, det: Detection, depth, flow, frame_id: int) -> TrackState:
        mean, cov = self.kf.initiate(det.bbox.as_array())
        return TrackState(
            track_id=next(self._ids),
            location=det.bbox,
            velocity=np.zeros(4),
            kalman_mean=mean,
            kalman_cov=cov,
            signature=sample_signature(det.bbox, depth, flow, self.cfg.corner_inset),
            class_id=det.class_id,
            confirmed=1 >= self.cfg.min_hits,
            last_frame=frame_id,
            mask=det.mask,
        )

    def step(self, frame_id: int, detections: list[Detection], depth: np.ndarray, flow: np.ndarray) -> list[TrackOutput]:
        if self.last_frame is not None and frame_id <= self.last_frame:
            raise ValueError(f"frame {frame_id} presented after frame {self.last_frame}; frames must increase")
        self.last_frame = frame_id
        depth = np.asarray(depth, dtype=float)
        flow = np.asarray(flow, dtype=float)

        for t in self.tracks:
            t.predicted = predict(t, self.cfg)
            t.kalman_mean, t.kalman_cov = self.kf.predict(t.kalman_mean, t.kalman_cov)
            t.age += 1

        matching = multi_stage_match(
            self.tracks, detections, self.cfg,
            lambda t, d: cost(t, d, depth, flow, self.cfg, predicted=t.predicted).total,
        )
        by_id = {t.track_id: t for t in self.tracks}
        for det_idx, tid in matching.matches:
            t, det = by_id[tid], detections[det_idx]
            gap = frame_id - t.last_frame
            t.velocity = (det.bbox.as_array() - t.location.as_array()) / gap
            t.kalman_mean, t.kalman_cov = self.kf.update(t.kalman_mean, t.kalman_cov, det.bbox.as_array())
            t.location = det.bbox
            # low-score detections are mostly occluded; their sample points tend to land on the occluder
            if det.score >= self.cfg.signature_min_score:
                t.signature = sample_signature(det.bbox, depth, flow, self.cfg.corner_inset)
            t.mask = det.mask
            t.hits += 1
            t.time_since_update = 0
            t.last_frame = frame_id
            t.confirmed = t.confirmed or t.hits >= self.cfg.min_hits
        matched_ids = {tid for _, tid in matching.matches}
        for t in self.tracks:
            if t.track_id not in matched_ids:
                t.time_since_update += 1
        for det_idx in matching.new:
            self.tracks.append(self._spawn(detections[det_idx], depth, flow, frame_id))
        self.tracks = [t for t in self.tracks if t.time_since_update <= self.cfg.max_age]

        out = [
            TrackOutput(frame_id, t.track_id, t.location, t.mask)
            for t in self.tracks
            if t.confirmed and t.time_since_update == 0
        ]
        return sorted(out, key=lambda o: o.track_id)


def track_frames(frames, cfg: TrackerConfig | None = None) -> list[list[TrackOutput]]:
    """Run a fresh tracker over objects with ``frame_id``, ``detections``, ``depth`` and ``flow``."""
    tracker = Tracker(cfg)
    return [tracker.step(f.frame_id, f.detections, f.depth, f.flow) for f in frames]

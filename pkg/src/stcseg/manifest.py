"""Scene manifests (``scene.json`` plus STCGRID files) and JSON-lines track files.

Manifest layout::

    {"format": "stcseg-scene", "version": 1,
     "config": {...scene config echo...},
     "frames": [{"frame_id": 0, "depth_path": "...", "flow_path": "...",
                 "gt": [{"id", "bbox", "mask_path", "depth", "class", "occluded_fraction"}],
                 "detections": [{"bbox", "score", "class"}]}]}

Paths are relative to the manifest's directory. The track file holds one
JSON object per frame, ``{"frame_id": k, "tracks": [{"track_id", "bbox",
"mask_path"?}]}``, ordered by frame then track id.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .grid import BBox
from .gridio import read_grid, write_grid
from .scene import GTInstance, SceneConfig, SceneFrame, generate_scene
from .tracker import Detection, TrackOutput

FORMAT = "stcseg-scene"
VERSION = 1


class ManifestError(ValueError):
    pass


@dataclass
class Scene:
    config: SceneConfig | None
    frames: list[SceneFrame]
    root: str = "."


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _frame_paths(fid: int) -> dict[str, str]:
    stem = f"frames/{fid:06d}"
    return {"depth_path": f"{stem}_depth.grid", "flow_path": f"{stem}_flow.grid"}


def write_manifest(scene: Scene | list[SceneFrame], out_dir: str, config: SceneConfig | None = None) -> str:
    """Write grids and ``scene.json`` under ``out_dir``; returns the manifest path."""
    if isinstance(scene, Scene):
        frames, config = scene.frames, scene.config if config is None else config
    else:
        frames = scene
    os.makedirs(os.path.join(out_dir, "frames"), exist_ok=True)
    recs = []
    for f in frames:
        paths = _frame_paths(f.frame_id)
        write_grid(os.path.join(out_dir, paths["depth_path"]), f.depth)
        write_grid(os.path.join(out_dir, paths["flow_path"]), f.flow)
        gt = []
        for g in f.gt:
            mask_path = f"frames/{f.frame_id:06d}_mask_{g.instance_id:03d}.grid"
            write_grid(os.path.join(out_dir, mask_path), g.mask)
            gt.append({
                "id": g.instance_id,
                "bbox": list(g.bbox.as_tuple()),
                "mask_path": mask_path,
                "depth": g.depth,
                "class": g.class_id,
                "occluded_fraction": g.occluded_fraction,
            })
        dets = [{"bbox": list(d.bbox.as_tuple()), "score": d.score, "class": d.class_id} for d in f.detections]
        recs.append({"frame_id": f.frame_id, **paths, "gt": gt, "detections": dets})
    doc = {"format": FORMAT, "version": VERSION, "config": config.to_dict() if config else None, "frames": recs}
    path = os.path.join(out_dir, "scene.json")
    with open(path, "w") as fh:
        fh.write(_dump(doc))
    return path


def _require(rec: dict, key: str, where: str):
    if key not in rec:
        raise ManifestError(f"{where}: missing '{key}' key")
    return rec[key]


def read_manifest(path: str) -> Scene:
    if os.path.isdir(path):
        path = os.path.join(path, "scene.json")
    root = os.path.dirname(os.path.abspath(path))
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path}: line {e.lineno}: invalid JSON: {e.msg}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ManifestError(f"{path}: not a {FORMAT} manifest")
    if doc.get("version") != VERSION:
        raise ManifestError(f"{path}: unsupported manifest version {doc.get('version')!r}")
    cfg = SceneConfig.from_dict(doc["config"]) if doc.get("config") is not None else None

    frames = []
    for k, rec in enumerate(_require(doc, "frames", path)):
        fid = rec.get("frame_id", k)
        where = f"{path}: frame {fid}"
        fid = int(_require(rec, "frame_id", where))
        depth = read_grid(os.path.join(root, _require(rec, "depth_path", where)))
        flow = read_grid(os.path.join(root, _require(rec, "flow_path", where)))
        if flow.ndim != 3 or flow.shape[2] != 2 or flow.shape[:2] != depth.shape:
            raise ManifestError(f"{where}: flow grid shape {flow.shape} does not match depth {depth.shape}")
        gt = []
        for g in _require(rec, "gt", where):
            mask = read_grid(os.path.join(root, _require(g, "mask_path", where)))
            gt.append(GTInstance(
                int(_require(g, "id", where)),
                BBox(*_require(g, "bbox", where)),
                mask.astype(np.uint8),
                float(_require(g, "depth", where)),
                int(g.get("class", 0)),
                float(g.get("occluded_fraction", 0.0)),
            ))
        dets = [
            Detection(BBox(*_require(d, "bbox", where)), float(_require(d, "score", where)), int(d.get("class", 0)), fid)
            for d in _require(rec, "detections", where)
        ]
        frames.append(SceneFrame(fid, depth, flow, gt, dets))
    return Scene(cfg, frames, root)


def generate_to_dir(cfg: SceneConfig, out_dir: str) -> str:
    return write_manifest(Scene(cfg, generate_scene(cfg)), out_dir)


def write_tracks(path: str, outputs, mask_dir: str | None = None) -> None:
    """Write per-frame track outputs; ``outputs`` is a list (one entry per frame) of ``TrackOutput`` lists.

    Masks are written as grids next to the track file when ``mask_dir`` is given.
    """
    base = os.path.dirname(os.path.abspath(path))
    lines = []
    for frame_out in outputs:
        frame_out = sorted(frame_out, key=lambda o: o.track_id)
        if not frame_out:
            continue
        fid = frame_out[0].frame_id
        recs = []
        for o in frame_out:
            r = {"track_id": o.track_id, "bbox": list(o.bbox.as_tuple())}
            if mask_dir is not None and o.mask is not None:
                rel = os.path.join(mask_dir, f"{fid:06d}_track_{o.track_id:04d}.grid")
                write_grid(os.path.join(base, rel), o.mask)
                r["mask_path"] = rel
            recs.append(r)
        lines.append(json.dumps({"frame_id": fid, "tracks": recs}, sort_keys=True))
    with open(path, "w") as fh:
        fh.write("".join(ln + "\n" for ln in lines))


def read_tracks(path: str) -> list[TrackOutput]:
    base = os.path.dirname(os.path.abspath(path))
    out = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                fid = int(rec["frame_id"])
                for t in rec["tracks"]:
                    mask = read_grid(os.path.join(base, t["mask_path"])) if "mask_path" in t else None
                    out.append(TrackOutput(fid, int(t["track_id"]), BBox(*t["bbox"]), mask))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise ManifestError(f"{path}: line {n}: malformed track record ({e})") from None
    return out

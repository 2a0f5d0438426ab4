import json
import os

import pytest

from stcseg.manifest import ManifestError, generate_to_dir, read_manifest, read_tracks, write_manifest, write_tracks
from stcseg.scene import ObjectSpec, SceneConfig
from stcseg.tracker import TrackerConfig, track_frames

CFG = SceneConfig(height=32, width=40, n_frames=3, jitter=1, miss_prob=0.2, noise_sigma=0.1, seed=4, objects=[
    ObjectSpec("rectangle", (8, 10), (2.0, 3.0), (2.0, 1.0), 3.0),
    ObjectSpec("ellipse", (9, 7), (25.0, 12.0), (-1.0, 0.0), 5.0),
])


def _tree(root):
    out = {}
    for d, _, files in os.walk(root):
        for f in files:
            p = os.path.join(d, f)
            with open(p, "rb") as fh:
                out[os.path.relpath(p, root)] = fh.read()
    return out


def test_roundtrip_byte_identical(tmp_path):
    path = generate_to_dir(CFG, str(tmp_path / "a"))
    scene = read_manifest(path)
    write_manifest(scene, str(tmp_path / "b"))
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")
    assert scene.config == CFG


def test_same_seed_same_files(tmp_path):
    generate_to_dir(CFG, str(tmp_path / "a"))
    generate_to_dir(CFG, str(tmp_path / "b"))
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")


def test_missing_detections_names_frame(tmp_path):
    path = generate_to_dir(CFG, str(tmp_path))
    doc = json.load(open(path))
    del doc["frames"][1]["detections"]
    json.dump(doc, open(path, "w"))
    with pytest.raises(ManifestError, match="frame 1: missing 'detections'"):
        read_manifest(path)


def test_bad_json_reports_line(tmp_path):
    p = tmp_path / "scene.json"
    p.write_text('{\n "format": \n')
    with pytest.raises(ManifestError, match="line 3"):
        read_manifest(str(p))


def test_tracks_roundtrip(tmp_path):
    scene = read_manifest(generate_to_dir(CFG, str(tmp_path / "s")))
    out = track_frames(scene.frames, TrackerConfig(min_hits=1))
    p = tmp_path / "tracks.jsonl"
    write_tracks(str(p), out)
    back = read_tracks(str(p))
    flat = [o for f in out for o in f]
    assert [(o.frame_id, o.track_id, o.bbox) for o in back] == [(o.frame_id, o.track_id, o.bbox) for o in flat]
    keys = [(json.loads(ln)["frame_id"]) for ln in p.read_text().splitlines()]
    assert keys == sorted(keys)


def test_malformed_track_line(tmp_path):
    p = tmp_path / "t.jsonl"
    p.write_text('{"frame_id": 0, "tracks": []}\n{"frame_id": 1}\n')
    with pytest.raises(ManifestError, match="line 2"):
        read_tracks(str(p))

"""Change-detection dataset directory layout.

Expected structure: ``root/<category>/<video>/input/*.jpg`` frames plus
``root/<category>/<video>/groundtruth/*.png`` masks (the groundtruth
directory is optional; without it every node is exported unlabeled). A flat
``root/<video>/input`` layout also works, with category 'unknown'.

Sequence groups (which videos form which graph) are data, not code: a JSON
file mapping group names to ``category/video`` entries. The bundled default
spreads the standard benchmark's videos across four groups, round-robin
within each category, and can be replaced wholesale with ``--groups``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import cv2
import numpy as np

FRAME_SUFFIXES = (".jpg", ".jpeg", ".png", ".bmp")


@dataclass
class VideoDir:
    category: str
    name: str
    frame_paths: list[Path]
    gt_paths: list[Path]

    @property
    def video_id(self) -> str:
        return f"{self.category}/{self.name}"

    def load_frames(self, limit: int | None = None) -> list[np.ndarray | None]:
        paths = self.frame_paths[:limit] if limit else self.frame_paths
        return [cv2.imread(str(p), cv2.IMREAD_COLOR) for p in paths]

    def load_gts(self, limit: int | None = None) -> list[np.ndarray | None]:
        paths = self.gt_paths[:limit] if limit else self.gt_paths
        return [cv2.imread(str(p), cv2.IMREAD_GRAYSCALE) for p in paths]


def _list_frames(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir()
                  if p.suffix.lower() in FRAME_SUFFIXES)


def discover_videos(root) -> dict[str, VideoDir]:
    """Map ``category/video`` ids to their frame and ground-truth listings."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} is not a directory")
    videos: dict[str, VideoDir] = {}

    def add(category: str, video_dir: Path):
        inputs = video_dir / "input"
        if not inputs.is_dir():
            return
        gt_dir = video_dir / "groundtruth"
        gts = _list_frames(gt_dir) if gt_dir.is_dir() else []
        vd = VideoDir(category, video_dir.name, _list_frames(inputs), gts)
        videos[vd.video_id] = vd

    for entry in sorted(root.iterdir()):
        if not entry.is_dir():
            continue
        if (entry / "input").is_dir():
            add("unknown", entry)
        else:
            for sub in sorted(entry.iterdir()):
                if sub.is_dir():
                    add(entry.name, sub)
    if not videos:
        raise FileNotFoundError(f"no videos with an input/ directory under {root}")
    return videos


def default_groups_path() -> Path:
    return Path(resources.files("mosgnn_exporter") / "data" / "sequence_groups.json")


def load_groups(path=None) -> dict[str, list[str]]:
    path = Path(path) if path else default_groups_path()
    doc = json.loads(path.read_text())
    if not isinstance(doc, dict) or not doc:
        raise ValueError(f"{path}: groups file must map group names to video lists")
    for name, vids in doc.items():
        if not isinstance(vids, list) or not all(isinstance(v, str) for v in vids):
            raise ValueError(f"{path}: group {name!r} must list 'category/video' ids")
    return doc

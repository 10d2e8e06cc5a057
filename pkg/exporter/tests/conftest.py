import json
from pathlib import Path

import cv2
import numpy as np
import pytest

H, W = 48, 64
BG = 12
MOVING_COLOR = (190, 205, 220)
STATIC_COLOR = (220, 170, 150)


def draw_frame(t, with_static=True):
    """Dark background, one square moving right 2 px per frame, one fixed."""
    frame = np.full((H, W, 3), BG, np.uint8)
    x = 6 + 2 * t
    frame[8:18, x:x + 10] = MOVING_COLOR
    if with_static:
        frame[30:40, 44:54] = STATIC_COLOR
    gt = np.zeros((H, W), np.uint8)
    gt[8:18, x:x + 10] = 255
    return frame, gt


@pytest.fixture
def frame_pair():
    prev, _ = draw_frame(0)
    cur, gt = draw_frame(1)
    return prev, cur, gt


@pytest.fixture
def make_frames():
    return draw_frame


@pytest.fixture
def fixture_dataset(tmp_path):
    """A two-video change-detection-layout dataset of synthetic frames."""
    root = tmp_path / "dataset"
    for category, video, frames in (("cat_a", "vidA", 6), ("cat_b", "vidB", 5)):
        vdir = root / category / video
        (vdir / "input").mkdir(parents=True)
        (vdir / "groundtruth").mkdir(parents=True)
        for t in range(frames):
            frame, gt = draw_frame(t)
            cv2.imwrite(str(vdir / "input" / f"in{t:06d}.png"), frame)
            cv2.imwrite(str(vdir / "groundtruth" / f"gt{t:06d}.png"), gt)
    groups = {"T1": ["cat_a/vidA"], "T2": ["cat_b/vidB"]}
    groups_path = tmp_path / "groups.json"
    groups_path.write_text(json.dumps(groups))
    return root, groups_path

"""The node feature recipe: 930 values per object instance.

Every histogram is computed over the instance's mask pixels and normalized
by the instance pixel count, so features are comparable across instance
sizes. Recipe v1 layout, in order:

    flow_orientation   90   magnitude-weighted orientation histogram of
                            optical flow, pixels moving > 0.5 px only
    flow_magnitude     64   histogram of flow magnitudes above 0.5 px,
                            bins 0.5 .. 16.5, overflow clipped into the top bin
    gray_intensity    256   8-bit grayscale histogram
    rgb_intensity     384   three 128-bin per-channel histograms (R, G, B)
    lbp_p8r1           10   uniform local-binary-pattern histogram, P=8 R=1
    lbp_p16r2          18   uniform LBP, P=16 R=2
    lbp_p24r3          26   uniform LBP, P=24 R=3
    padding            82   zeros, reserving room for recipe revisions

A static instance moves no pixels past the flow threshold, so both flow
blocks are exactly zero. Vectors are deterministic functions of the frame
pair, the mask and the recipe version.
"""

from __future__ import annotations

import cv2
import numpy as np
from skimage.feature import local_binary_pattern

from .records import InstanceRecord

RECIPE_VERSION = "v1"
FLOW_MIN_MAGNITUDE = 0.5
MIN_MASK_PIXELS = 4

FEATURE_LAYOUT = (
    ("flow_orientation", 90),
    ("flow_magnitude", 64),
    ("gray_intensity", 256),
    ("rgb_intensity", 384),
    ("lbp_p8r1", 10),
    ("lbp_p16r2", 18),
    ("lbp_p24r3", 26),
    ("padding", 82),
)
FEATURE_DIM = sum(size for _, size in FEATURE_LAYOUT)
assert FEATURE_DIM == 930


def feature_slices() -> dict[str, slice]:
    """Name -> slice of each block inside the 930-vector."""
    out = {}
    start = 0
    for name, size in FEATURE_LAYOUT:
        out[name] = slice(start, start + size)
        start += size
    return out


def compute_flow(prev_bgr: np.ndarray, frame_bgr: np.ndarray) -> np.ndarray:
    """Dense Farneback optical flow between two consecutive frames."""
    prev_gray = cv2.cvtColor(prev_bgr, cv2.COLOR_BGR2GRAY)
    gray = cv2.cvtColor(frame_bgr, cv2.COLOR_BGR2GRAY)
    return cv2.calcOpticalFlowFarneback(prev_gray, gray, None,
                                        0.5, 3, 15, 3, 5, 1.2, 0)


def _lbp_hist(gray: np.ndarray, mask: np.ndarray, points: int, radius: int,
              bins: int, count: int) -> np.ndarray:
    codes = local_binary_pattern(gray, points, radius, method="uniform")
    hist = np.bincount(codes[mask].astype(np.int64), minlength=bins)[:bins]
    return hist / count


def compute_features(record: InstanceRecord, prev_bgr: np.ndarray,
                     frame_bgr: np.ndarray, flow: np.ndarray | None = None) -> np.ndarray:
    """930-entry feature vector for one instance; all entries finite.

    ``flow`` may be passed in when the caller already computed it for the
    frame pair (it is identical for every instance in the frame).
    """
    if record.pixel_count < MIN_MASK_PIXELS:
        raise ValueError(f"{record.video}/{record.frame}: degenerate mask with "
                         f"{record.pixel_count} px")
    if frame_bgr.ndim != 3 or frame_bgr.shape[2] != 3:
        raise ValueError("frames must be 3-channel BGR")
    if flow is None:
        flow = compute_flow(prev_bgr, frame_bgr)
    mask = record.mask
    count = record.pixel_count
    parts = []

    fx = flow[..., 0][mask]
    fy = flow[..., 1][mask]
    magnitude = np.sqrt(fx * fx + fy * fy)
    moving = magnitude > FLOW_MIN_MAGNITUDE
    angle = np.arctan2(fy[moving], fx[moving]) % (2.0 * np.pi)
    orient, _ = np.histogram(angle, bins=90, range=(0.0, 2.0 * np.pi),
                             weights=magnitude[moving])
    parts.append(orient / count)
    mag = np.clip(magnitude[moving], None, 16.5 - 1e-9)
    mag_hist, _ = np.histogram(mag, bins=64, range=(FLOW_MIN_MAGNITUDE, 16.5))
    parts.append(mag_hist / count)

    gray = cv2.cvtColor(frame_bgr, cv2.COLOR_BGR2GRAY)
    parts.append(np.bincount(gray[mask], minlength=256)[:256] / count)
    for channel in (2, 1, 0):  # R, G, B
        values = frame_bgr[..., channel][mask].astype(np.int64) >> 1
        parts.append(np.bincount(values, minlength=128)[:128] / count)

    parts.append(_lbp_hist(gray, mask, 8, 1, 10, count))
    parts.append(_lbp_hist(gray, mask, 16, 2, 18, count))
    parts.append(_lbp_hist(gray, mask, 24, 3, 26, count))
    parts.append(np.zeros(82))

    vector = np.concatenate(parts).astype(np.float64)
    assert vector.shape == (FEATURE_DIM,)
    if not np.all(np.isfinite(vector)):
        raise ValueError(f"{record.video}/{record.frame}: non-finite feature")
    return vector

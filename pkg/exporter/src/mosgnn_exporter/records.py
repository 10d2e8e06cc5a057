"""Per-instance detection records produced by the segmentation stage."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class InstanceRecord:
    """One detected object instance in one frame.

    The mask is a full-frame boolean array; the box is (x0, y0, x1, y1) with
    exclusive upper bounds and must enclose every mask pixel.
    """

    video: str
    frame: int
    instance: int
    mask: np.ndarray
    box: tuple[int, int, int, int]
    score: float = 1.0

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.ndim != 2:
            raise ValueError(f"{self.video}/{self.frame}: mask must be 2-d")
        if not self.mask.any():
            raise ValueError(f"{self.video}/{self.frame}: empty instance mask")
        x0, y0, x1, y1 = self.box
        ys, xs = np.nonzero(self.mask)
        if xs.min() < x0 or xs.max() >= x1 or ys.min() < y0 or ys.max() >= y1:
            raise ValueError(f"{self.video}/{self.frame}: box does not enclose mask")

    @property
    def pixel_count(self) -> int:
        return int(self.mask.sum())

    @classmethod
    def from_mask(cls, video: str, frame: int, instance: int, mask: np.ndarray,
                  score: float = 1.0) -> "InstanceRecord":
        mask = np.asarray(mask, dtype=bool)
        ys, xs = np.nonzero(mask)
        box = (int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)
        return cls(video, frame, instance, mask, box, score)

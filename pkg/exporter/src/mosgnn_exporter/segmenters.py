"""Instance segmentation backends.

Two interchangeable backends produce (mask, score) detections per frame:

* ``BlobSegmenter`` - classical brightness thresholding plus connected
  components. Deterministic, dependency-light, and the right tool for the
  synthetic fixtures used in tests.
* ``MaskRCNNSegmenter`` - an off-the-shelf pretrained detector loaded
  through torchvision. Optional: constructing it requires torch plus a
  downloadable weight file, so it is imported lazily and never at module
  import time.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Protocol

import cv2
import numpy as np

log = logging.getLogger("mosgnn_exporter")


@dataclass
class Detection:
    mask: np.ndarray  # full-frame bool
    score: float


class InstanceSegmenter(Protocol):
    def segment(self, frame_bgr: np.ndarray) -> list[Detection]: ...


class BlobSegmenter:
    """Bright connected components over a dark background.

    Pixels brighter than ``brightness`` (grayscale) form the foreground;
    each connected component above ``min_area`` pixels becomes one detection
    with score 1.0, ordered by component label for determinism.
    """

    def __init__(self, brightness: int = 60, min_area: int = 16):
        self.brightness = int(brightness)
        self.min_area = int(min_area)

    def segment(self, frame_bgr: np.ndarray) -> list[Detection]:
        gray = cv2.cvtColor(frame_bgr, cv2.COLOR_BGR2GRAY)
        binary = (gray > self.brightness).astype(np.uint8)
        count, labels = cv2.connectedComponents(binary, connectivity=8)
        out = []
        for label in range(1, count):
            mask = labels == label
            if int(mask.sum()) >= self.min_area:
                out.append(Detection(mask=mask, score=1.0))
        return out


class MaskRCNNSegmenter:
    """Pretrained Mask R-CNN with a ResNet-50 FPN backbone (torchvision).

    Soft masks are binarized at 0.5. Requires the optional ``maskrcnn``
    extra and network access to fetch pretrained weights on first use.
    """

    def __init__(self, mask_threshold: float = 0.5):
        try:
            import torch
            from torchvision.models.detection import (
                MaskRCNN_ResNet50_FPN_Weights, maskrcnn_resnet50_fpn)
        except ImportError as exc:  # pragma: no cover
            raise RuntimeError(
                "MaskRCNNSegmenter needs torch and torchvision; install the "
                "'maskrcnn' extra") from exc
        self._torch = torch
        self.mask_threshold = float(mask_threshold)
        self.model = maskrcnn_resnet50_fpn(
            weights=MaskRCNN_ResNet50_FPN_Weights.DEFAULT)
        self.model.eval()

    def segment(self, frame_bgr: np.ndarray) -> list[Detection]:
        torch = self._torch
        rgb = cv2.cvtColor(frame_bgr, cv2.COLOR_BGR2RGB)
        tensor = torch.from_numpy(rgb).permute(2, 0, 1).float() / 255.0
        with torch.no_grad():
            output = self.model([tensor])[0]
        detections = []
        for soft_mask, score in zip(output["masks"], output["scores"]):
            mask = soft_mask[0].numpy() >= self.mask_threshold
            if mask.any():
                detections.append(Detection(mask=mask, score=float(score)))
        return detections


def make_segmenter(name: str, **kwargs) -> InstanceSegmenter:
    if name == "blob":
        return BlobSegmenter(**kwargs)
    if name == "maskrcnn":
        return MaskRCNNSegmenter(**kwargs)
    raise ValueError(f"unknown segmentation backend {name!r}")

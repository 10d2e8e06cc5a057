"""From frames to labeled feature rows: the per-video extraction loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .features import MIN_MASK_PIXELS, compute_features, compute_flow
from .labels import UNLABELED, assign_labels
from .records import InstanceRecord
from .segmenters import InstanceSegmenter

log = logging.getLogger("mosgnn_exporter")


def extract_instances(frames: list[np.ndarray], segmenter: InstanceSegmenter,
                      threshold: float = 0.5, video: str = "") -> list[InstanceRecord]:
    """One record per detection with score >= threshold, all frames.

    Frames that fail to decode (None entries) are skipped with a warning.
    Instance indices count detections within their frame.
    """
    records = []
    for frame_index, frame in enumerate(frames):
        if frame is None:
            log.warning("%s: frame %d undecodable, skipped", video, frame_index)
            continue
        for instance_index, det in enumerate(segmenter.segment(frame)):
            if det.score < threshold:
                continue
            records.append(InstanceRecord.from_mask(video, frame_index,
                                                    instance_index, det.mask,
                                                    det.score))
    return records


@dataclass
class VideoExtraction:
    records: list[InstanceRecord] = field(default_factory=list)
    features: list[np.ndarray] = field(default_factory=list)
    labels: list[int] = field(default_factory=list)
    dropped: int = 0


def process_video(video: str, frames: list[np.ndarray],
                  gts: list[np.ndarray | None], segmenter: InstanceSegmenter,
                  threshold: float = 0.5) -> VideoExtraction:
    """Detect, featurize and label every instance of one video.

    Frame 0 has no predecessor for optical flow and is skipped. Records with
    degenerate masks (< 4 px) are dropped with a log line, not exported.
    """
    out = VideoExtraction()
    for t in range(1, len(frames)):
        prev, frame = frames[t - 1], frames[t]
        if prev is None or frame is None:
            log.warning("%s: frame pair (%d, %d) undecodable, skipped", video,
                        t - 1, t)
            continue
        detections = extract_instances([frame], segmenter, threshold, video)
        if not detections:
            continue
        flow = compute_flow(prev, frame)
        gt = gts[t] if t < len(gts) else None
        for det in detections:
            record = InstanceRecord(video, t, det.instance, det.mask, det.box,
                                    det.score)
            if record.pixel_count < MIN_MASK_PIXELS:
                out.dropped += 1
                log.warning("%s: frame %d instance %d dropped (mask %d px)",
                            video, t, det.instance, record.pixel_count)
                continue
            out.records.append(record)
            out.features.append(compute_features(record, prev, frame, flow=flow))
            out.labels.append(assign_labels(record, gt) if gt is not None
                              else UNLABELED)
    return out

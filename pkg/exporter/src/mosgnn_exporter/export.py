"""Writing node-feature files in the engine's interchange format.

The writer is an independent implementation of the ``NFV1`` layout (see the
engine's README): little-endian, magic + version + counts + label flag,
row-major float64 features, one label byte per node, then length-prefixed
provenance records. A sidecar ``<name>.meta.json`` records the feature
recipe version and block layout, since the binary format itself carries no
free-form metadata.
"""

from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

from .features import FEATURE_DIM, FEATURE_LAYOUT, RECIPE_VERSION
from .records import InstanceRecord

MAGIC = b"NFV1"
VERSION = 1


def _text(buf: io.BytesIO, s: str):
    raw = s.encode("utf-8")
    buf.write(struct.pack("<I", len(raw)))
    buf.write(raw)


def export(records: list[InstanceRecord], features: np.ndarray, labels,
           path, category_of=None) -> Path:
    """Write one feature file; nodes are sorted by (video, frame, instance).

    ``category_of`` maps a record to its challenge-category tag (defaults to
    the video name's category prefix when the video id contains '/', else
    'unknown').
    """
    path = Path(path)
    features = np.ascontiguousarray(features, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    if features.ndim != 2 or features.shape[1] != FEATURE_DIM:
        raise ValueError(f"features must be (N, {FEATURE_DIM}), got {features.shape}")
    if features.shape[0] != len(records) or labels.shape != (len(records),):
        raise ValueError("records, features and labels must align")
    bad = (labels != 0) & (labels != 1) & (labels != 255)
    if np.any(bad):
        raise ValueError(f"invalid label byte at node {int(np.nonzero(bad)[0][0])}")
    if not np.all(np.isfinite(features)):
        raise ValueError("non-finite feature value")

    if category_of is None:
        def category_of(rec):
            return rec.video.split("/")[0] if "/" in rec.video else "unknown"

    order = sorted(range(len(records)),
                   key=lambda i: (records[i].video, records[i].frame,
                                  records[i].instance))
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", VERSION))
    buf.write(struct.pack("<QQ", len(records), FEATURE_DIM))
    buf.write(struct.pack("<B", 1))
    buf.write(np.ascontiguousarray(features[order], dtype="<f8").tobytes())
    buf.write(labels[order].tobytes())
    for i in order:
        rec = records[i]
        _text(buf, category_of(rec))
        _text(buf, rec.video)
        buf.write(struct.pack("<II", rec.frame, rec.instance))
    path.write_bytes(buf.getvalue())

    meta = {
        "recipe": RECIPE_VERSION,
        "feature_dim": FEATURE_DIM,
        "layout": [[name, size] for name, size in FEATURE_LAYOUT],
        "nodes": len(records),
    }
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2,
                                                         sort_keys=True) + "\n")
    return path

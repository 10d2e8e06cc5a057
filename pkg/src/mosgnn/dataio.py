"""Bit-exact file formats: node features, graphs, checkpoints, manifests.

All binary formats are little-endian and platform independent. Readers
validate aggressively and reject malformed input instead of repairing it;
format errors carry the byte offset where parsing failed.

Feature file (magic ``NFV1``)::

    magic            4 bytes  "NFV1"
    version          u16      currently 1
    N                u64      node count
    F                u64      feature width
    label_flag       u8       1 if a label section follows the features
    features         N*F f64  row-major
    labels           N u8     present iff label_flag; values {0, 1, 255}
    provenance       N records:
        category     u32 length + UTF-8 bytes
        video        u32 length + UTF-8 bytes
        frame        u32
        instance     u32

Graph file (magic ``NGB1``): version u16, a u32-length-prefixed UTF-8
sequence id, then the feature-file payload from N onward, then the CSR
adjacency: has_self_loops u8, nnz u64, row_offsets (N+1) u64, col_indices
nnz u64, weights nnz f64.

Checkpoint (magic ``GIMC``): version u16, u32-length-prefixed JSON model
config, named parameter blobs, named optimizer velocity blobs, training
seed u64, epoch u32. A blob is: u32 name length + UTF-8 name, u32 ndim,
ndim u64 dims, then f64 data.

Manifests and reports are JSON; the manifest schema is
``{"graphs": {name: path}, "experiments": {name: {"train": [...],
"val": [...], "test": [...]}}, "overrides": {...}}`` with pairwise
disjoint splits inside each experiment.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import CheckpointError, DataError, FormatError, ManifestError
from .graphs import GraphBundle, NodeProvenance
from .model import PARAM_ORDER, ModelConfig
from .sparse import SparseAdjacency

__all__ = [
    "FeatureSet", "Checkpoint", "ExperimentSplit", "ExperimentManifest",
    "write_features", "read_features", "write_graph", "read_graph",
    "save_checkpoint", "load_checkpoint", "load_manifest", "default_manifest_path",
    "UNLABELED",
]

FEATURE_MAGIC = b"NFV1"
GRAPH_MAGIC = b"NGB1"
CHECKPOINT_MAGIC = b"GIMC"
FORMAT_VERSION = 1
UNLABELED = 255


@dataclass
class FeatureSet:
    """In-memory contents of a feature file."""

    features: np.ndarray
    labels: np.ndarray  # uint8; 255 marks unlabeled nodes
    provenance: list[NodeProvenance]

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1])


class _Reader:
    """Byte-offset-tracking reader over one file's contents."""

    def __init__(self, data: bytes, path):
        self.data = data
        self.off = 0
        self.path = str(path)

    def fail(self, why: str):
        raise FormatError(f"{self.path}: {why} at byte {self.off}")

    def take(self, count: int) -> bytes:
        if self.off + count > len(self.data):
            self.fail(f"truncated, needed {count} bytes")
        out = self.data[self.off:self.off + count]
        self.off += count
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def text(self) -> str:
        length = self.u32()
        raw = self.take(length)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            self.fail("invalid UTF-8 string")

    def f64_array(self, count: int) -> np.ndarray:
        raw = self.take(count * 8)
        return np.frombuffer(raw, dtype="<f8", count=count).astype(np.float64)

    def u64_array(self, count: int) -> np.ndarray:
        raw = self.take(count * 8)
        return np.frombuffer(raw, dtype="<u8", count=count).astype(np.int64)

    def u8_array(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(count), dtype=np.uint8).copy()

    def expect_magic(self, magic: bytes):
        got = self.take(len(magic))
        if got != magic:
            self.off -= len(magic)
            self.fail(f"bad magic {got!r}, expected {magic!r}")

    def expect_version(self, version: int, what: str):
        got = self.u16()
        if got != version:
            if what == "checkpoint":
                raise CheckpointError(f"{self.path}: incompatible {what} version {got}, "
                                      f"this build reads version {version}")
            self.off -= 2
            self.fail(f"unsupported {what} version {got}")

    def expect_eof(self):
        if self.off != len(self.data):
            self.fail(f"{len(self.data) - self.off} trailing bytes")


def _write_text(buf: io.BytesIO, s: str):
    raw = s.encode("utf-8")
    buf.write(struct.pack("<I", len(raw)))
    buf.write(raw)


def _validate_payload(features: np.ndarray, labels: np.ndarray,
                      provenance: list[NodeProvenance]):
    if features.ndim != 2:
        raise DataError("features: expected a 2-d matrix")
    n = features.shape[0]
    finite = np.isfinite(features).all(axis=1) if n else np.ones(0, dtype=bool)
    if not finite.all():
        raise DataError(f"features: non-finite value at node {int(np.nonzero(~finite)[0][0])}")
    if labels.shape != (n,):
        raise DataError("labels: one per node required")
    bad = (labels != 0) & (labels != 1) & (labels != UNLABELED)
    if np.any(bad):
        node = int(np.nonzero(bad)[0][0])
        raise DataError(f"labels: invalid label byte {int(labels[node])} at node {node}")
    if len(provenance) != n:
        raise DataError("provenance: one record per node required")


def _write_feature_payload(buf: io.BytesIO, features, labels, provenance):
    n, width = features.shape
    buf.write(struct.pack("<QQ", n, width))
    buf.write(struct.pack("<B", 1))
    buf.write(np.ascontiguousarray(features, dtype="<f8").tobytes())
    buf.write(np.ascontiguousarray(labels, dtype=np.uint8).tobytes())
    for rec in provenance:
        _write_text(buf, rec.category)
        _write_text(buf, rec.video)
        buf.write(struct.pack("<II", int(rec.frame), int(rec.instance)))


def _read_feature_payload(r: _Reader) -> FeatureSet:
    n = r.u64()
    width = r.u64()
    label_flag = r.u8()
    if label_flag not in (0, 1):
        r.off -= 1
        r.fail(f"invalid label-presence flag {label_flag}")
    features = r.f64_array(n * width).reshape(n, width)
    if label_flag:
        labels_off = r.off
        labels = r.u8_array(n)
        bad = (labels != 0) & (labels != 1) & (labels != UNLABELED)
        if np.any(bad):
            node = int(np.nonzero(bad)[0][0])
            raise DataError(f"{r.path}: invalid label byte {int(labels[node])} at node "
                            f"{node} (offset {labels_off + node})")
    else:
        labels = np.full(n, UNLABELED, dtype=np.uint8)
    finite = np.isfinite(features).all(axis=1) if n else np.ones(0, dtype=bool)
    if not finite.all():
        raise DataError(f"{r.path}: non-finite feature at node "
                        f"{int(np.nonzero(~finite)[0][0])}")
    provenance = []
    for _ in range(n):
        category = r.text()
        video = r.text()
        frame = r.u32()
        instance = r.u32()
        provenance.append(NodeProvenance(category, video, frame, instance))
    return FeatureSet(features, labels, provenance)


def write_features(path, features, labels=None, provenance=None):
    """Write a feature file; labels default to all-unlabeled."""
    features = np.ascontiguousarray(features, dtype=np.float64)
    n = features.shape[0]
    if labels is None:
        labels = np.full(n, UNLABELED, dtype=np.uint8)
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    if provenance is None:
        provenance = [NodeProvenance("unknown", "", i, 0) for i in range(n)]
    _validate_payload(features, labels, provenance)
    buf = io.BytesIO()
    buf.write(FEATURE_MAGIC)
    buf.write(struct.pack("<H", FORMAT_VERSION))
    _write_feature_payload(buf, features, labels, provenance)
    Path(path).write_bytes(buf.getvalue())


def read_features(path) -> FeatureSet:
    r = _Reader(Path(path).read_bytes(), path)
    r.expect_magic(FEATURE_MAGIC)
    r.expect_version(FORMAT_VERSION, "feature file")
    out = _read_feature_payload(r)
    r.expect_eof()
    return out


def write_graph(path, bundle: GraphBundle):
    buf = io.BytesIO()
    buf.write(GRAPH_MAGIC)
    buf.write(struct.pack("<H", FORMAT_VERSION))
    _write_text(buf, bundle.sequence_id)
    _write_feature_payload(buf, bundle.features, bundle.labels, bundle.provenance)
    adj = bundle.adjacency
    buf.write(struct.pack("<B", 1 if adj.has_self_loops else 0))
    buf.write(struct.pack("<Q", adj.nnz))
    buf.write(np.ascontiguousarray(adj.row_offsets, dtype="<u8").tobytes())
    buf.write(np.ascontiguousarray(adj.col_indices, dtype="<u8").tobytes())
    buf.write(np.ascontiguousarray(adj.weights, dtype="<f8").tobytes())
    Path(path).write_bytes(buf.getvalue())


def read_graph(path) -> GraphBundle:
    r = _Reader(Path(path).read_bytes(), path)
    r.expect_magic(GRAPH_MAGIC)
    r.expect_version(FORMAT_VERSION, "graph file")
    sequence_id = r.text()
    fs = _read_feature_payload(r)
    has_loops = r.u8()
    if has_loops not in (0, 1):
        r.off -= 1
        r.fail(f"invalid self-loop flag {has_loops}")
    nnz = r.u64()
    row_offsets = r.u64_array(fs.n + 1)
    col_indices = r.u64_array(nnz)
    weights = r.f64_array(nnz)
    r.expect_eof()
    try:
        adjacency = SparseAdjacency(fs.n, row_offsets, col_indices, weights,
                                    has_self_loops=bool(has_loops))
    except DataError as exc:
        raise FormatError(f"{r.path}: malformed adjacency ({exc})") from exc
    return GraphBundle(fs.features, fs.labels, adjacency, fs.provenance,
                       sequence_id=sequence_id)


@dataclass
class Checkpoint:
    config: ModelConfig
    params: dict[str, np.ndarray]
    velocities: dict[str, np.ndarray]
    seed: int
    epoch: int


def _write_blobs(buf: io.BytesIO, blobs: dict[str, np.ndarray]):
    buf.write(struct.pack("<I", len(blobs)))
    for name, arr in blobs.items():
        _write_text(buf, name)
        arr = np.ascontiguousarray(arr, dtype="<f8")
        buf.write(struct.pack("<I", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        buf.write(arr.tobytes())


def _read_blobs(r: _Reader) -> dict[str, np.ndarray]:
    count = r.u32()
    blobs: dict[str, np.ndarray] = {}
    for _ in range(count):
        name = r.text()
        ndim = r.u32()
        if ndim > 8:
            r.fail(f"implausible blob rank {ndim}")
        shape = tuple(r.u64() for _ in range(ndim))
        total = 1
        for d in shape:
            total *= d
        blobs[name] = r.f64_array(total).reshape(shape)
    return blobs


def save_checkpoint(path, config: ModelConfig, params: dict[str, np.ndarray],
                    velocities: dict[str, np.ndarray], seed: int, epoch: int):
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<H", FORMAT_VERSION))
    _write_text(buf, json.dumps(config.to_dict(), sort_keys=True))
    _write_blobs(buf, {name: params[name] for name in sorted(params)})
    _write_blobs(buf, {name: velocities[name] for name in sorted(velocities)})
    buf.write(struct.pack("<Q", seed))
    buf.write(struct.pack("<I", epoch))
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path) -> Checkpoint:
    r = _Reader(Path(path).read_bytes(), path)
    r.expect_magic(CHECKPOINT_MAGIC)
    r.expect_version(FORMAT_VERSION, "checkpoint")
    try:
        config = ModelConfig.from_dict(json.loads(r.text()))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{r.path}: malformed model config ({exc})") from exc
    params = _read_blobs(r)
    velocities = _read_blobs(r)
    seed = r.u64()
    epoch = r.u32()
    r.expect_eof()
    missing = [name for name in PARAM_ORDER if name not in params]
    if missing:
        raise CheckpointError(f"{r.path}: missing parameters {missing}")
    expected = config.weight_shapes()
    for name in PARAM_ORDER:
        if params[name].shape != expected[name]:
            raise CheckpointError(f"{r.path}: parameter {name!r} has shape "
                                  f"{params[name].shape}, config says {expected[name]}")
    return Checkpoint(config, params, velocities, seed, epoch)


@dataclass(frozen=True)
class ExperimentSplit:
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]


@dataclass
class ExperimentManifest:
    graphs: dict[str, Path]
    experiments: dict[str, ExperimentSplit]
    overrides: dict = field(default_factory=dict)

    def graph_names(self) -> list[str]:
        return sorted(self.graphs)


def load_manifest(path) -> ExperimentManifest:
    """Load and validate an experiment manifest.

    Relative graph paths resolve against the manifest's own directory. Train,
    validation and test sets must be pairwise disjoint inside each experiment
    and may only reference declared graphs.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "graphs" not in doc or "experiments" not in doc:
        raise ManifestError(f"{path}: manifest needs 'graphs' and 'experiments' sections")
    graphs: dict[str, Path] = {}
    for name, p in doc["graphs"].items():
        if not isinstance(p, str):
            raise ManifestError(f"{path}: graph {name!r} path must be a string")
        graphs[name] = (path.parent / p).resolve() if not Path(p).is_absolute() else Path(p)
    experiments: dict[str, ExperimentSplit] = {}
    for name, entry in doc["experiments"].items():
        if not isinstance(entry, dict):
            raise ManifestError(f"{path}: experiment {name!r} must be an object")
        sets = {}
        for role in ("train", "val", "test"):
            if role not in entry or not isinstance(entry[role], list) or not entry[role]:
                raise ManifestError(f"{path}: experiment {name!r} needs a nonempty "
                                    f"{role!r} list")
            unknown = [g for g in entry[role] if g not in graphs]
            if unknown:
                raise ManifestError(f"{path}: experiment {name!r} references undeclared "
                                    f"graphs {unknown}")
            sets[role] = tuple(entry[role])
        for a, b in (("train", "val"), ("train", "test"), ("val", "test")):
            overlap = sorted(set(sets[a]) & set(sets[b]))
            if overlap:
                raise ManifestError(f"{path}: experiment {name!r} has graphs {overlap} in "
                                    f"both {a!r} and {b!r}")
        experiments[name] = ExperimentSplit(**sets)
    if not experiments:
        raise ManifestError(f"{path}: no experiments declared")
    overrides = doc.get("overrides", {})
    if not isinstance(overrides, dict):
        raise ManifestError(f"{path}: 'overrides' must be an object")
    return ExperimentManifest(graphs=graphs, experiments=experiments, overrides=overrides)


def default_manifest_path() -> Path:
    """Path of the bundled four-experiment rotation manifest."""
    return Path(resources.files("mosgnn") / "manifests" / "table1.json")

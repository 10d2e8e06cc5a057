"""The on-disk pipeline: feature files, graph files, checkpoints, CLI.

Run:  python3 demos/05_files_and_cli_pipeline.py
"""

import json
import tempfile
from pathlib import Path

from mosgnn.cli import main
from mosgnn.dataio import read_features, write_features
from mosgnn.synthetic import two_cluster_features

workdir = Path(tempfile.mkdtemp(prefix="mosgnn_demo_"))
print("working in", workdir)

# Feature files are the boundary between the vision front-end and this
# engine: N x F float64 matrix + labels + per-node provenance.
for name, seed in (("train_a", 1), ("train_b", 2), ("val", 3), ("unseen", 4)):
    features, labels, provenance = two_cluster_features(
        60, 24, separation=12.0, seed=seed, video=name)
    write_features(workdir / f"{name}.nfv", features, labels, provenance)
fs = read_features(workdir / "train_a.nfv")
print(f"round-trip: {fs.n} nodes x {fs.feature_dim} features")

# The rest of the pipeline is CLI subcommands (exit code 0 on success).
for name in ("train_a", "train_b", "val", "unseen"):
    assert main(["build-graph", "--features", str(workdir / f"{name}.nfv"),
                 "--k", "8", "--out", str(workdir / f"{name}.ngb")]) == 0

assert main(["train",
             "--train", str(workdir / "train_a.ngb"), str(workdir / "train_b.ngb"),
             "--val", str(workdir / "val.ngb"),
             "--out-dir", str(workdir / "run"),
             "--epochs", "15", "--hidden-dims", "32", "16", "8", "4"]) == 0

assert main(["eval", "--checkpoint", str(workdir / "run" / "best.ckpt"),
             "--graph", str(workdir / "unseen.ngb"),
             "--out", str(workdir / "metrics.json")]) == 0

assert main(["predict", "--checkpoint", str(workdir / "run" / "best.ckpt"),
             "--graph", str(workdir / "unseen.ngb"),
             "--out", str(workdir / "predictions.jsonl")]) == 0

first = json.loads((workdir / "predictions.jsonl").read_text().splitlines()[0])
print("\nfirst prediction record:")
print(json.dumps(first, indent=2, sort_keys=True))
print("\nartifacts:", sorted(p.name for p in (workdir / "run").iterdir()))

"""Command-line surface: build-graph, train, eval, predict, run-experiments.

Exit codes: 0 success, 1 usage error, 2 data or format error, 3 numeric
error. Every run echoes its fully resolved configuration to stderr before
doing any work, and all outputs are deterministic functions of the inputs
and seeds.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import (default_manifest_path, load_checkpoint, load_manifest,
                     read_features, read_graph, save_checkpoint, write_graph)
from .errors import (BatchError, CheckpointError, DataError, DimensionError,
                     EvaluationError, FormatError, GraphConstructionError,
                     ManifestError, NumericError, ParameterError, StateError)
from .experiments import (bundle_from_features, check_compatible, model_from_checkpoint,
                          resolve_settings, run_experiments)
from .graphs import normalize_adjacency
from .metrics import category_report, confusion_counts, format_category_table, \
    precision_recall_f
from .model import Model, ModelConfig
from .training import SGD, TrainConfig, fit

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_DATA_ERRORS = (DataError, FormatError, ManifestError, CheckpointError,
                DimensionError, EvaluationError, BatchError,
                GraphConstructionError, StateError, FileNotFoundError,
                IsADirectoryError, PermissionError)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; the contract here is exit code 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _log(msg: str):
    print(msg, file=sys.stderr)


def _echo_config(command: str, resolved: dict):
    _log(f"mosgnn {command} config: " + json.dumps(resolved, sort_keys=True))


def _add_override_flags(p: argparse.ArgumentParser, with_k: bool = True):
    if with_k:
        p.add_argument("--k", type=int, default=None, help="neighbors per node (default 40)")
    p.add_argument("--lr", type=float, default=None, help="learning rate (default 0.01)")
    p.add_argument("--momentum", type=float, default=None, help="SGD momentum (default 0.9)")
    p.add_argument("--weight-decay", type=float, default=None,
                   help="L2 weight decay (default 5e-4)")
    p.add_argument("--epochs", type=int, default=None, dest="max_epochs",
                   help="maximum training epochs (default 500)")
    p.add_argument("--eval-every", type=int, default=None,
                   help="epochs between validations (default 1)")
    p.add_argument("--graphs-per-batch", type=int, default=None,
                   help="graphs per block-diagonal batch (default 1)")
    p.add_argument("--dropout", type=float, default=None, dest="dropout_p",
                   help="dropout probability (default 0.5)")
    p.add_argument("--hidden-dims", type=int, nargs=4, default=None,
                   metavar=("H1", "H2", "H3", "H4"),
                   help="hidden layer widths (default 512 256 128 64)")
    p.add_argument("--seed", type=int, default=None, help="root RNG seed (default 0)")


def _overrides_from_args(args) -> dict:
    keys = ("k", "lr", "momentum", "weight_decay", "max_epochs", "eval_every",
            "graphs_per_batch", "dropout_p", "hidden_dims", "seed")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mosgnn",
                     description="Inductive graph network engine for moving vs. "
                                 "static object node classification.")
    parser.add_argument("--version", action="version", version=f"mosgnn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", parents=[], help="build a k-NN graph from a "
                       "feature file")
    p.add_argument("--features", required=True, help="input feature file (NFV1)")
    p.add_argument("--k", type=int, default=40, help="neighbors per node (default 40)")
    p.add_argument("--out", required=True, help="output graph file (NGB1)")
    p.add_argument("--sequence-id", default=None,
                   help="graph name stored in the file (default: feature file stem)")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("train", help="train on graph files, select on validation")
    p.add_argument("--train", required=True, nargs="+", metavar="GRAPH",
                   help="training graph files")
    p.add_argument("--val", required=True, nargs="+", metavar="GRAPH",
                   help="validation graph files")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.add_argument("--resume", default=None,
                   help="checkpoint to resume from (restores epoch and velocities)")
    _add_override_flags(p, with_k=False)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a labeled graph")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", default=None, help="write metrics JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="classify nodes of a graph with a trained model")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True, help="output JSONL path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("run-experiments", help="run every experiment in a manifest")
    p.add_argument("--manifest", default=None,
                   help=f"experiment manifest (default: bundled "
                        f"{default_manifest_path().name})")
    p.add_argument("--out", required=True, dest="out_dir", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="experiments to run in parallel")
    _add_override_flags(p)
    p.set_defaults(func=cmd_run_experiments)
    return parser


def cmd_build_graph(args) -> int:
    seq = args.sequence_id if args.sequence_id is not None else Path(args.features).stem
    _echo_config("build-graph", {"features": args.features, "k": args.k,
                                 "out": args.out, "sequence_id": seq})
    fs = read_features(args.features)
    bundle = bundle_from_features(fs, args.k, seq)
    write_graph(args.out, bundle)
    print(f"{args.out}: {bundle.n} nodes, {bundle.adjacency.num_undirected_edges} "
          f"undirected edges, {bundle.num_labeled} labeled")
    return EXIT_OK


def _load_bundles(paths):
    return [read_graph(p) for p in paths]


def cmd_train(args) -> int:
    overrides = _overrides_from_args(args)
    settings = resolve_settings(overrides)
    _echo_config("train", {**settings, "train": args.train, "val": args.val,
                           "out_dir": args.out_dir, "resume": args.resume})
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_graphs = _load_bundles(args.train)
    val_graphs = _load_bundles(args.val)

    train_cfg = TrainConfig(lr=settings["lr"], momentum=settings["momentum"],
                            weight_decay=settings["weight_decay"],
                            max_epochs=settings["max_epochs"],
                            graphs_per_batch=settings["graphs_per_batch"],
                            seed=settings["seed"], eval_every=settings["eval_every"])
    start_epoch = 0
    if args.resume:
        ckpt = load_checkpoint(args.resume)
        check_compatible(ckpt, train_graphs[0])
        model = model_from_checkpoint(ckpt)
        optimizer = SGD(model.parameters(), train_cfg.lr, train_cfg.momentum,
                        train_cfg.weight_decay)
        for name, vel in ckpt.velocities.items():
            optimizer.velocities[name][...] = vel
        start_epoch = ckpt.epoch
    else:
        model_cfg = ModelConfig(in_dim=train_graphs[0].feature_dim,
                                hidden_dims=tuple(settings["hidden_dims"]),
                                dropout_p=settings["dropout_p"], seed=settings["seed"])
        model = Model(model_cfg)
        optimizer = SGD(model.parameters(), train_cfg.lr, train_cfg.momentum,
                        train_cfg.weight_decay)

    t0 = time.perf_counter()
    with open(out_dir / "train_log.jsonl", "a" if args.resume else "w") as log:
        result = fit(model, train_graphs, val_graphs, train_cfg, optimizer=optimizer,
                     start_epoch=start_epoch, log_stream=log)
    wall = time.perf_counter() - t0

    save_checkpoint(out_dir / "last.ckpt", model.cfg, model.snapshot(),
                    optimizer.velocities, settings["seed"], train_cfg.max_epochs)
    save_checkpoint(out_dir / "best.ckpt", model.cfg, result.best_params,
                    optimizer.velocities, settings["seed"], result.best_epoch)
    report = {"training": result.report.to_dict(), "settings": settings,
              "train_graphs": [g.sequence_id for g in train_graphs],
              "val_graphs": [g.sequence_id for g in val_graphs]}
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    _log(f"trained {result.report.epochs[-1].epoch if result.report.epochs else 0} epochs "
         f"in {wall:.1f}s")
    print(f"best validation F {result.best_val_f:.4f} at epoch {result.best_epoch}; "
          f"checkpoints in {out_dir}")
    return EXIT_OK


def cmd_eval(args) -> int:
    _echo_config("eval", {"checkpoint": args.checkpoint, "graph": args.graph,
                          "out": args.out})
    ckpt = load_checkpoint(args.checkpoint)
    bundle = read_graph(args.graph)
    check_compatible(ckpt, bundle)
    if bundle.num_labeled == 0:
        raise EvaluationError(f"{args.graph}: no labeled nodes to evaluate")
    model = model_from_checkpoint(ckpt)
    pred = model.predict(normalize_adjacency(bundle.adjacency), bundle.features)
    gt = np.where(bundle.labeled_mask, bundle.labels, 0).astype(np.int64)
    metrics = precision_recall_f(confusion_counts(pred, gt, bundle.labeled_mask))
    cats = category_report(pred, gt, bundle.categories(), bundle.labeled_mask)
    doc = {"graph": bundle.sequence_id, "metrics": metrics.to_dict(),
           "categories": cats.to_dict()}
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"precision {metrics.precision:.4f}  recall {metrics.recall:.4f}  "
          f"f_measure {metrics.f_measure:.4f}")
    print(format_category_table(cats))
    return EXIT_OK


def cmd_predict(args) -> int:
    _echo_config("predict", {"checkpoint": args.checkpoint, "graph": args.graph,
                             "out": args.out})
    ckpt = load_checkpoint(args.checkpoint)
    bundle = read_graph(args.graph)
    check_compatible(ckpt, bundle)
    model = model_from_checkpoint(ckpt)
    a_hat = normalize_adjacency(bundle.adjacency)
    log_probs = model.forward(a_hat, bundle.features, training=False).value
    pred = np.argmax(log_probs, axis=1)
    with open(args.out, "w") as f:
        for i, rec in enumerate(bundle.provenance):
            f.write(json.dumps({
                "node": i, "category": rec.category, "video": rec.video,
                "frame": rec.frame, "instance": rec.instance,
                "label": int(pred[i]),
                "log_probs": [float(v) for v in log_probs[i]],
            }, sort_keys=True) + "\n")
    print(f"{args.out}: wrote {bundle.n} predictions "
          f"({int(np.sum(pred == 1))} moving, {int(np.sum(pred == 0))} static)")
    return EXIT_OK


def cmd_run_experiments(args) -> int:
    manifest_path = args.manifest if args.manifest else default_manifest_path()
    overrides = _overrides_from_args(args)
    manifest = load_manifest(manifest_path)
    settings = resolve_settings(manifest.overrides, overrides)
    _echo_config("run-experiments", {**settings, "manifest": str(manifest_path),
                                     "out": str(args.out_dir), "jobs": args.jobs})
    t0 = time.perf_counter()
    outcomes, code = run_experiments(manifest, args.out_dir, overrides, jobs=args.jobs)
    _log(f"ran {len(outcomes)} experiments in {time.perf_counter() - t0:.1f}s")
    summary_txt = Path(args.out_dir) / "summary.txt"
    print(summary_txt.read_text().rstrip())
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"mosgnn: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"mosgnn: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except IndexError as exc:
        print(f"mosgnn: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _DATA_ERRORS as exc:
        print(f"mosgnn: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

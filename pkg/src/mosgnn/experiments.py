"""Experiment orchestration: the train/validate/test rotation protocol.

Each experiment fits a fresh model on its training graphs, keeps the
parameters scoring the best validation F-measure, and reports test metrics
plus a per-category breakdown. Settings resolve in layers: built-in defaults,
then manifest overrides, then explicit (CLI) overrides.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .dataio import (Checkpoint, ExperimentManifest, FeatureSet, read_features,
                     save_checkpoint)
from .errors import CheckpointError, ManifestError, MosgnnError
from .graphs import GraphBundle, knn_graph, normalize_adjacency
from .metrics import CategoryReport, category_report
from .model import PARAM_ORDER, Model, ModelConfig
from .rng import TAG_EXPERIMENT, derive_seed
from .training import SGD, TrainConfig, evaluate_graphs, fit

__all__ = ["DEFAULT_SETTINGS", "resolve_settings", "bundle_from_features",
           "model_from_checkpoint", "run_experiment", "run_experiments",
           "format_summary_tables"]

DEFAULT_SETTINGS: dict = {
    "k": 40,
    "lr": 0.01,
    "momentum": 0.9,
    "weight_decay": 5e-4,
    "max_epochs": 500,
    "graphs_per_batch": 1,
    "eval_every": 1,
    "dropout_p": 0.5,
    "hidden_dims": [512, 256, 128, 64],
    "seed": 0,
}


def resolve_settings(*layers: dict | None) -> dict:
    """Merge override layers onto the defaults; unknown keys are rejected."""
    out = dict(DEFAULT_SETTINGS)
    for layer in layers:
        if not layer:
            continue
        unknown = sorted(set(layer) - set(DEFAULT_SETTINGS))
        if unknown:
            raise ManifestError(f"unknown override keys {unknown}; valid keys are "
                                f"{sorted(DEFAULT_SETTINGS)}")
        for key, value in layer.items():
            if value is not None:
                out[key] = value
    out["hidden_dims"] = [int(d) for d in out["hidden_dims"]]
    return out


def bundle_from_features(fs: FeatureSet, k: int, sequence_id: str) -> GraphBundle:
    adjacency = knn_graph(fs.features, k)
    return GraphBundle(fs.features, fs.labels, adjacency, fs.provenance,
                       sequence_id=sequence_id)


def model_from_checkpoint(ckpt: Checkpoint) -> Model:
    params = {name: ad.Parameter(name, ckpt.params[name]) for name in PARAM_ORDER}
    return Model(ckpt.config, params)


def check_compatible(ckpt: Checkpoint, bundle: GraphBundle):
    if ckpt.config.in_dim != bundle.feature_dim:
        raise CheckpointError(f"checkpoint expects {ckpt.config.in_dim}-dimensional "
                              f"features but graph {bundle.sequence_id or '?'} has "
                              f"{bundle.feature_dim}")


@dataclass
class ExperimentOutcome:
    name: str
    best_epoch: int
    best_val_f: float
    test_metrics: dict
    test_categories: dict
    error: str | None = None


def run_experiment(name: str, train: list[GraphBundle], val: list[GraphBundle],
                   test: list[GraphBundle], settings: dict, out_dir: Path,
                   exp_seed: int) -> ExperimentOutcome:
    """Fit, select on validation, evaluate on test; writes the experiment dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    in_dim = train[0].feature_dim
    model_cfg = ModelConfig(in_dim=in_dim, hidden_dims=tuple(settings["hidden_dims"]),
                            dropout_p=settings["dropout_p"], seed=exp_seed)
    train_cfg = TrainConfig(lr=settings["lr"], momentum=settings["momentum"],
                            weight_decay=settings["weight_decay"],
                            max_epochs=settings["max_epochs"],
                            graphs_per_batch=settings["graphs_per_batch"],
                            seed=exp_seed, eval_every=settings["eval_every"])
    model = Model(model_cfg)
    optimizer = SGD(model.parameters(), train_cfg.lr, train_cfg.momentum,
                    train_cfg.weight_decay)
    with open(out_dir / "train_log.jsonl", "w") as log:
        result = fit(model, train, val, train_cfg, optimizer=optimizer, log_stream=log)

    model.load_values(result.best_params)
    save_checkpoint(out_dir / "best.ckpt", model_cfg, result.best_params,
                    optimizer.velocities, exp_seed, result.best_epoch)

    test_metrics = evaluate_graphs(model, test)
    cat_report = _test_category_report(model, test)
    report = {
        "experiment": name,
        "settings": {**settings, "seed": exp_seed},
        "train_graphs": [g.sequence_id for g in train],
        "val_graphs": [g.sequence_id for g in val],
        "test_graphs": [g.sequence_id for g in test],
        "training": result.report.to_dict(),
        "test": test_metrics.to_dict(),
        "test_categories": cat_report.to_dict(),
    }
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return ExperimentOutcome(name=name, best_epoch=result.best_epoch,
                             best_val_f=result.best_val_f,
                             test_metrics=test_metrics.to_dict(),
                             test_categories=cat_report.to_dict())


def _test_category_report(model: Model, graphs: list[GraphBundle]) -> CategoryReport:
    preds, gts, cats, masks = [], [], [], []
    for g in graphs:
        preds.append(model.predict(normalize_adjacency(g.adjacency), g.features))
        gts.append(np.where(g.labeled_mask, g.labels, 0).astype(np.int64))
        cats.extend(g.categories())
        masks.append(g.labeled_mask)
    return category_report(np.concatenate(preds), np.concatenate(gts), cats,
                           np.concatenate(masks))


def _run_one(args) -> ExperimentOutcome:
    name, train, val, test, settings, out_dir, exp_seed = args
    try:
        return run_experiment(name, train, val, test, settings, out_dir, exp_seed)
    except MosgnnError as exc:
        return ExperimentOutcome(name=name, best_epoch=0, best_val_f=float("nan"),
                                 test_metrics={}, test_categories={},
                                 error=f"{type(exc).__name__}: {exc}")


def run_experiments(manifest: ExperimentManifest, out_dir, cli_overrides=None,
                    jobs: int = 1) -> tuple[list[ExperimentOutcome], int]:
    """Run every experiment in the manifest; failures do not stop the rest.

    Returns the outcomes plus a process exit code (0 only if all succeeded).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    settings = resolve_settings(manifest.overrides, cli_overrides)
    features = {name: read_features(path) for name, path in manifest.graphs.items()}
    bundles = {name: bundle_from_features(fs, settings["k"], name)
               for name, fs in features.items()}

    tasks = []
    for index, (name, split) in enumerate(manifest.experiments.items()):
        exp_seed = derive_seed(settings["seed"], TAG_EXPERIMENT, index)
        tasks.append((name,
                      [bundles[g] for g in split.train],
                      [bundles[g] for g in split.val],
                      [bundles[g] for g in split.test],
                      settings, out_dir / name, exp_seed))

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_one, tasks))
    else:
        outcomes = [_run_one(t) for t in tasks]

    summary = {
        "settings": settings,
        "experiments": {
            o.name: ({"error": o.error} if o.error else
                     {"best_epoch": o.best_epoch, "best_val_f": o.best_val_f,
                      "test_f": o.test_metrics["f_measure"],
                      "test": o.test_metrics, "test_categories": o.test_categories})
            for o in outcomes
        },
    }
    ok = [o for o in outcomes if o.error is None]
    if ok:
        summary["mean_test_f"] = float(np.mean([o.test_metrics["f_measure"] for o in ok]))
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (out_dir / "summary.txt").write_text(format_summary_tables(outcomes) + "\n")
    exit_code = 0 if all(o.error is None for o in outcomes) else 2
    return outcomes, exit_code


def format_summary_tables(outcomes: list[ExperimentOutcome]) -> str:
    """Aligned text tables: F per experiment, then F per category."""
    names = [o.name for o in outcomes]
    header = ["F-Measure"] + names
    val_row = ["validation"]
    test_row = ["test"]
    for o in outcomes:
        if o.error:
            val_row.append("error")
            test_row.append("error")
        else:
            val_row.append(f"{o.best_val_f:.4f}")
            test_row.append(f"{o.test_metrics['f_measure']:.4f}")
    rows = [header, val_row, test_row]
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))

    categories = sorted({c for o in outcomes if not o.error
                         for c in o.test_categories.get("per_category", {})})
    if categories:
        lines.append("")
        header2 = ["Test F by category"] + categories + ["overall"]
        rows2 = [header2]
        for o in outcomes:
            if o.error:
                rows2.append([o.name] + ["error"] * (len(categories) + 1))
                continue
            per = o.test_categories["per_category"]
            row = [o.name]
            row += [f"{per[c]['f_measure']:.4f}" if c in per else "-" for c in categories]
            row.append(f"{o.test_categories['overall_mean_f']:.4f}")
            rows2.append(row)
        widths2 = [max(len(r[i]) for r in rows2) for i in range(len(header2))]
        lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths2)).rstrip() for r in rows2[:1]]
        lines.insert(len(lines), "  ".join("-" * w for w in widths2))
        lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths2)).rstrip() for r in rows2[1:]]

    for o in outcomes:
        if o.error:
            lines.append("")
            lines.append(f"{o.name}: FAILED ({o.error})")
    return "\n".join(lines)

import numpy as np
import pytest

import mosgnn.autodiff as ad
from mosgnn.errors import DataError, NumericError, ParameterError
from mosgnn.graphs import GraphBundle
from mosgnn.model import Model, ModelConfig
from mosgnn.sparse import SparseAdjacency
from mosgnn.synthetic import make_synthetic_graph
from mosgnn.training import SGD, TrainConfig, evaluate_graphs, fit, train_epoch

CFG = ModelConfig(in_dim=6, hidden_dims=(8, 6, 5, 4), seed=3)


def toy_graphs(n_graphs=2, n=24, sep=8.0, base_seed=50):
    return [make_synthetic_graph(n_nodes=n, feature_dim=6, k=3, separation=sep,
                                 seed=base_seed + i, sequence_id=f"t{i}")
            for i in range(n_graphs)]


# ---------------------------------------------------------------- sgd_step

def test_plain_gradient_descent():
    p = ad.Parameter("w", np.array([[2.0]]))
    p.grad[...] = 0.5
    SGD([p], lr=0.1, momentum=0.0, weight_decay=0.0).step()
    assert p.value[0, 0] == 2.0 - 0.1 * 0.5


def test_weight_decay_scalar_recurrence():
    # w=1, g=0, wd=0.1, lr=0.1, momentum=0 -> w' = 1 - 0.1*0.1 = 0.99
    p = ad.Parameter("w", np.array([[1.0]]))
    SGD([p], lr=0.1, momentum=0.0, weight_decay=0.1).step()
    assert abs(p.value[0, 0] - 0.99) < 1e-15


def test_momentum_two_step_recurrence():
    # constant gradient g with momentum 0.9: v1 = g, v2 = 1.9 g
    p = ad.Parameter("w", np.array([[0.0]]))
    opt = SGD([p], lr=1.0, momentum=0.9, weight_decay=0.0)
    g = 0.25
    p.grad[...] = g
    opt.step()
    assert abs(opt.velocities["w"][0, 0] - g) < 1e-15
    p.grad[...] = g
    opt.step()
    assert abs(opt.velocities["w"][0, 0] - 1.9 * g) < 1e-15


def test_zero_grad_zero_decay_is_noop():
    vals = np.random.default_rng(0).standard_normal((3, 2))
    p = ad.Parameter("w", vals)
    opt = SGD([p], lr=0.5, momentum=0.9, weight_decay=0.0)
    opt.step()
    opt.step()
    np.testing.assert_array_equal(p.value, vals)


def test_weight_decay_shrinks_weights():
    vals = np.array([[1.0, -2.0], [0.5, -0.25]])
    p = ad.Parameter("w", vals)
    SGD([p], lr=0.1, momentum=0.0, weight_decay=0.05).step()
    assert np.all(np.abs(p.value) < np.abs(vals))


def test_nonfinite_grad_names_parameter():
    p = ad.Parameter("lin1.W", np.ones((2, 2)))
    p.grad[0, 0] = np.nan
    with pytest.raises(NumericError, match="lin1.W"):
        SGD([p], lr=0.1).step()


def test_sgd_lr_zero_step_is_noop():
    # the optimizer itself accepts lr=0 (TrainConfig does not): the update
    # becomes a pure no-op regardless of gradients
    vals = np.array([[1.0, -2.0]])
    p = ad.Parameter("w", vals)
    p.grad[...] = 3.0
    SGD([p], lr=0.0, momentum=0.9, weight_decay=5e-4).step()
    np.testing.assert_array_equal(p.value, vals)


# ---------------------------------------------------------------- train_epoch

def test_lr_cannot_be_zero():
    with pytest.raises(ParameterError):
        TrainConfig(lr=0.0)


def test_train_epoch_returns_mean_loss_and_updates():
    graphs = toy_graphs()
    model = Model(CFG)
    cfg = TrainConfig(seed=1, max_epochs=1)
    opt = SGD(model.parameters(), cfg.lr, cfg.momentum, cfg.weight_decay)
    before = model.snapshot()
    loss = train_epoch(model, graphs, cfg, opt, epoch=1)
    assert np.isfinite(loss) and loss > 0.0
    changed = any(np.any(model.params[n].value != before[n]) for n in before)
    assert changed


def test_training_trajectory_deterministic():
    def run():
        model = Model(CFG)
        cfg = TrainConfig(seed=9, max_epochs=5)
        graphs = toy_graphs()
        val = toy_graphs(1, base_seed=70)
        res = fit(model, graphs, val, cfg)
        return [e.train_loss for e in res.report.epochs], model.snapshot()

    losses1, snap1 = run()
    losses2, snap2 = run()
    assert losses1 == losses2
    for name in snap1:
        np.testing.assert_array_equal(snap1[name], snap2[name])


def test_loss_strictly_decreases_on_toy_problem():
    # dropout off: the per-epoch objective is deterministic, so the descent
    # trend is visible without masking noise
    model = Model(ModelConfig(in_dim=6, hidden_dims=(8, 6, 5, 4), dropout_p=0.0,
                              seed=3))
    cfg = TrainConfig(seed=2, max_epochs=10)
    graphs = toy_graphs(n=40, sep=12.0)
    opt = SGD(model.parameters(), cfg.lr, cfg.momentum, cfg.weight_decay)
    losses = [train_epoch(model, graphs, cfg, opt, epoch=e) for e in range(1, 11)]
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_loss_trend_with_dropout_enabled():
    model = Model(CFG)
    cfg = TrainConfig(seed=2, max_epochs=30)
    graphs = toy_graphs(n=40, sep=12.0)
    opt = SGD(model.parameters(), cfg.lr, cfg.momentum, cfg.weight_decay)
    losses = [train_epoch(model, graphs, cfg, opt, epoch=e) for e in range(1, 31)]
    assert np.mean(losses[-5:]) < np.mean(losses[:5])


def test_unlabeled_only_graph_rejected_up_front():
    g = toy_graphs(1)[0]
    unlabeled = GraphBundle(g.features, np.full(g.n, 255, dtype=np.uint8),
                            g.adjacency, g.provenance, "u")
    model = Model(CFG)
    cfg = TrainConfig(max_epochs=2)
    with pytest.raises(DataError, match="no labeled nodes"):
        fit(model, [unlabeled], toy_graphs(1, base_seed=70), cfg)


def test_graphs_per_batch_two_runs():
    model = Model(CFG)
    cfg = TrainConfig(seed=4, max_epochs=3, graphs_per_batch=2)
    res = fit(model, toy_graphs(4), toy_graphs(1, base_seed=70), cfg)
    assert len(res.report.epochs) == 3


def test_partially_labeled_graph_trains():
    # unlabeled nodes carry no loss but still participate in message passing
    graphs = toy_graphs()
    for g in graphs:
        g.labels[::3] = 255
        assert 0 < g.num_labeled < g.n
    model = Model(CFG)
    res = fit(model, graphs, toy_graphs(1, base_seed=70),
              TrainConfig(seed=1, max_epochs=2))
    assert np.isfinite(res.report.epochs[-1].train_loss)
    from mosgnn.graphs import normalize_adjacency
    pred = model.predict(normalize_adjacency(graphs[0].adjacency),
                         graphs[0].features)
    assert pred.shape == (graphs[0].n,)  # every node classified, labeled or not


# ---------------------------------------------------------------- fit

def test_fit_single_epoch_best_epoch_one():
    model = Model(CFG)
    res = fit(model, toy_graphs(), toy_graphs(1, base_seed=70),
              TrainConfig(seed=1, max_epochs=1))
    assert res.best_epoch == 1
    assert res.report.num_evaluations == 1


def test_fit_separable_data_reaches_high_f():
    model = Model(CFG)
    res = fit(model, toy_graphs(sep=10.0), toy_graphs(1, sep=10.0, base_seed=70),
              TrainConfig(seed=3, max_epochs=40))
    assert res.best_val_f >= 0.95


def test_report_length_matches_evaluations():
    model = Model(CFG)
    res = fit(model, toy_graphs(), toy_graphs(1, base_seed=70),
              TrainConfig(seed=1, max_epochs=7, eval_every=3))
    assert len(res.report.epochs) == 7
    assert res.report.num_evaluations == 2  # epochs 3 and 6


def test_validation_eval_mode_stable():
    model = Model(CFG)
    val = toy_graphs(1, base_seed=70)
    fit(model, toy_graphs(), val, TrainConfig(seed=1, max_epochs=2))
    m1 = evaluate_graphs(model, val)
    m2 = evaluate_graphs(model, val)
    assert m1 == m2


def test_fit_rejects_shared_train_val_graph():
    g = toy_graphs(1)[0]
    with pytest.raises(DataError, match="both train and validation"):
        fit(Model(CFG), [g], [g], TrainConfig(max_epochs=1))


def test_best_params_frozen_at_best_epoch():
    model = Model(CFG)
    res = fit(model, toy_graphs(sep=10.0), toy_graphs(1, sep=10.0, base_seed=70),
              TrainConfig(seed=3, max_epochs=15))
    evals = [e for e in res.report.epochs if e.val_f is not None]
    best = max(evals, key=lambda e: e.val_f)
    firsts = [e for e in evals if e.val_f == best.val_f]
    assert res.best_epoch == firsts[0].epoch  # ties go to the earlier epoch
    # reloading the returned best params reproduces the recorded best F
    model.load_values(res.best_params)
    again = evaluate_graphs(model, toy_graphs(1, sep=10.0, base_seed=70))
    assert abs(again.f_measure - res.best_val_f) < 1e-12


def test_fit_writes_jsonl_log(tmp_path):
    import json
    model = Model(CFG)
    log_path = tmp_path / "log.jsonl"
    with open(log_path, "w") as fh:
        fit(model, toy_graphs(), toy_graphs(1, base_seed=70),
            TrainConfig(seed=1, max_epochs=3), log_stream=fh)
    lines = log_path.read_text().strip().splitlines()
    assert len(lines) == 3
    rec = json.loads(lines[0])
    assert rec["epoch"] == 1 and "train_loss" in rec and "val_f" in rec

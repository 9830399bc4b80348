"""Optimizer behavior, the training loop, and population training."""

import numpy as np
import pytest

from hardmono import numcore as nc
from hardmono.corpus import Sample
from hardmono.hacm import HacmModel, ModelConfig
from hardmono.train import (
    CELL_ORDER,
    Adam,
    TrainConfig,
    TrainingError,
    evaluate,
    population_counts,
    train_model,
    train_population,
)

TRAIN = [
    Sample("lagen", ("V", "PRS"), "lagent"),
    Sample("tilen", ("V", "PRS"), "tilent"),
    Sample("tilen", ("V", "PST"), "tolen"),
    Sample("rigen", ("V", "PST"), "rogen"),
    Sample("masen", ("V", "PRS"), "masent"),
    Sample("piren", ("V", "PST"), "poren"),
]
DEV = [
    Sample("digen", ("V", "PRS"), "digent"),
    Sample("digen", ("V", "PST"), "dogen"),
    Sample("kasen", ("V", "PRS"), "kasent"),
]
SIZES = ModelConfig(hidden=8, embed=6, feat_embed=3)
FAST = TrainConfig(epochs=2, patience=2, dropout=0.0, seed=1)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(patience=0)
    with pytest.raises(ValueError):
        TrainConfig(setting="extreme")
    with pytest.raises(ValueError):
        TrainConfig(dropout=1.0)


def test_adam_minimizes_quadratic():
    x = nc.param(np.array([10.0]))
    target = nc.constant(np.array([3.0]))
    optimizer = Adam([x], lr=0.1, clip_norm=0.0)
    for _ in range(400):
        x.zero_grad()
        diff = nc.sub(x, target)
        nc.backward(nc.dot(diff, diff))
        optimizer.step()
    assert abs(float(x.value[0]) - 3.0) < 1e-3


def test_adam_first_step_size_is_lr():
    x = nc.param(np.array([0.0]))
    optimizer = Adam([x], lr=0.01, clip_norm=0.0)
    nc.backward(nc.smul(7.0, nc.pick(x, 0)))
    optimizer.step()
    assert float(x.value[0]) == pytest.approx(-0.01, rel=1e-6)


def test_clipping_equalizes_huge_gradients():
    outcomes = []
    for scale in (1e3, 1e9):
        x = nc.param(np.array([0.0]))
        optimizer = Adam([x], lr=0.01, clip_norm=1.0)
        nc.backward(nc.smul(scale, nc.pick(x, 0)))
        optimizer.step()
        outcomes.append(float(x.value[0]))
    assert outcomes[0] == pytest.approx(outcomes[1], rel=1e-12)
    assert outcomes[0] == pytest.approx(-0.01, rel=1e-6)


@pytest.mark.parametrize("arch", ["HACM", "HAEM"])
def test_training_reduces_loss(arch):
    result = train_model(arch, "smart", TRAIN, DEV, SIZES,
                         TrainConfig(epochs=3, patience=3, dropout=0.0, seed=0))
    losses = [h["train_loss"] for h in result.history]
    assert losses[-1] < losses[0]
    assert all(np.isfinite(l) for l in losses)


def test_returned_model_matches_reported_accuracy():
    result = train_model("HAEM", "smart", TRAIN, DEV, SIZES, FAST)
    assert evaluate(result.model, DEV) == result.dev_accuracy
    assert result.dev_accuracy == max(h["dev_accuracy"] for h in result.history)


def test_history_schema():
    result = train_model("HACM", "naive", TRAIN, DEV, SIZES, FAST)
    assert [h["epoch"] for h in result.history] == list(range(1, len(result.history) + 1))
    for h in result.history:
        assert set(h) == {"epoch", "train_loss", "dev_accuracy"}


def test_same_seed_same_weights():
    a = train_model("HAEM", "smart", TRAIN, DEV, SIZES, FAST)
    b = train_model("HAEM", "smart", TRAIN, DEV, SIZES, FAST)
    sa, sb = a.model.params.state_dict(), b.model.params.state_dict()
    assert list(sa) == list(sb)
    for name in sa:
        assert np.array_equal(sa[name], sb[name])
    assert a.history == b.history


def test_frozen_model_stops_after_two_epochs():
    config = TrainConfig(epochs=10, patience=1, lr=0.0, dropout=0.0, seed=0)
    result = train_model("HACM", "smart", TRAIN, DEV, SIZES, config)
    assert len(result.history) == 2


def test_dropout_path_runs():
    result = train_model("HAEM", "smart", TRAIN, DEV, SIZES,
                         TrainConfig(epochs=1, patience=1, dropout=0.3, seed=2))
    assert np.isfinite(result.history[0]["train_loss"])


def test_input_validation():
    with pytest.raises(ValueError, match="architecture"):
        train_model("GRU", "smart", TRAIN, DEV, SIZES, FAST)
    with pytest.raises(ValueError, match="aligner"):
        train_model("HACM", "viterbi", TRAIN, DEV, SIZES, FAST)
    with pytest.raises(TrainingError, match="training"):
        train_model("HACM", "smart", [], DEV, SIZES, FAST)
    with pytest.raises(TrainingError, match="dev"):
        train_model("HACM", "smart", TRAIN, [], SIZES, FAST)
    unlabeled = [Sample("abc", ("V",))]
    with pytest.raises(TrainingError, match="unlabeled"):
        train_model("HACM", "smart", unlabeled, DEV, SIZES, FAST)


def test_evaluate_rejects_unlabeled_and_empty():
    result = train_model("HACM", "smart", TRAIN, DEV, SIZES,
                         TrainConfig(epochs=1, patience=1, dropout=0.0, seed=0))
    with pytest.raises(TrainingError):
        evaluate(result.model, [])
    with pytest.raises(TrainingError):
        evaluate(result.model, [Sample("abc", ("V",))])


def test_non_finite_loss_aborts(monkeypatch):
    monkeypatch.setattr(
        HacmModel, "sample_loss",
        lambda self, *args, **kwargs: nc.constant(np.array(float("nan"))))
    with pytest.raises(TrainingError, match="non-finite"):
        train_model("HACM", "smart", TRAIN, DEV, SIZES, FAST)


def test_population_counts_table():
    low = population_counts("low")
    assert all(low[cell] == 5 for cell in CELL_ORDER)
    medium = population_counts("medium")
    assert medium[("HAEM", "naive")] == 3
    assert sum(medium.values()) == 18
    high = population_counts("high")
    assert high == {("HACM", "smart"): 3, ("HACM", "naive"): 3,
                    ("HAEM", "smart"): 3, ("HAEM", "naive"): 2}
    with pytest.raises(ValueError):
        population_counts("huge")


def test_population_seeds_and_order():
    counts = {("HACM", "smart"): 1, ("HACM", "naive"): 0,
              ("HAEM", "smart"): 0, ("HAEM", "naive"): 2}
    config = TrainConfig(epochs=1, patience=1, dropout=0.0, seed=40)
    results = train_population(TRAIN, DEV, SIZES, config, counts=counts)
    assert [(r.arch, r.aligner, r.seed) for r in results] == [
        ("HACM", "smart", 40), ("HAEM", "naive", 41), ("HAEM", "naive", 42)]
    # distinct seeds produce distinct weights
    w1 = results[1].model.params.state_dict()
    w2 = results[2].model.params.state_dict()
    assert any(not np.array_equal(w1[n], w2[n]) for n in w1)

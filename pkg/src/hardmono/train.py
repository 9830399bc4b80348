"""Per-model training: Adam with gradient clipping, per-sample updates,
early stopping on dev exact-match accuracy, and best-checkpoint selection.

Model selection is accuracy-driven: after every epoch the model greedily
decodes the dev set (post filter applied) and the parameters with the best
dev accuracy are what training returns, regardless of later epochs.

``train_population`` trains independently seeded models per
(architecture, aligner) cell with per-setting counts:

    setting   HACM smart  HACM naive  HAEM smart  HAEM naive
    low            5           5           5           5
    medium         5           5           5           3
    high           3           3           3           2
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from hardmono import numcore as nc
from hardmono.align import ALIGNERS
from hardmono.corpus import Sample, build_vocab
from hardmono.decode import greedy_decode, post_filter
from hardmono.hacm import HacmModel, ModelConfig
from hardmono.haem import HaemModel
from hardmono.metrics import accuracy
from hardmono.numcore import Node
from hardmono.oracle import HACM, HAEM, hacm_oracle, haem_oracle

log = logging.getLogger(__name__)

SETTINGS = ("low", "medium", "high")

POPULATION_COUNTS = {
    "low": {(HACM, "smart"): 5, (HACM, "naive"): 5, (HAEM, "smart"): 5, (HAEM, "naive"): 5},
    "medium": {(HACM, "smart"): 5, (HACM, "naive"): 5, (HAEM, "smart"): 5, (HAEM, "naive"): 3},
    "high": {(HACM, "smart"): 3, (HACM, "naive"): 3, (HAEM, "smart"): 3, (HAEM, "naive"): 2},
}

CELL_ORDER = ((HACM, "smart"), (HACM, "naive"), (HAEM, "smart"), (HAEM, "naive"))


class TrainingError(RuntimeError):
    """Training cannot proceed (empty dev set, non-finite loss, ...)."""


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 50
    patience: int = 5          # epochs without a dev-accuracy improvement
    lr: float = 1e-3
    clip_norm: float = 5.0
    dropout: float = 0.3
    seed: int = 0
    setting: str = "low"

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.patience < 1:
            raise ValueError("epochs and patience must be at least 1")
        if self.setting not in SETTINGS:
            raise ValueError(f"unknown setting {self.setting!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout {self.dropout} outside [0, 1)")


class Adam:
    """Standard Adam over a parameter list, with global-norm clipping
    applied to the gradients before each update."""

    def __init__(self, params: list[Node], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8, clip_norm: float = 5.0):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.clip_norm = clip_norm
        self.t = 0
        self._m = [np.zeros_like(p.value) for p in params]
        self._v = [np.zeros_like(p.value) for p in params]

    def step(self) -> None:
        grads = [p.grad for p in self.params]
        if self.clip_norm > 0:
            total = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
            if total > self.clip_norm:
                scale = self.clip_norm / total
                grads = [g * scale for g in grads]
        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for p, m, v, g in zip(self.params, self._m, self._v, grads):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.value -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def predict(model: HacmModel | HaemModel, sample: Sample) -> str:
    """Greedy decode plus the runaway filter; the prediction every consumer
    (evaluation, ensembling, the CLI) sees."""
    result = greedy_decode(model, sample.lemma, sample.features)
    return post_filter(result, sample.lemma).prediction


def evaluate(model: HacmModel | HaemModel, samples: list[Sample]) -> float:
    """Exact-match accuracy of filtered greedy predictions."""
    if not samples:
        raise TrainingError("cannot evaluate on an empty set")
    if any(s.form is None for s in samples):
        raise TrainingError("evaluation set has unlabeled samples")
    return accuracy([predict(model, s) for s in samples], [s.form for s in samples])


@dataclass
class TrainResult:
    model: HacmModel | HaemModel
    arch: str
    aligner: str
    seed: int
    dev_accuracy: float
    history: list[dict] = field(repr=False)


def _oracle_fn(arch: str):
    return hacm_oracle if arch == HACM else haem_oracle


def train_model(arch: str, aligner: str, train: list[Sample], dev: list[Sample],
                sizes: ModelConfig, config: TrainConfig) -> TrainResult:
    """Train one model; returns it holding the best-dev-accuracy weights."""
    if arch not in (HACM, HAEM):
        raise ValueError(f"unknown architecture {arch!r}")
    if aligner not in ALIGNERS:
        raise ValueError(f"unknown aligner {aligner!r} (have {sorted(ALIGNERS)})")
    if not train:
        raise TrainingError("empty training set")
    if not dev:
        raise TrainingError("empty dev set")
    if any(s.form is None for s in train):
        raise TrainingError("training set has unlabeled samples")

    align = ALIGNERS[aligner]
    derive = _oracle_fn(arch)
    oracles = [(s, derive(align(s.lemma, s.form))) for s in train]

    vocab, feats = build_vocab(train)
    rng = np.random.default_rng(config.seed)
    model_config = replace(sizes, dropout=config.dropout)
    cls = HacmModel if arch == HACM else HaemModel
    model = cls(vocab, feats, model_config, rng)
    optimizer = Adam(model.params.nodes(), lr=config.lr, clip_norm=config.clip_norm)

    best_accuracy = -1.0
    best_state = None
    stale = 0
    history: list[dict] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(oracles))
        total_loss = 0.0
        for idx in order:
            sample, oracle = oracles[idx]
            model.params.zero_grads()
            loss = model.sample_loss(sample.lemma, sample.features, oracle, rng=rng)
            value = float(loss.value)
            if not np.isfinite(value):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch} on lemma {sample.lemma!r}"
                )
            nc.backward(loss)
            optimizer.step()
            total_loss += value
        dev_accuracy = evaluate(model, dev)
        history.append({"epoch": epoch, "train_loss": total_loss / len(oracles),
                        "dev_accuracy": dev_accuracy})
        log.info("%s/%s seed=%d epoch %d: loss %.4f dev acc %.4f",
                 arch, aligner, config.seed, epoch,
                 total_loss / len(oracles), dev_accuracy)
        if dev_accuracy > best_accuracy:
            best_accuracy = dev_accuracy
            best_state = model.params.state_dict()
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    model.params.load_state_dict(best_state)
    return TrainResult(model, arch, aligner, config.seed, best_accuracy, history)


def population_counts(setting: str) -> dict[tuple[str, str], int]:
    if setting not in POPULATION_COUNTS:
        raise ValueError(f"unknown setting {setting!r}")
    return dict(POPULATION_COUNTS[setting])


def train_population(train: list[Sample], dev: list[Sample], sizes: ModelConfig,
                     config: TrainConfig,
                     counts: dict[tuple[str, str], int] | None = None) -> list[TrainResult]:
    """Independently seeded models per (arch, aligner) cell; seeds are
    config.seed, config.seed+1, ... in cell-then-index order."""
    counts = population_counts(config.setting) if counts is None else counts
    results = []
    next_seed = config.seed
    for cell in CELL_ORDER:
        for _ in range(counts.get(cell, 0)):
            member_config = replace(config, seed=next_seed)
            results.append(train_model(cell[0], cell[1], train, dev, sizes, member_config))
            next_seed += 1
    return results

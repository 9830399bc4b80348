"""Prediction combination over a pool of trained models.

Two combinators, composed into seven numbered runs:

* majority vote: each member predicts a string per sample; the most common
  string wins, and a tied vote goes to the candidate backed by the member
  with the highest dev accuracy (then by earliest registration).
* MAX: pick whichever candidate system has the higher dev accuracy and use
  its predictions verbatim; equal accuracies go to the later candidate in
  the declared order (so a naive/smart tie resolves to smart).

ENSEMBLE_n votes over the n pool members with the best dev accuracy
(ties kept in registration order; n is capped at the pool size).

Runs over the four (architecture, aligner) cells:

    1  MAX  { E(HACM/naive), E(HACM/smart) }
    2  ENSEMBLE_7 over both HACM cells
    3  MAX  { E(HAEM/naive), E(HAEM/smart) }
    4  ENSEMBLE_7 over both HAEM cells
    5  MAX over the four per-cell ensembles
    6  ENSEMBLE_15 over all four cells
    7  MAX { run 5, run 6 }

where E(cell) is the majority vote over every model in the cell.  An
external line-aligned predictions file may join runs 5-7 as a pseudo-model
with a caller-supplied dev accuracy: one more MAX candidate in run 5, one
more voter in run 6.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from hardmono.align import ALIGNERS
from hardmono.corpus import Sample
from hardmono.metrics import accuracy
from hardmono.oracle import HACM, HAEM
from hardmono.train import predict

RUN_IDS = (1, 2, 3, 4, 5, 6, 7)
CELLS = ((HACM, "naive"), (HACM, "smart"), (HAEM, "naive"), (HAEM, "smart"))


class EnsembleError(ValueError):
    """Malformed pool or request (missing cell, misaligned predictions, ...)."""


@dataclass(frozen=True)
class PoolEntry:
    name: str
    arch: str
    aligner: str
    dev_accuracy: float
    order: int
    model: object

    def predict(self, samples: list[Sample]) -> list[str]:
        return [predict(self.model, s) for s in samples]


class ModelPool:
    """Registration-ordered collection of trained models keyed by
    (architecture, aligner) cell."""

    def __init__(self) -> None:
        self._entries: list[PoolEntry] = []

    def add(self, name: str, model, aligner: str, dev_accuracy: float) -> PoolEntry:
        if any(e.name == name for e in self._entries):
            raise EnsembleError(f"duplicate pool entry name {name!r}")
        if aligner not in ALIGNERS:
            raise EnsembleError(f"unknown aligner {aligner!r}")
        entry = PoolEntry(name, model.arch, aligner, dev_accuracy,
                          len(self._entries), model)
        self._entries.append(entry)
        return entry

    def entries(self) -> tuple[PoolEntry, ...]:
        return tuple(self._entries)

    def cell(self, arch: str, aligner: str) -> tuple[PoolEntry, ...]:
        return tuple(e for e in self._entries
                     if e.arch == arch and e.aligner == aligner)

    def __len__(self) -> int:
        return len(self._entries)


@dataclass(frozen=True)
class Member:
    """One voter: its predictions on each dataset plus tie-break metadata."""
    name: str
    dev_accuracy: float
    order: int
    dev: tuple[str, ...] | None   # None for an external file without dev rows
    test: tuple[str, ...]


@dataclass(frozen=True)
class ExternalRun:
    """Line-aligned predictions from outside the pool (one string per test
    sample, optionally per dev sample) with a supplied dev accuracy."""
    name: str
    dev_accuracy: float
    test: tuple[str, ...]
    dev: tuple[str, ...] | None = None


def vote(ballots: list[tuple[str, float, int]]) -> str:
    """Majority over (prediction, member dev accuracy, member order) ballots.
    Ties go to the candidate whose strongest supporter has the highest dev
    accuracy, then to the one with the earliest-registered supporter."""
    if not ballots:
        raise EnsembleError("vote over zero ballots")
    counts = Counter(p for p, _, _ in ballots)
    top = max(counts.values())
    tied = [p for p, c in counts.items() if c == top]
    if len(tied) == 1:
        return tied[0]

    def strength(candidate: str) -> tuple[float, int]:
        supporters = [(a, o) for p, a, o in ballots if p == candidate]
        return (max(a for a, _ in supporters), -min(o for _, o in supporters))

    return max(tied, key=strength)


@dataclass(frozen=True)
class System:
    """A named voting committee; a single member makes it a passthrough."""
    name: str
    members: tuple[Member, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise EnsembleError(f"system {self.name!r} has no members")

    def test_predictions(self) -> list[str]:
        rows = len(self.members[0].test)
        if any(len(m.test) != rows for m in self.members):
            raise EnsembleError(f"system {self.name!r} members disagree on test size")
        return [vote([(m.test[i], m.dev_accuracy, m.order) for m in self.members])
                for i in range(rows)]

    def dev_accuracy(self, dev_forms: list[str]) -> float:
        voters = [m for m in self.members if m.dev is not None]
        if not voters:
            if len(self.members) == 1:
                return self.members[0].dev_accuracy
            raise EnsembleError(f"system {self.name!r} has no dev predictions")
        rows = [vote([(m.dev[i], m.dev_accuracy, m.order) for m in voters])
                for i in range(len(dev_forms))]
        return accuracy(rows, dev_forms)


def ensemble_n(members: list[Member], n: int, name: str) -> System:
    """Vote of the n members with the best dev accuracy (all of them when
    the pool is smaller); dev-accuracy ties keep registration order."""
    if n < 1:
        raise EnsembleError(f"ensemble size {n} must be positive")
    ranked = sorted(members, key=lambda m: (-m.dev_accuracy, m.order))
    return System(name, tuple(ranked[:min(n, len(ranked))]))


def max_strategy(candidates: list[System], dev_forms: list[str]) -> System:
    """The candidate with the highest dev accuracy; equal accuracies pick
    the later candidate in the given order."""
    if not candidates:
        raise EnsembleError("MAX over zero candidates")
    best = candidates[0]
    best_acc = best.dev_accuracy(dev_forms)
    for candidate in candidates[1:]:
        acc = candidate.dev_accuracy(dev_forms)
        if acc >= best_acc:
            best, best_acc = candidate, acc
    return best


@dataclass(frozen=True)
class RunResult:
    run: int
    system: str                  # name of the system that produced the output
    dev_accuracy: float
    predictions: tuple[str, ...]  # one per test sample


def _gold_forms(dev: list[Sample]) -> list[str]:
    if not dev:
        raise EnsembleError("empty dev set")
    if any(s.form is None for s in dev):
        raise EnsembleError("dev set has unlabeled samples")
    return [s.form for s in dev]


def _members(pool: ModelPool, dev: list[Sample], test: list[Sample]) -> dict[str, Member]:
    out = {}
    for e in pool.entries():
        out[e.name] = Member(e.name, e.dev_accuracy, e.order,
                             tuple(e.predict(dev)), tuple(e.predict(test)))
    return out


def _cell_members(pool: ModelPool, members: dict[str, Member],
                  arch: str, aligner: str) -> list[Member]:
    entries = pool.cell(arch, aligner)
    if not entries:
        raise EnsembleError(f"pool has no {arch}/{aligner} models")
    return [members[e.name] for e in entries]


def run_strategy(run: int, pool: ModelPool, dev: list[Sample], test: list[Sample],
                 external: ExternalRun | None = None) -> RunResult:
    """Execute one numbered run against the pool and return its test
    predictions along with the dev accuracy that selected them."""
    if run not in RUN_IDS:
        raise EnsembleError(f"unknown run {run} (valid: 1-7)")
    if external is not None and run not in (5, 6, 7):
        raise EnsembleError("external predictions only join runs 5-7")
    gold = _gold_forms(dev)
    members = _members(pool, dev, test)

    def cell_vote(arch: str, aligner: str) -> System:
        return System(f"E({arch}/{aligner})",
                      tuple(_cell_members(pool, members, arch, aligner)))

    def cells(arch: str) -> list[Member]:
        return (_cell_members(pool, members, arch, "naive")
                + _cell_members(pool, members, arch, "smart"))

    external_member = None
    if external is not None:
        if len(external.test) != len(test):
            raise EnsembleError(
                f"external predictions have {len(external.test)} rows "
                f"for {len(test)} test samples")
        if external.dev is not None and len(external.dev) != len(dev):
            raise EnsembleError(
                f"external dev predictions have {len(external.dev)} rows "
                f"for {len(dev)} dev samples")
        external_member = Member(external.name, external.dev_accuracy,
                                 len(pool), external.dev, external.test)

    if run == 1:
        chosen = max_strategy([cell_vote(HACM, "naive"), cell_vote(HACM, "smart")], gold)
    elif run == 2:
        chosen = ensemble_n(cells(HACM), 7, "ENSEMBLE_7(HACM)")
    elif run == 3:
        chosen = max_strategy([cell_vote(HAEM, "naive"), cell_vote(HAEM, "smart")], gold)
    elif run == 4:
        chosen = ensemble_n(cells(HAEM), 7, "ENSEMBLE_7(HAEM)")
    else:
        candidates = [cell_vote(a, al) for a, al in CELLS]
        pool_members = cells(HACM) + cells(HAEM)
        if external_member is not None:
            candidates.append(System(external_member.name, (external_member,)))
            pool_members = pool_members + [external_member]
        run5 = max_strategy(candidates, gold)
        run6 = ensemble_n(pool_members, 15, "ENSEMBLE_15")
        if run == 5:
            chosen = run5
        elif run == 6:
            chosen = run6
        else:
            chosen = max_strategy([run5, run6], gold)

    return RunResult(run, chosen.name, chosen.dev_accuracy(gold),
                     tuple(chosen.test_predictions()))

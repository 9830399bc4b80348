"""Monotone character alignment between lemma and inflected form.

Both aligners emit an ordered list of 1-to-1, 1-to-0, and 0-to-1 character
pairs whose non-empty sides spell out the lemma and the form in order.
"""

from __future__ import annotations

from dataclasses import dataclass

EMPTY = ""


@dataclass(frozen=True)
class AlignmentPair:
    """One aligned pair; either side may be EMPTY but not both."""

    lemma_char: str
    form_char: str

    def __post_init__(self) -> None:
        if not self.lemma_char and not self.form_char:
            raise ValueError("alignment pair with both sides empty")


@dataclass(frozen=True)
class Alignment:
    pairs: tuple[AlignmentPair, ...]

    def __post_init__(self) -> None:
        if not self.pairs:
            raise ValueError("empty alignment")

    def lemma(self) -> str:
        return "".join(p.lemma_char for p in self.pairs)

    def form(self) -> str:
        return "".join(p.form_char for p in self.pairs)

    def cost(self) -> int:
        """Unit-cost edit total: 0 per exact match, 1 per sub/ins/del."""
        return sum(1 for p in self.pairs if p.lemma_char != p.form_char)


def naive_align(lemma: str, form: str) -> Alignment:
    """Positional pairing: 1-to-1 up to the shorter length, then the
    leftover characters of the longer string unaligned."""
    if not lemma or not form:
        raise ValueError("naive_align requires nonempty strings")
    k = min(len(lemma), len(form))
    pairs = [AlignmentPair(lemma[i], form[i]) for i in range(k)]
    pairs += [AlignmentPair(c, EMPTY) for c in lemma[k:]]
    pairs += [AlignmentPair(EMPTY, c) for c in form[k:]]
    return Alignment(tuple(pairs))


def smart_align(lemma: str, form: str) -> Alignment:
    """Minimum-edit-distance monotone alignment (match 0, sub/ins/del 1)
    with a deterministic backtrace.

    Backtrace preference at each cell, among moves on a minimum-cost
    path: exact match, then deletion, then substitution, then insertion.
    Taking deletions before substitutions while walking right-to-left
    pushes the 1-to-1 pairs toward the front of the string.
    """
    if not lemma or not form:
        raise ValueError("smart_align requires nonempty strings")
    n, m = len(lemma), len(form)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        row, above = dist[i], dist[i - 1]
        ci = lemma[i - 1]
        for j in range(1, m + 1):
            diag = above[j - 1] + (ci != form[j - 1])
            row[j] = min(diag, above[j] + 1, row[j - 1] + 1)

    pairs: list[AlignmentPair] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and lemma[i - 1] == form[j - 1] and dist[i][j] == dist[i - 1][j - 1]:
            pairs.append(AlignmentPair(lemma[i - 1], form[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            pairs.append(AlignmentPair(lemma[i - 1], EMPTY))
            i -= 1
        elif i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + 1:
            pairs.append(AlignmentPair(lemma[i - 1], form[j - 1]))
            i, j = i - 1, j - 1
        else:
            pairs.append(AlignmentPair(EMPTY, form[j - 1]))
            j -= 1
    pairs.reverse()
    return Alignment(tuple(pairs))


ALIGNERS = {"naive": naive_align, "smart": smart_align}


def render(alignment: Alignment) -> str:
    """Space-separated "l:f" pairs with "_" for the empty side."""
    return " ".join(
        f"{p.lemma_char or '_'}:{p.form_char or '_'}" for p in alignment.pairs
    )

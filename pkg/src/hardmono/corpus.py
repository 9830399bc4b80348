"""Dataset parsing and alphabet construction.

Data files are UTF-8 text, one sample per line, tab-separated:
``lemma<TAB>form<TAB>feat1;feat2;...`` for train/dev and
``lemma<TAB>feat1;feat2;...`` for unlabeled test input.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"


class DataError(ValueError):
    """Malformed input data (bad column count, empty lemma, ...)."""


@dataclass(frozen=True)
class Sample:
    """One lemma / feature-set / inflected-form triple.

    ``features`` keeps the file order; consumers that need set semantics
    treat it as one. ``form`` is None for unlabeled test lines.
    """

    lemma: str
    features: tuple[str, ...]
    form: str | None = None

    def __post_init__(self) -> None:
        if not self.lemma:
            raise DataError("empty lemma")
        if not self.features:
            raise DataError("empty feature set")
        if self.form == "":
            raise DataError("empty form (use None for unlabeled samples)")


def parse_dataset(path: str, has_form: bool = True) -> list[Sample]:
    """Read one Sample per line; raises DataError with the line number."""
    samples = []
    expected = 3 if has_form else 2
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != expected:
                raise DataError(
                    f"{path}:{lineno}: expected {expected} tab-separated columns, got {len(cols)}"
                )
            lemma = cols[0]
            if not lemma:
                raise DataError(f"{path}:{lineno}: empty lemma")
            feats = tuple(t for t in cols[-1].split(";") if t)
            if not feats:
                raise DataError(f"{path}:{lineno}: empty feature set")
            form = cols[1] if has_form else None
            samples.append(Sample(lemma=lemma, features=feats, form=form))
    return samples


def write_dataset(path: str, samples: list[Sample], has_form: bool = True) -> None:
    """Inverse of parse_dataset (same column layout, LF endings)."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s in samples:
            feats = ";".join(s.features)
            if has_form:
                f.write(f"{s.lemma}\t{s.form}\t{feats}\n")
            else:
                f.write(f"{s.lemma}\t{feats}\n")


@dataclass(frozen=True)
class CharVocabulary:
    """Training character inventory with BOS/EOS/UNK sentinels.

    Ids are dense: 0=BOS, 1=EOS, 2=UNK, then ``chars`` in order. The char
    order is sorted at build time and preserved verbatim through
    serialization, so ids are stable across a save/load round trip.
    """

    chars: tuple[str, ...]

    BOS_ID = 0
    EOS_ID = 1
    UNK_ID = 2
    NUM_SPECIALS = 3

    def __post_init__(self) -> None:
        if len(set(self.chars)) != len(self.chars):
            raise ValueError("duplicate characters in vocabulary")
        for sentinel in (BOS, EOS, UNK):
            if sentinel in self.chars:
                raise ValueError(f"sentinel {sentinel!r} collides with a real character")

    def __len__(self) -> int:
        return self.NUM_SPECIALS + len(self.chars)

    def __contains__(self, char: str) -> bool:
        return char in self._index

    @property
    def _index(self) -> dict[str, int]:
        idx = self.__dict__.get("_index_cache")
        if idx is None:
            idx = {c: self.NUM_SPECIALS + i for i, c in enumerate(self.chars)}
            self.__dict__["_index_cache"] = idx
        return idx

    _SENTINEL_IDS = {BOS: BOS_ID, EOS: EOS_ID, UNK: UNK_ID}

    def id_of(self, char: str) -> int:
        """Id for a character or sentinel; OOV maps to UNK_ID, not an error."""
        sid = self._SENTINEL_IDS.get(char)
        if sid is not None:
            return sid
        return self._index.get(char, self.UNK_ID)

    def char_of(self, char_id: int) -> str:
        if char_id == self.BOS_ID:
            return BOS
        if char_id == self.EOS_ID:
            return EOS
        if char_id == self.UNK_ID:
            return UNK
        return self.chars[char_id - self.NUM_SPECIALS]


@dataclass(frozen=True)
class FeatureAlphabet:
    """Sorted feature-tag inventory plus one reserved UNK slot.

    Slot layout is ``features`` in order followed by the UNK slot, so
    vectors built over the alphabet have ``num_slots`` entries. Unseen
    test tags map to the UNK slot and are logged once per tag.
    """

    features: tuple[str, ...]
    _warned: set = field(default_factory=set, repr=False, compare=False)

    def __post_init__(self) -> None:
        if list(self.features) != sorted(set(self.features)):
            raise ValueError("feature alphabet must be sorted and duplicate-free")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def num_slots(self) -> int:
        return len(self.features) + 1

    @property
    def unk_slot(self) -> int:
        return len(self.features)

    def slot_of(self, feature: str) -> int:
        idx = self.__dict__.get("_index_cache")
        if idx is None:
            idx = {f: i for i, f in enumerate(self.features)}
            self.__dict__["_index_cache"] = idx
        slot = idx.get(feature)
        if slot is None:
            if feature not in self._warned:
                self._warned.add(feature)
                log.warning("unseen feature tag %r mapped to UNK slot", feature)
            return self.unk_slot
        return slot

    def slots_of(self, features: tuple[str, ...]) -> tuple[int, ...]:
        return tuple(sorted({self.slot_of(f) for f in features}))


def build_vocab(train: list[Sample]) -> tuple[CharVocabulary, FeatureAlphabet]:
    """Union of characters (lemmas and forms) and of feature tags, sorted."""
    if not train:
        raise ValueError("empty training set")
    chars: set[str] = set()
    feats: set[str] = set()
    for s in train:
        chars.update(s.lemma)
        if s.form is not None:
            chars.update(s.form)
        feats.update(s.features)
    return CharVocabulary(tuple(sorted(chars))), FeatureAlphabet(tuple(sorted(feats)))

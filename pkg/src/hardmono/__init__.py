"""Hard monotonic attention string transducers for morphological inflection.

Two architectures over character-level edit programs: a copy-mixture
encoder-decoder (HACM) and a state-transition system over explicit edit
actions (HAEM), plus the aligners, oracles, training loop, greedy decoder,
ensembling strategies, and evaluation metrics they need.
"""

from hardmono.corpus import Sample, CharVocabulary, FeatureAlphabet, parse_dataset, build_vocab
from hardmono.align import AlignmentPair, Alignment, naive_align, smart_align
from hardmono.oracle import (
    Action,
    OracleSequence,
    hacm_oracle,
    haem_oracle,
    normalize,
    replay,
    replay_with_trace,
)
from hardmono.metrics import accuracy, levenshtein

__all__ = [
    "Sample",
    "CharVocabulary",
    "FeatureAlphabet",
    "parse_dataset",
    "build_vocab",
    "AlignmentPair",
    "Alignment",
    "naive_align",
    "smart_align",
    "Action",
    "OracleSequence",
    "hacm_oracle",
    "haem_oracle",
    "normalize",
    "replay",
    "replay_with_trace",
    "accuracy",
    "levenshtein",
]

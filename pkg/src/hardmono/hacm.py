"""Hard monotonic attention model with a copy mechanism (HACM).

A bidirectional encoder reads the BOS + lemma + EOS frame; a decoder LSTM
consumes [E(prev action); h_i; f] and emits a distribution over
WRITE_c / STEP / BOS / EOS that mixes a generation softmax with a point
mass on copying the attended symbol:

    P_t(a) = w * P_gen(a) + (1 - w) * 1{a = attended symbol}

with w a sigmoid gate of [h_i; f; E(prev); s_t]. STEP moves the attention
index; WRITE emits without moving it. An attended character unseen in
training has no WRITE id, so decoding copies it outright with probability
one and then treats STEP as the previous action.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from hardmono import numcore as nc
from hardmono.corpus import CharVocabulary, FeatureAlphabet
from hardmono.nn import BiEncoder, EmbeddingTable, Linear, LstmCell, ParamSet
from hardmono.numcore import Node
from hardmono.oracle import HACM, ActionCodec, OracleSequence


@dataclass(frozen=True)
class ModelConfig:
    """Sizes shared by both architectures; the variant flag only affects
    the edit-action model."""

    hidden: int = 100        # H: LSTM hidden size (encoder outputs are 2H)
    embed: int = 100         # E: character and action embedding size
    feat_embed: int = 20     # F: per-feature embedding size (mixture model)
    variant: str = "extended"  # edit-action state input: basic | extended
    dropout: float = 0.3     # decoder-input dropout rate during training

    def __post_init__(self) -> None:
        if min(self.hidden, self.embed, self.feat_embed) < 1:
            raise ValueError("model sizes must be positive")
        if self.variant not in ("basic", "extended"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout {self.dropout} outside [0, 1)")


@dataclass(frozen=True)
class HacmContext:
    """Per-sample constants: encoded frame, feature vector, mode."""

    lemma: str
    frame: tuple[Node, ...]      # h_0 .. h_{n+1} over BOS + lemma + EOS
    feat_vec: Node
    training: bool
    rng: np.random.Generator | None

    @property
    def n(self) -> int:
        return len(self.lemma)


@dataclass(frozen=True)
class HacmState:
    """Decoder state after consuming the previous action."""

    ctx: HacmContext = field(repr=False)
    i: int
    lstm: tuple[Node, Node]
    s: Node | None           # decoder output s_t; None before the first step
    prev_id: int | None
    prev_emb: Node | None


class HacmModel:
    arch = HACM

    def __init__(self, vocab: CharVocabulary, feats: FeatureAlphabet,
                 config: ModelConfig, rng: np.random.Generator):
        self.vocab = vocab
        self.feats = feats
        self.config = config
        self.codec = ActionCodec(HACM, vocab.chars)
        h, e, f = config.hidden, config.embed, config.feat_embed
        self.feat_width = f * feats.num_slots

        ps = ParamSet()
        self.char_emb = EmbeddingTable(ps, "char_emb", len(vocab), e, rng)
        self.act_emb = EmbeddingTable(ps, "act_emb", self.codec.size, e, rng)
        self.feat_emb = EmbeddingTable(ps, "feat_emb", feats.num_slots, f, rng)
        self.encoder = BiEncoder(ps, "enc", e, h, rng)
        self.decoder = LstmCell(ps, "dec", e + 2 * h + self.feat_width, h, rng)
        self.gen = Linear(ps, "gen", h, self.codec.size, rng)
        self.gate = Linear(ps, "gate", 2 * h + self.feat_width + e + h, 1, rng)
        self.params = ps

    # --- per-sample setup ---

    def feature_vector(self, features: tuple[str, ...]) -> Node:
        """Concatenation of one F-dim slot per alphabet entry (UNK slot
        included): the embedding row when the feature is present, zeros
        when absent."""
        present = set(self.feats.slots_of(features))
        zero = nc.constant(np.zeros(self.config.feat_embed))
        parts = [self.feat_emb(s) if s in present else zero
                 for s in range(self.feats.num_slots)]
        return nc.concat(parts)

    def start(self, lemma: str, features: tuple[str, ...], training: bool = False,
              rng: np.random.Generator | None = None) -> HacmState:
        if not lemma:
            raise ValueError("empty lemma")
        if training and rng is None:
            raise ValueError("training mode needs a dropout generator")
        ids = [self.vocab.BOS_ID] + [self.vocab.id_of(c) for c in lemma] + [self.vocab.EOS_ID]
        frame = tuple(self.encoder([self.char_emb(i) for i in ids]))
        ctx = HacmContext(lemma, frame, self.feature_vector(features), training, rng)
        return HacmState(ctx, 0, self.decoder.initial_state(), None, None, None)

    # --- one transition ---

    def step(self, state: HacmState, action_id: int) -> HacmState:
        """Consume the action emitted at the previous time step: move the
        attention index if it was STEP, then advance the decoder LSTM."""
        ctx = state.ctx
        i = state.i
        if self.codec.action_of(action_id).tag == "STEP":
            i += 1
            if i > ctx.n + 1:
                raise ValueError(f"attention index {i} past frame end (n={ctx.n})")
        emb = self.act_emb(action_id)
        x = nc.concat([emb, ctx.frame[i], ctx.feat_vec])
        if ctx.training and self.config.dropout > 0:
            x = nc.dropout(x, self.config.dropout, ctx.rng)
        s, lstm = self.decoder.step(x, state.lstm)
        return replace(state, i=i, lstm=lstm, s=s, prev_id=action_id, prev_emb=emb)

    def copy_action_id(self, state: HacmState) -> int | None:
        """Action id equivalent to copying the attended frame symbol; None
        when the attended lemma character was never seen in training."""
        i, ctx = state.i, state.ctx
        if i == 0:
            return self.codec.id_of(self.codec.specials[1])  # BOS
        if i == ctx.n + 1:
            return self.codec.id_of(self.codec.specials[2])  # EOS
        return self.codec.write_id(ctx.lemma[i - 1])

    def attended_oov(self, state: HacmState) -> str | None:
        """The attended character when it is out of vocabulary, else None."""
        if 1 <= state.i <= state.ctx.n and self.copy_action_id(state) is None:
            return state.ctx.lemma[state.i - 1]
        return None

    def distribution(self, state: HacmState) -> Node:
        """Copy mixture over the action inventory. The attended symbol must
        be in vocabulary; decoding handles the out-of-vocabulary branch by
        copying outright, without consulting a distribution."""
        if state.s is None:
            raise ValueError("distribution before the first decoder step")
        copy_id = self.copy_action_id(state)
        if copy_id is None:
            raise ValueError(
                f"attended character {state.ctx.lemma[state.i - 1]!r} has no action id"
            )
        p_gen = nc.softmax(self.gen(state.s))
        gate_in = nc.concat([state.ctx.frame[state.i], state.ctx.feat_vec,
                             state.prev_emb, state.s])
        w = nc.sigmoid(nc.pick(self.gate(gate_in), 0))
        point = np.zeros(self.codec.size)
        point[copy_id] = 1.0
        return nc.add(nc.scale(w, p_gen),
                      nc.scale(nc.sub(nc.constant(1.0), w), nc.constant(point)))

    # --- training objective ---

    def sample_loss(self, lemma: str, features: tuple[str, ...],
                    oracle: OracleSequence, rng: np.random.Generator | None = None,
                    training: bool = True) -> Node:
        """Teacher-forced negative log-likelihood, summed over the predicted
        actions (everything after the initial BOS)."""
        if oracle.inventory != HACM or not oracle.actions or oracle.actions[0].tag != "BOS":
            raise ValueError("oracle must be a BOS-led write/step sequence")
        state = self.start(lemma, features, training=training, rng=rng)
        prev = self.codec.id_of(oracle.actions[0])
        losses = []
        for action in oracle.actions[1:]:
            state = self.step(state, prev)
            target = self.codec.id_of(action)
            losses.append(nc.neg(nc.log(nc.pick(self.distribution(state), target))))
            prev = target
        return nc.addn(losses)

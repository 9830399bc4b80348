"""Neural state-transition system over edit actions (HAEM).

A bidirectional encoder reads the bare lemma; at each step the model
scores COPY / DELETE / WRITE_c / STOP from

    s_t = ReLU(W . [y; h_i; f] + b)          (basic)
    s_t = ReLU(W . [y; h_i; f; a; d] + b)    (extended, default)

where y tracks the emitted output prefix (an LSTM over written and copied
characters), a the action history, and d the run of characters deleted
since the last WRITE (that LSTM resets to its learned initial state on
every WRITE). COPY and DELETE advance the attention index i over
positions 1..n+1 and are masked to probability zero at i = n+1, where a
learned end-of-lemma vector stands in for h_i.

COPY appends the attended lemma character verbatim, so characters unseen
in training pass through untouched; their embedding feeds are the UNK row.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from hardmono import numcore as nc
from hardmono.corpus import CharVocabulary, FeatureAlphabet
from hardmono.hacm import ModelConfig
from hardmono.nn import BiEncoder, EmbeddingTable, Linear, LstmCell, ParamSet
from hardmono.numcore import Node
from hardmono.oracle import HAEM, Action, ActionCodec, OracleSequence


@dataclass(frozen=True)
class HaemContext:
    lemma: str
    encoded: tuple[Node, ...]    # h_1 .. h_n over the bare lemma
    end_vec: Node                # stands in for h_{n+1}
    feat_vec: Node               # multi-hot indicator, constant
    training: bool
    rng: np.random.Generator | None

    @property
    def n(self) -> int:
        return len(self.lemma)

    def h_at(self, i: int) -> Node:
        if not 1 <= i <= self.n + 1:
            raise ValueError(f"attention index {i} outside [1, {self.n + 1}]")
        return self.encoded[i - 1] if i <= self.n else self.end_vec


@dataclass(frozen=True)
class HaemState:
    ctx: HaemContext = field(repr=False)
    i: int
    y: tuple[Node, tuple[Node, Node]]            # (output, lstm state) of LSTM over emitted chars
    a: tuple[Node, tuple[Node, Node]] | None     # action-history LSTM (extended)
    d: tuple[Node, tuple[Node, Node]] | None     # deleted-run LSTM (extended)
    out: str = ""
    done: bool = False


class HaemModel:
    arch = HAEM

    COPY_ID, DELETE_ID, STOP_ID = 0, 1, 2

    def __init__(self, vocab: CharVocabulary, feats: FeatureAlphabet,
                 config: ModelConfig, rng: np.random.Generator):
        self.vocab = vocab
        self.feats = feats
        self.config = config
        self.codec = ActionCodec(HAEM, vocab.chars)
        self.extended = config.variant == "extended"
        h, e = config.hidden, config.embed

        ps = ParamSet()
        self.char_emb = EmbeddingTable(ps, "char_emb", len(vocab), e, rng)
        self.encoder = BiEncoder(ps, "enc", e, h, rng)
        self.end_vec = ps.uniform("end_of_lemma", (2 * h,), rng)
        self.lstm_y = LstmCell(ps, "y", e, h, rng)
        if self.extended:
            self.act_emb = EmbeddingTable(ps, "act_emb", self.codec.size, e, rng)
            self.lstm_a = LstmCell(ps, "a", e, h, rng)
            self.lstm_d = LstmCell(ps, "d", e, h, rng)
        state_in = h + 2 * h + feats.num_slots + (2 * h if self.extended else 0)
        self.state_proj = Linear(ps, "state", state_in, h, rng)
        self.act_out = Linear(ps, "act", h, self.codec.size, rng)
        self.params = ps

    # --- per-sample setup ---

    def feature_indicator(self, features: tuple[str, ...]) -> Node:
        """Multi-hot vector over the alphabet slots (UNK slot included)."""
        vec = np.zeros(self.feats.num_slots)
        for slot in self.feats.slots_of(features):
            vec[slot] = 1.0
        return nc.constant(vec)

    def start(self, lemma: str, features: tuple[str, ...], training: bool = False,
              rng: np.random.Generator | None = None) -> HaemState:
        if not lemma:
            raise ValueError("empty lemma")
        if training and rng is None:
            raise ValueError("training mode needs a dropout generator")
        encoded = tuple(self.encoder([self.char_emb(self.vocab.id_of(c)) for c in lemma]))
        ctx = HaemContext(lemma, encoded, self.end_vec, self.feature_indicator(features),
                          training, rng)
        y0 = (self.lstm_y.h0, self.lstm_y.initial_state())
        a0 = (self.lstm_a.h0, self.lstm_a.initial_state()) if self.extended else None
        d0 = (self.lstm_d.h0, self.lstm_d.initial_state()) if self.extended else None
        return HaemState(ctx, 1, y0, a0, d0)

    # --- scoring ---

    def valid_mask(self, state: HaemState) -> np.ndarray:
        """WRITE and STOP are always available; COPY and DELETE only while
        the attention index is still on the lemma."""
        valid = np.ones(self.codec.size, dtype=bool)
        if state.i > state.ctx.n:
            valid[self.COPY_ID] = False
            valid[self.DELETE_ID] = False
        return valid

    def distribution(self, state: HaemState) -> Node:
        if state.done:
            raise ValueError("distribution after STOP")
        ctx = state.ctx
        parts = [state.y[0], ctx.h_at(state.i), ctx.feat_vec]
        if self.extended:
            parts += [state.a[0], state.d[0]]
        x = nc.concat(parts)
        if ctx.training and self.config.dropout > 0:
            x = nc.dropout(x, self.config.dropout, ctx.rng)
        s = nc.relu(self.state_proj(x))
        return nc.masked_softmax(self.act_out(s), self.valid_mask(state))

    # --- transitions ---

    def _feed(self, cell: LstmCell, carried, emb: Node):
        out, lstm_state = cell.step(emb, carried[1])
        return out, lstm_state

    def apply(self, state: HaemState, action: Action) -> HaemState:
        """Execute one action: update output, attention index, and the
        tracking LSTMs. Invalid actions (COPY/DELETE past the lemma) are
        errors; callers decode against valid_mask."""
        if state.done:
            raise ValueError(f"action {action!r} after STOP")
        ctx = state.ctx
        i, y, d, out = state.i, state.y, state.d, state.out

        if action.tag in ("COPY", "DELETE"):
            if i > ctx.n:
                raise ValueError(f"{action.tag} at i={i} past lemma end (n={ctx.n})")
            char = ctx.lemma[i - 1]
            emb = self.char_emb(self.vocab.id_of(char))
            if action.tag == "COPY":
                out += char
                y = self._feed(self.lstm_y, y, emb)
            elif self.extended:
                d = self._feed(self.lstm_d, d, emb)
            i += 1
        elif action.tag == "WRITE":
            out += action.char
            y = self._feed(self.lstm_y, y, self.char_emb(self.vocab.id_of(action.char)))
            if self.extended:
                d = (self.lstm_d.h0, self.lstm_d.initial_state())
        done = action.tag == "STOP"

        a = state.a
        if self.extended:
            a = self._feed(self.lstm_a, a, self.act_emb(self.codec.id_of(action)))
        return replace(state, i=i, y=y, a=a, d=d, out=out, done=done)

    # --- training objective ---

    def sample_loss(self, lemma: str, features: tuple[str, ...],
                    oracle: OracleSequence, rng: np.random.Generator | None = None,
                    training: bool = True) -> Node:
        """Teacher-forced negative log-likelihood over every oracle action,
        with the validity mask applied at each step."""
        if oracle.inventory != HAEM or not oracle.actions or oracle.actions[-1].tag != "STOP":
            raise ValueError("oracle must be a STOP-terminated edit sequence")
        state = self.start(lemma, features, training=training, rng=rng)
        losses = []
        for action in oracle.actions:
            target = self.codec.id_of(action)
            losses.append(nc.neg(nc.log(nc.pick(self.distribution(state), target))))
            state = self.apply(state, action)
        return nc.addn(losses)

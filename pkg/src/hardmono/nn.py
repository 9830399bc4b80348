"""Neural layers: parameter registry, embeddings, linear maps, LSTM cells,
and a bidirectional encoder.

All weights initialize uniform(-0.1, 0.1) from the caller's generator;
biases start at zero except the LSTM forget gate, which starts at +1 so
early training doesn't wash out the cell state.
"""

from __future__ import annotations

import numpy as np

from hardmono import numcore as nc
from hardmono.numcore import Node

INIT_SCALE = 0.1


class ParamSet:
    """Ordered name -> parameter registry for one model.

    The ordering is creation order and is part of the checkpoint contract:
    state dicts serialize and load by name, and the optimizer walks
    parameters in this order.
    """

    def __init__(self) -> None:
        self._params: dict[str, Node] = {}

    def _add(self, name: str, value: np.ndarray) -> Node:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        node = nc.param(value, name=name)
        self._params[name] = node
        return node

    def uniform(self, name: str, shape: tuple[int, ...], rng: np.random.Generator) -> Node:
        return self._add(name, rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape))

    def zeros(self, name: str, shape: tuple[int, ...]) -> Node:
        return self._add(name, np.zeros(shape))

    def __getitem__(self, name: str) -> Node:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def nodes(self) -> list[Node]:
        return list(self._params.values())

    def count(self) -> int:
        return sum(p.value.size for p in self._params.values())

    def zero_grads(self) -> None:
        for p in self._params.values():
            p.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.value.copy() for name, p in self._params.items()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(state)
        extra = set(state) - set(self._params)
        if missing or extra:
            raise ValueError(f"state dict mismatch: missing {sorted(missing)}, extra {sorted(extra)}")
        for name, p in self._params.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.value.shape:
                raise ValueError(
                    f"parameter {name!r}: checkpoint shape {value.shape} vs model {p.value.shape}"
                )
            p.value = value.copy()
            p.zero_grad()


class EmbeddingTable:
    """One learned vector per symbol id; ids must already be in range."""

    def __init__(self, params: ParamSet, name: str, num_symbols: int, dim: int,
                 rng: np.random.Generator):
        if num_symbols < 1 or dim < 1:
            raise ValueError(f"embedding table {name!r} needs positive sizes")
        self.num_symbols = num_symbols
        self.dim = dim
        self.table = params.uniform(name, (num_symbols, dim), rng)

    def __call__(self, symbol_id: int) -> Node:
        return nc.row(self.table, symbol_id)


class Linear:
    def __init__(self, params: ParamSet, name: str, in_size: int, out_size: int,
                 rng: np.random.Generator):
        self.in_size = in_size
        self.out_size = out_size
        self.w = params.uniform(f"{name}.w", (out_size, in_size), rng)
        self.b = params.zeros(f"{name}.b", (out_size,))

    def __call__(self, x: Node) -> Node:
        return nc.add(nc.matvec(self.w, x), self.b)


class LstmCell:
    """Single-layer LSTM with one fused weight matrix.

    Gate layout along the 4H axis is input, forget, output, candidate.
    The initial hidden and cell states are learned parameters.
    """

    def __init__(self, params: ParamSet, name: str, input_size: int, hidden_size: int,
                 rng: np.random.Generator):
        self.input_size = input_size
        self.hidden_size = hidden_size
        h = hidden_size
        self.w = params.uniform(f"{name}.w", (4 * h, input_size + h), rng)
        bias = np.zeros(4 * h)
        bias[h:2 * h] = 1.0
        self.b = params._add(f"{name}.b", bias)
        self.h0 = params.uniform(f"{name}.h0", (h,), rng)
        self.c0 = params.uniform(f"{name}.c0", (h,), rng)

    def initial_state(self) -> tuple[Node, Node]:
        return self.h0, self.c0

    def step(self, x: Node, state: tuple[Node, Node]) -> tuple[Node, tuple[Node, Node]]:
        if x.value.shape != (self.input_size,):
            raise ValueError(
                f"lstm step: input shape {x.value.shape} vs expected ({self.input_size},)"
            )
        h_prev, c_prev = state
        hs = self.hidden_size
        z = nc.add(nc.matvec(self.w, nc.concat([x, h_prev])), self.b)
        i = nc.sigmoid(nc.vslice(z, 0, hs))
        f = nc.sigmoid(nc.vslice(z, hs, 2 * hs))
        o = nc.sigmoid(nc.vslice(z, 2 * hs, 3 * hs))
        g = nc.tanh(nc.vslice(z, 3 * hs, 4 * hs))
        c = nc.add(nc.mul(f, c_prev), nc.mul(i, g))
        h = nc.mul(o, nc.tanh(c))
        return h, (h, c)

    def run(self, xs: list[Node]) -> list[Node]:
        """Outputs for a whole sequence, starting from the learned state."""
        state = self.initial_state()
        outs = []
        for x in xs:
            out, state = self.step(x, state)
            outs.append(out)
        return outs

    @staticmethod
    def param_count(input_size: int, hidden_size: int) -> int:
        """4H(in+H) weights + 4H biases + 2H learned initial state."""
        return 4 * hidden_size * (input_size + hidden_size) + 4 * hidden_size + 2 * hidden_size


class BiEncoder:
    """Bidirectional single-layer LSTM; position i sees the whole input and
    yields [forward_i; backward_i] of dimension 2H."""

    def __init__(self, params: ParamSet, name: str, input_size: int, hidden_size: int,
                 rng: np.random.Generator):
        self.hidden_size = hidden_size
        self.fwd = LstmCell(params, f"{name}.fwd", input_size, hidden_size, rng)
        self.bwd = LstmCell(params, f"{name}.bwd", input_size, hidden_size, rng)

    def __call__(self, xs: list[Node]) -> list[Node]:
        if not xs:
            raise ValueError("encoder needs a nonempty input sequence")
        fwd_out = self.fwd.run(xs)
        bwd_out = self.bwd.run(list(reversed(xs)))[::-1]
        return [nc.concat([f, b]) for f, b in zip(fwd_out, bwd_out)]

    @staticmethod
    def param_count(input_size: int, hidden_size: int) -> int:
        return 2 * LstmCell.param_count(input_size, hidden_size)

"""Recurrent network trained with backpropagation through time.

Units are logistic; loss is half the summed squared error over output units
and time steps. Every connection carries an integer delay, so the unfolded
network reuses one weight per connection at every time step.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .emotion import N_GROUPS
from .mstn import N_STATES, check_stochastic

log = logging.getLogger(__name__)

N_INPUTS = N_GROUPS + N_STATES  # emotion groups then one-hot current state
DEFAULT_HIDDEN = 14
DIVERGENCE_LOSS = 1e6


class TopologyError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Topology:
    n_in: int
    n_hidden: int
    n_out: int = N_STATES
    connections: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self):
        if self.n_out != N_STATES:
            raise TopologyError(f"network must have {N_STATES} outputs, got {self.n_out}")
        if self.n_in < 1 or self.n_hidden < 0:
            raise TopologyError("need at least one input and a nonnegative hidden size")
        conns = tuple(sorted({(int(t), int(s), int(d)) for t, s, d in self.connections}))
        if len(conns) != len(self.connections):
            raise TopologyError("duplicate connection")
        n = self.n_neurons
        for t, s, d in conns:
            if not (self.n_in <= t < n and 0 <= s < n):
                raise TopologyError(f"connection {(t, s, d)} out of range")
            if d < 0:
                raise TopologyError(f"connection {(t, s, d)} has negative delay")
            if s < self.n_in and d > 0:
                raise TopologyError(f"delayed connection from input {(t, s, d)} is not supported")
        object.__setattr__(self, "connections", conns)
        self.order  # noqa: B018 - validates zero-delay acyclicity

    @classmethod
    def mstn(cls, n_hidden: int = DEFAULT_HIDDEN) -> "Topology":
        """16 inputs, ``n_hidden`` units with one-step self-recurrence, 7 outputs.

        Inputs feed hidden and output units directly; hidden units feed outputs.
        """
        n_in, n_out = N_INPUTS, N_STATES
        hidden = range(n_in, n_in + n_hidden)
        outputs = range(n_in + n_hidden, n_in + n_hidden + n_out)
        conns = [(h, i, 0) for h in hidden for i in range(n_in)]
        conns += [(h, g, 1) for h in hidden for g in hidden]
        conns += [(o, h, 0) for o in outputs for h in hidden]
        conns += [(o, i, 0) for o in outputs for i in range(n_in)]
        return cls(n_in, n_hidden, n_out, tuple(conns))

    @property
    def n_neurons(self) -> int:
        return self.n_in + self.n_hidden + self.n_out

    @property
    def output_slice(self) -> slice:
        return slice(self.n_in + self.n_hidden, self.n_neurons)

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        c = np.array(self.connections, dtype=np.int64).reshape(-1, 3)
        return c[:, 0].copy(), c[:, 1].copy(), c[:, 2].copy()

    @cached_property
    def order(self) -> np.ndarray:
        """Evaluation order of non-input units; zero-delay edges must form a DAG."""
        n = self.n_neurons
        indeg = np.zeros(n, dtype=np.int64)
        succ: list[list[int]] = [[] for _ in range(n)]
        for t, s, d in self.connections:
            if d == 0 and s >= self.n_in:
                indeg[t] += 1
                succ[s].append(t)
        ready = sorted(i for i in range(self.n_in, n) if indeg[i] == 0)
        order = []
        while ready:
            i = ready.pop(0)
            order.append(i)
            for t in succ[i]:
                indeg[t] -= 1
                if indeg[t] == 0:
                    ready.append(t)
            ready.sort()
        if len(order) != n - self.n_in:
            raise TopologyError("zero-delay connections form a cycle")
        return np.array(order, dtype=np.int64)

    @cached_property
    def csr(self):
        tgt, src, _ = self.arrays
        n = self.n_neurons
        in_idx = np.argsort(tgt, kind="stable").astype(np.int64)
        in_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(tgt, minlength=n), out=in_ptr[1:])
        out_idx = np.argsort(src, kind="stable").astype(np.int64)
        out_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=out_ptr[1:])
        return in_ptr, in_idx, out_ptr, out_idx

    def header(self) -> dict:
        return {"n_in": self.n_in, "n_hidden": self.n_hidden, "n_out": self.n_out}


@dataclass(frozen=True)
class NetWeights:
    """One weight per connection, aligned with ``topology.connections``."""

    topology: Topology
    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.shape != (len(self.topology.connections),):
            raise ValueError(f"expected {len(self.topology.connections)} weights, got shape {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    def index(self, target: int, source: int, delay: int = 0) -> int:
        try:
            return self.topology.connections.index((target, source, delay))
        except ValueError:
            raise KeyError((target, source, delay)) from None

    def get(self, target: int, source: int, delay: int = 0) -> float:
        return float(self.w[self.index(target, source, delay)])

    def with_weights(self, w) -> "NetWeights":
        return NetWeights(self.topology, w)

    def as_dict(self) -> dict[tuple[int, int, int], float]:
        return dict(zip(self.topology.connections, self.w.tolist()))


@dataclass(frozen=True)
class TrainingSequence:
    inputs: np.ndarray   # (T, n_in)
    targets: np.ndarray  # (T, 7)

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        d = np.atleast_2d(np.asarray(self.targets, dtype=float))
        if len(x) == 0 or len(x) != len(d) or d.shape[1] != N_STATES:
            raise ValueError(f"inputs {x.shape} and targets {d.shape} do not form a sequence")
        if np.any((d < 0) | (d > 1)):
            raise ValueError("targets must lie in [0, 1]")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "targets", d)

    def __len__(self) -> int:
        return len(self.inputs)


@dataclass(frozen=True)
class ActivationTrace:
    x: np.ndarray  # pre-activations, (T, n_neurons)
    y: np.ndarray  # outputs

    def outputs(self, topo: Topology) -> np.ndarray:
        return self.y[:, topo.output_slice]


def _check_inputs(topo: Topology, seq: TrainingSequence):
    if seq.inputs.shape[1] != topo.n_in:
        raise ValueError(f"sequence has {seq.inputs.shape[1]} inputs, network expects {topo.n_in}")


def forward(net: NetWeights, seq: TrainingSequence) -> ActivationTrace:
    topo = net.topology
    _check_inputs(topo, seq)
    tgt, src, delay = topo.arrays
    in_ptr, in_idx, _, _ = topo.csr
    x, y = _kernels.forward(seq.inputs, topo.n_neurons, topo.order, in_ptr, in_idx, src, delay, net.w)
    return ActivationTrace(x, y)


def _output_error(topo: Topology, trace: ActivationTrace, seq: TrainingSequence) -> np.ndarray:
    err = np.zeros_like(trace.y)
    err[:, topo.output_slice] = seq.targets - trace.y[:, topo.output_slice]
    return err


def sequence_loss(net: NetWeights, seq: TrainingSequence) -> float:
    """Half the summed squared output error over the whole sequence."""
    trace = forward(net, seq)
    r = seq.targets - trace.outputs(net.topology)
    return 0.5 * float(np.sum(r * r))


def bptt_gradients(net: NetWeights, seq: TrainingSequence, trace: ActivationTrace | None = None):
    """Accumulated ``delta_target * y_source`` per shared weight, and the loss.

    This is the negative gradient of :func:`sequence_loss`, so adding
    ``alpha * grad`` to the weights descends the error.
    """
    topo = net.topology
    if trace is None:
        trace = forward(net, seq)
    err = _output_error(topo, trace, seq)
    tgt, src, delay = topo.arrays
    _, _, out_ptr, out_idx = topo.csr
    _, grad = _kernels.backward(trace.y, err, topo.n_in, topo.order, out_ptr, out_idx, tgt, src, delay, net.w)
    loss = 0.5 * float(np.sum(err * err))
    return grad, loss


def update_weights(net: NetWeights, grads, alpha: float) -> NetWeights:
    if not alpha > 0:
        raise ValueError(f"learning rate must be positive, got {alpha!r}")
    grads = np.asarray(grads, dtype=float)
    bad = np.flatnonzero(~np.isfinite(grads))
    if bad.size:
        raise TrainingError(f"non-finite gradient {grads[bad[0]]!r} for weight "
                            f"(target, source, delay) = {net.topology.connections[bad[0]]}")
    with np.errstate(invalid="ignore", over="ignore"):
        w = net.w + alpha * grads
    bad = np.flatnonzero(~np.isfinite(w))
    if bad.size:
        raise TrainingError(f"update overflowed weight (target, source, delay) = "
                            f"{net.topology.connections[bad[0]]}")
    return net.with_weights(w)


def train(net: NetWeights, data: Sequence[TrainingSequence], alpha: float, epochs: int):
    """Plain BPTT, one weight update per sequence, sequences in the given order.

    Returns the trained weights and the per-epoch loss (summed over sequences,
    each measured just before its own update).
    """
    if int(epochs) != epochs or epochs < 1:
        raise ValueError(f"epochs must be a positive integer, got {epochs!r}")
    if not data:
        raise ValueError("no training sequences")
    curve = []
    for epoch in range(int(epochs)):
        total = 0.0
        for seq in data:
            grad, loss = bptt_gradients(net, seq)
            net = update_weights(net, grad, alpha)
            total += loss
        if not total <= DIVERGENCE_LOSS:
            raise TrainingError(f"training diverged at epoch {epoch}: loss {total!r}")
        curve.append(total)
    log.debug("trained %d epochs, loss %.6g -> %.6g", epochs, curve[0], curve[-1])
    return net, curve


def context_input(state: int) -> int:
    return N_GROUPS + int(state)


def output_unit(topo: Topology, state: int) -> int:
    return topo.n_in + topo.n_hidden + int(state)


def init_weights(topo: Topology, base, scale: float = 1.0, seed: int = 0) -> NetWeights:
    """Seeded uniform(-0.1, 0.1) weights, with context-to-output links set from ``base``.

    The connection from the context unit of state i to the output unit of
    state j gets ``scale * base[i][j]``.
    """
    base = check_stochastic(base)
    rng = np.random.default_rng(seed)
    w = rng.uniform(-0.1, 0.1, size=len(topo.connections))
    if topo.n_in == N_INPUTS:
        pos = {c: k for k, c in enumerate(topo.connections)}
        for i in range(N_STATES):
            for j in range(N_STATES):
                k = pos.get((output_unit(topo, j), context_input(i), 0))
                if k is not None:
                    w[k] = scale * base[i, j]
    return NetWeights(topo, w)


def encode_step(e, state) -> np.ndarray:
    x = np.zeros(N_INPUTS)
    x[:N_GROUPS] = e
    x[context_input(state)] = 1.0
    return x


def one_hot(state) -> np.ndarray:
    d = np.zeros(N_STATES)
    d[int(state)] = 1.0
    return d


def make_sequence(steps: Iterable[tuple[np.ndarray, int, int]]) -> TrainingSequence:
    """Build a sequence from ``(emotion vector, current state, next state)`` steps."""
    steps = list(steps)
    return TrainingSequence(
        np.array([encode_step(e, s) for e, s, _ in steps]),
        np.array([one_hot(n) for _, _, n in steps]),
    )


# ------------------------------------------------------------ serialization

NET_FORMAT_VERSION = 1


def weights_to_doc(net: NetWeights) -> dict:
    return {
        "version": NET_FORMAT_VERSION,
        "topology": net.topology.header(),
        "connections": [list(c) for c in net.topology.connections],
        "weights": net.w.tolist(),
    }


def weights_from_doc(doc: dict) -> NetWeights:
    if doc.get("version") != NET_FORMAT_VERSION:
        raise ValueError(f"unsupported network format version {doc.get('version')!r}")
    head = doc["topology"]
    topo = Topology(head["n_in"], head["n_hidden"], head["n_out"],
                    tuple(tuple(c) for c in doc["connections"]))
    if [list(c) for c in topo.connections] != doc["connections"]:
        raise ValueError("connections are not in canonical (target, source, delay) order")
    return NetWeights(topo, doc["weights"])

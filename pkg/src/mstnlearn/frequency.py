"""Turn a trained network into a row-stochastic transition matrix.

Every nonempty subset of the 9 emotion-group inputs is fired (each fired node
at ``1 / |subset|``) with the context clamped to one current state; the output
responses over all 511 patterns are reduced to one probability row.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from . import _kernels
from .emotion import N_GROUPS
from .mstn import N_STATES, ROW_TOL, MentalState
from .rnn import N_INPUTS, NetWeights, context_input

N_PATTERNS = 2 ** N_GROUPS - 1
MODES = ("mean", "argmax")


def enumerate_patterns() -> np.ndarray:
    """All 511 firing patterns, row ``m - 1`` for bitmask ``m`` (bit k = group k + 1)."""
    masks = np.arange(1, N_PATTERNS + 1)
    fired = (masks[:, None] >> np.arange(N_GROUPS)) & 1
    return fired / fired.sum(axis=1, keepdims=True)


def _responses(net: NetWeights, state: int, patterns: np.ndarray) -> np.ndarray:
    topo = net.topology
    if topo.n_in != N_INPUTS:
        raise ValueError(f"network needs {N_INPUTS} inputs for pattern evaluation")
    x = np.zeros((len(patterns), N_INPUTS))
    x[:, :N_GROUPS] = patterns
    x[:, context_input(state)] = 1.0
    _, src, delay = topo.arrays
    in_ptr, in_idx, _, _ = topo.csr
    y = _kernels.step_batch(x, topo.n_neurons, topo.order, in_ptr, in_idx, src, delay, net.w)
    return y[:, topo.output_slice]


def transition_matrix_from_net(net: NetWeights, mode: str = "mean", patterns=None) -> np.ndarray:
    """7x7 matrix, rows = current state, columns = next state (fixture order).

    ``mean`` averages each output's activation over the patterns and normalizes
    the row; ``argmax`` counts how often each output wins (ties to the lowest
    state index) and divides by the number of patterns. Sums use ``math.fsum``
    so the result does not depend on pattern order.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    patterns = enumerate_patterns() if patterns is None else np.asarray(patterns, dtype=float)
    n = len(patterns)
    p = np.zeros((N_STATES, N_STATES))
    for s in range(N_STATES):
        out = _responses(net, s, patterns)
        if mode == "mean":
            mean = np.array([math.fsum(out[:, j]) / n for j in range(N_STATES)])
            total = math.fsum(mean)
            if not total > 0:
                raise ArithmeticError(f"row {MentalState(s).name} has no output activation")
            p[s] = mean / total
        else:
            p[s] = np.bincount(np.argmax(out, axis=1), minlength=N_STATES) / n
    sums = p.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > ROW_TOL):
        raise ArithmeticError(f"frequency rows do not sum to 1: {sums}")
    return p


class Emphasis(NamedTuple):
    current: MentalState
    next: MentalState
    delta: float


def compare_matrices(before, after, threshold: float) -> list[Emphasis]:
    """Cells where ``after - before`` exceeds ``threshold``, largest increase first."""
    before = np.asarray(before, dtype=float)
    after = np.asarray(after, dtype=float)
    if before.shape != after.shape:
        raise ValueError(f"shape mismatch {before.shape} vs {after.shape}")
    diff = after - before
    cells = [Emphasis(MentalState(i), MentalState(j), float(diff[i, j]))
             for i, j in zip(*np.nonzero(diff > threshold))]
    return sorted(cells, key=lambda c: (-c.delta, c.current, c.next))

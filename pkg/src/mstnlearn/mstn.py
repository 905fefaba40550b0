"""Seven-state mental state transition network.

State order everywhere in this package follows the fixture table:
happy, quiet, sad, surprise, angry, fear, disgust.
"""

from __future__ import annotations

import enum

import numpy as np

from .emotion import check_group

N_STATES = 7
ROW_TOL = 1e-9


class MentalState(enum.IntEnum):
    HAPPY = 0
    QUIET = 1
    SAD = 2
    SURPRISE = 3
    ANGRY = 4
    FEAR = 5
    DISGUST = 6

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def parse(cls, name: "str | int | MentalState") -> "MentalState":
        if isinstance(name, cls):
            return name
        if isinstance(name, (int, np.integer)) and not isinstance(name, bool):
            return cls(int(name))
        key = str(name).strip().upper()
        key = _ALIASES.get(key, key)
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown mental state {name!r}") from None


_ALIASES = {"NORMAL": "QUIET", "ANGER": "ANGRY", "SURPRIZE": "SURPRISE"}

# display orders: as in the fixture table, and as in the learned-matrix tables
TABLE1_ORDER = tuple(MentalState)
TABLE3_ORDER = (
    MentalState.SURPRISE, MentalState.HAPPY, MentalState.SAD, MentalState.ANGRY,
    MentalState.DISGUST, MentalState.FEAR, MentalState.QUIET,
)

_GROUP_TARGET = {
    1: MentalState.HAPPY,
    2: MentalState.HAPPY,
    3: MentalState.SAD,
    4: MentalState.SAD,
    5: MentalState.SAD,
    6: MentalState.DISGUST,
    7: MentalState.ANGRY,
    8: MentalState.FEAR,
    9: MentalState.SURPRISE,
}


class NoStimulusError(ValueError):
    """Raised when an all-zero emotion vector reaches stimulus-driven selection."""


def check_stochastic(p, tol: float = ROW_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[1] != N_STATES:
        raise ValueError(f"transition matrix must have {N_STATES} columns, got shape {p.shape}")
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ValueError("transition probabilities must lie in [0, 1]")
    sums = p.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        raise ValueError(f"row {bad[0]} sums to {sums[bad[0]]!r}, not 1")
    return p


def empty_counts() -> np.ndarray:
    return np.zeros((N_STATES, N_STATES), dtype=np.int64)


def record_transition(counts: np.ndarray, src, dst) -> np.ndarray:
    out = counts.copy()
    out[MentalState.parse(src), MentalState.parse(dst)] += 1
    return out


def cost_from_counts(counts) -> tuple[np.ndarray, np.ndarray]:
    """Probabilities and costs (1 - p) from transition counts.

    Rows with no observations fall back to the uniform distribution.
    """
    c = np.asarray(counts, dtype=float)
    if c.shape != (N_STATES, N_STATES) or np.any(c < 0):
        raise ValueError("counts must be a nonnegative 7x7 matrix")
    totals = c.sum(axis=1, keepdims=True)
    p = np.where(totals > 0, c / np.where(totals > 0, totals, 1.0), 1.0 / N_STATES)
    return p, 1.0 - p


def costs_from_probabilities(p) -> np.ndarray:
    return 1.0 - check_stochastic(p)


def group_target(group: int) -> MentalState:
    return _GROUP_TARGET[check_group(group)]


def stimulus_scores(cur, e, costs) -> np.ndarray:
    """Per-group score ``e_k / cost(cur, target(k))``; zero cost scores +inf when e_k > 0."""
    cur = MentalState.parse(cur)
    e = np.asarray(e, dtype=float)
    scores = np.empty(len(e))
    for k in range(len(e)):
        c = costs[cur, _GROUP_TARGET[k + 1]]
        if e[k] == 0.0:
            scores[k] = 0.0
        elif c == 0.0:
            scores[k] = np.inf
        else:
            scores[k] = e[k] / c
    return scores


def next_state(cur, e, costs) -> tuple[MentalState, int]:
    """Stimulus-driven transition: pick the group with the best intensity/cost ratio.

    Returns ``(next state, group)``. Ties go to the lowest group index. An
    all-zero vector carries no stimulus; use :func:`idle_transition` instead.
    """
    e = np.asarray(e, dtype=float)
    if not np.any(e > 0):
        raise NoStimulusError("all-zero emotion vector: no stimulus, use idle_transition")
    k = int(np.argmax(stimulus_scores(cur, e, costs))) + 1
    return _GROUP_TARGET[k], k


def idle_transition(cur, base, rng: np.random.Generator) -> MentalState:
    """Sample the next state from row ``cur`` of ``base`` when there is no stimulus."""
    row = check_stochastic(np.atleast_2d(np.asarray(base, dtype=float)[MentalState.parse(cur)]))[0]
    return MentalState(int(rng.choice(N_STATES, p=row)))

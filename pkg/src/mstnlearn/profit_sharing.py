"""Profit sharing over (mental state, emotion group) rules.

Detours (loops that return to an already visited sensory input) are cut out of
an episode before the terminal reward is distributed backwards with a
geometrically decaying share.
"""

from __future__ import annotations

import itertools
from collections.abc import Hashable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .emotion import N_GROUPS, check_group, dominant_group, valence
from .mstn import MentalState


class Rule(NamedTuple):
    """If the sensory input is ``state`` then fire emotion group ``group``."""

    state: MentalState
    group: int

    @property
    def key(self) -> str:
        return f"{self.state.name.lower()}:{self.group}"

    @classmethod
    def from_key(cls, key: str) -> "Rule":
        state, _, group = key.partition(":")
        return cls(MentalState.parse(state), check_group(int(group)))


ALL_RULES: tuple[Rule, ...] = tuple(
    Rule(s, g) for s, g in itertools.product(MentalState, range(1, N_GROUPS + 1))
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ReinforceConfig:
    M: float = 2.0
    L: int = 1
    epsilon: float = 0.1
    max_length: int = 100

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ConfigError(f"L must be a positive integer, got {self.L!r}")
        if not self.M >= self.L + 1:
            raise ConfigError(f"discount M={self.M!r} must be at least L + 1 = {self.L + 1}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must lie in [0, 1], got {self.epsilon!r}")
        if int(self.max_length) != self.max_length or self.max_length < 1:
            raise ConfigError(f"max episode length must be a positive integer, got {self.max_length!r}")


@dataclass(frozen=True)
class Episode:
    rules: tuple[Rule, ...]
    reward: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(Rule(MentalState.parse(s), check_group(g)) for s, g in self.rules))

    @property
    def length(self) -> int:
        return len(self.rules)


@dataclass
class WeightTable:
    """Rule weights; every one of the 63 rules is present."""

    S: dict[Rule, float] = field(default_factory=lambda: dict.fromkeys(ALL_RULES, 0.0))

    def copy(self) -> "WeightTable":
        return WeightTable(dict(self.S))

    def __getitem__(self, rule) -> float:
        return self.S[Rule(*rule)]

    def total(self) -> float:
        return sum(self.S.values())

    def to_dict(self) -> dict[str, float]:
        return {r.key: self.S[r] for r in ALL_RULES}

    @classmethod
    def from_dict(cls, d: dict[str, float]) -> "WeightTable":
        table = cls()
        for key, value in d.items():
            rule = Rule.from_key(key)
            table.S[rule] = float(value)
        return table


def detect_detours(inputs: Sequence[Hashable]) -> list[tuple[int, int]]:
    """Index spans ``(start, end)`` (inclusive, original coordinates) of detours.

    Scanning left to right, a sensory input seen again at position ``j`` after
    a surviving occurrence at ``i`` closes the detour ``[i, j - 1]``, which is
    removed before scanning continues.
    """
    spans: list[tuple[int, int]] = []
    kept: list[int] = []          # original indices still in the working copy
    last: dict[Hashable, int] = {}  # input -> position in ``kept``
    for j, x in enumerate(inputs):
        pos = last.get(x)
        if pos is not None:
            spans.append((kept[pos], j - 1))
            for idx in kept[pos:]:
                del last[inputs[idx]]
            del kept[pos:]
        last[x] = len(kept)
        kept.append(j)
    return spans


def surviving_indices(n: int, spans) -> list[int]:
    dropped = set()
    for a, b in spans:
        dropped.update(range(a, b + 1))
    return [i for i in range(n) if i not in dropped]


def remove_detours(episode: Episode) -> Episode:
    inputs = [r.state for r in episode.rules]
    keep = surviving_indices(len(inputs), detect_detours(inputs))
    return Episode(tuple(episode.rules[i] for i in keep), episode.reward)


def reinforcement_values(R: float, M: float, W: int) -> np.ndarray:
    """``f_i = R / M**i`` for i = 0..W-1, i counted back from the final rule."""
    f = np.empty(W)
    v = float(R)
    for i in range(W):
        f[i] = v
        v = v / M
    return f


def reinforce(weights: WeightTable, episode: Episode, config: ReinforceConfig) -> WeightTable:
    """Distribute the episode reward back over its rules.

    The final rule receives R, the one before R/M, and so on. The episode is
    expected to be detour-free already. A zero reward leaves the table as is.
    """
    if not config.M >= config.L + 1:
        raise ConfigError(f"discount M={config.M!r} must be at least L + 1")
    out = weights.copy()
    if episode.reward == 0 or not episode.rules:
        return out
    f = reinforcement_values(episode.reward, config.M, episode.length)
    for i, rule in enumerate(reversed(episode.rules)):
        out.S[rule] += float(f[i])
    return out


def check_suppression(config: ReinforceConfig, W: int) -> bool:
    """Whether ``L * sum(f[i:W]) < f[i-1]`` holds for every i in 1..W-1.

    Evaluated in exact rational arithmetic with f_0 = 1; in floating point the
    tail sum rounds up to f_{i-1} once the episode is long enough.
    """
    if W < 1:
        raise ValueError("episode length must be >= 1")
    if not config.M >= config.L + 1:
        raise ConfigError(f"discount M={config.M!r} must be at least L + 1")
    M = Fraction(config.M)
    f = [Fraction(1)]
    for _ in range(1, W):
        f.append(f[-1] / M)
    tail = Fraction(0)
    for i in range(W - 1, 0, -1):
        tail += f[i]
        if not config.L * tail < f[i - 1]:
            return False
    return True


def select_action(weights: WeightTable, x, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy choice of emotion group for sensory input ``x``."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon!r}")
    x = MentalState.parse(x)
    if rng.random() < epsilon:
        return int(rng.integers(1, N_GROUPS + 1))
    w = np.array([weights.S[Rule(x, g)] for g in range(1, N_GROUPS + 1)])
    best = np.flatnonzero(w == w.max())
    return int(best[rng.integers(len(best))]) + 1


def episode_reward(final_event) -> float:
    """Signed intensity of the strongest group in the closing event."""
    e = np.asarray(final_event, dtype=float)
    k = dominant_group(e)
    if k is None:
        return 0.0
    return float(valence(k) * e[k - 1])

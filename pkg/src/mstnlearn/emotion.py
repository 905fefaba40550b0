"""Emotion taxonomy: 28 named emotions partitioned into 9 groups.

Raw per-emotion intensities are collapsed into a 9-element emotion vector by
taking the maximum intensity within each group.
"""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

N_GROUPS = 9

GROUPS: dict[int, tuple[str, ...]] = {
    1: ("gloating", "hope", "satisfaction", "relief", "pride", "admiration",
        "liking", "gratitude", "gratification", "love", "shy"),
    2: ("joy", "happy_for"),
    3: ("sorry_for", "shame", "remorse"),
    4: ("fear_confirmed", "disappointment", "sadness"),
    5: ("distress", "perplexity"),
    6: ("disliking", "hate"),
    7: ("resentment", "reproach", "anger"),
    8: ("fear",),
    9: ("surprise",),
}

EMOTIONS: tuple[str, ...] = tuple(name for g in sorted(GROUPS) for name in GROUPS[g])

_GROUP_OF = {name: g for g, names in GROUPS.items() for name in names}

# pleasure +1, displeasure -1; surprise carries no valence
_VALENCE = {1: 1, 2: 1, 3: -1, 4: -1, 5: -1, 6: -1, 7: -1, 8: -1, 9: 0}


class UnknownEmotionError(ValueError):
    def __init__(self, name: str, where: str = ""):
        self.name = name
        self.where = where
        msg = f"unknown emotion {name!r}"
        super().__init__(f"{msg} ({where})" if where else msg)


def normalize_name(name: str) -> str:
    """Lower-case and map hyphens/spaces to underscores (``sorry-for`` -> ``sorry_for``)."""
    return name.strip().lower().replace("-", "_").replace(" ", "_")


def parse_emotion(name: str, where: str = "") -> str:
    key = normalize_name(name)
    if key not in _GROUP_OF:
        raise UnknownEmotionError(name, where)
    return key


def check_group(group: int) -> int:
    if isinstance(group, bool) or int(group) != group or not 1 <= group <= N_GROUPS:
        raise ValueError(f"emotion group must be an integer in 1..9, got {group!r}")
    return int(group)


def group_of(emotion: str) -> int:
    """Group index (1..9) of a parsed emotion name."""
    return _GROUP_OF[emotion]


def valence(group: int) -> int:
    return _VALENCE[check_group(group)]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def aggregate(raw: Mapping[str, float]) -> np.ndarray:
    """Collapse ``{emotion: intensity}`` into the 9-element emotion vector.

    Entry ``k - 1`` holds the largest intensity among emotions of group ``k``,
    or 0 when the group is absent. Names are normalized before lookup.
    """
    e = np.zeros(N_GROUPS)
    for name, value in raw.items():
        key = parse_emotion(name)
        value = float(value)
        if not value >= 0.0:
            raise ValueError(f"intensity of {key!r} must be nonnegative, got {value!r}")
        k = _GROUP_OF[key] - 1
        if value > e[k]:
            e[k] = value
    return _frozen(e)


def emotion_vector(values) -> np.ndarray:
    """Validate a direct 9-vector of group intensities."""
    e = np.array(values, dtype=float)
    if e.shape != (N_GROUPS,):
        raise ValueError(f"emotion vector needs {N_GROUPS} entries, got shape {e.shape}")
    bad = np.flatnonzero(~(e >= 0.0))
    if bad.size:
        raise ValueError(f"emotion group {bad[0] + 1} has negative or NaN intensity {e[bad[0]]!r}")
    return _frozen(e)


def dominant_group(e: np.ndarray) -> int | None:
    """Index (1..9) of the strongest group, lowest index on ties; None for a zero vector."""
    if not np.any(e > 0):
        return None
    return int(np.argmax(e)) + 1

"""Big Five trait scores read off a transition matrix.

Each (current, next) cell maps to zero or more traits, each with a sign; a
negative sign marks a cell that speaks for the opposite pole of the trait.
A trait's score is the signed sum of the probabilities of its cells.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .mstn import MentalState


class Trait(enum.Enum):
    OPENNESS = "Openness"
    CONSCIENTIOUSNESS = "Conscientiousness"
    EXTRAVERSION = "Extraversion"
    AGREEABLENESS = "Agreeableness"
    NEUROTICISM = "Neuroticism"


Cell = tuple[MentalState, MentalState]
TraitMapping = dict[Cell, tuple[tuple[Trait, int], ...]]

_O, _C, _E, _A, _N = Trait

# Per current state, next state -> traits; a leading "-" marks an inverse term.
# Missing next states have no trait attached.
_TABLE = {
    "surprise": {
        "surprise": "N", "happy": "C N", "sad": "A", "angry": "-E -C",
        "disgust": "-C", "fear": "A", "normal": "-O E",
    },
    "happy": {
        "surprise": "N", "happy": "O C N", "sad": "A", "angry": "-E -C",
        "disgust": "-C", "fear": "A", "normal": "-O E",
    },
    "sad": {
        "happy": "A", "sad": "A -E", "angry": "-E -C",
        "disgust": "-C", "fear": "A", "normal": "-A -O E",
    },
    "angry": {
        "sad": "A", "angry": "-E -C", "disgust": "-C", "fear": "A", "normal": "-O E",
    },
    "fear": {
        "sad": "A", "angry": "-E -C", "disgust": "-E -C", "fear": "A", "normal": "-O E",
    },
    # printed as a second "Fear" block; it is the only slot left for disgust
    "disgust": {
        "sad": "A", "angry": "-E -C", "disgust": "-C", "fear": "A", "normal": "-O E",
    },
    "normal": {
        "surprise": "N", "happy": "O C N", "sad": "A", "angry": "-E -C",
        "disgust": "-C", "fear": "A", "normal": "-O E -C",
    },
}

_LETTER = {"O": _O, "C": _C, "E": _E, "A": _A, "N": _N}


def builtin_mapping() -> TraitMapping:
    mapping: TraitMapping = {}
    for cur, row in _TABLE.items():
        for nxt, terms in row.items():
            entries = []
            for term in terms.split():
                sign = -1 if term.startswith("-") else 1
                entries.append((_LETTER[term.lstrip("-")], sign))
            mapping[(MentalState.parse(cur), MentalState.parse(nxt))] = tuple(entries)
    return mapping


@dataclass(frozen=True)
class TraitScores:
    score: dict[Trait, float]
    support: dict[Trait, int]

    def rows(self):
        return [(t, self.score[t], self.support[t]) for t in Trait]


def trait_scores(matrix, mapping: TraitMapping | None = None) -> TraitScores:
    p = np.asarray(matrix, dtype=float)
    mapping = builtin_mapping() if mapping is None else mapping
    score = dict.fromkeys(Trait, 0.0)
    support = dict.fromkeys(Trait, 0)
    for (cur, nxt), entries in mapping.items():
        for trait, sign in entries:
            score[trait] += sign * p[cur, nxt]
            support[trait] += 1
    return TraitScores(score, support)


def contributions(matrix, trait: Trait, mapping: TraitMapping | None = None, top: int = 3):
    """Largest-magnitude ``(cell, signed probability)`` terms of one trait's score."""
    p = np.asarray(matrix, dtype=float)
    mapping = builtin_mapping() if mapping is None else mapping
    terms = [(cell, sign * p[cell]) for cell, entries in mapping.items()
             for t, sign in entries if t is trait]
    terms.sort(key=lambda item: (-abs(item[1]), item[0]))
    return terms[:top]

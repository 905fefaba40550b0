"""Scenario files, the Table I fixture, model bundles and matrix rendering.

Scenario document (JSON)::

    {"version": "1", "name": "...", "episodes": [
        {"start": "quiet",                # optional, default quiet
         "events": [
            {"emotions": {"sadness": 0.8}, "note": "optional text"},
            {"vector": [0, 0, 0, 0.5, 0, 0, 0, 0, 0]},
            {}                            # no stimulus
         ]}
    ]}
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import re
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import emotion
from .mstn import N_STATES, TABLE1_ORDER, TABLE3_ORDER, MentalState, check_stochastic
from .profit_sharing import WeightTable
from .rnn import NetWeights, weights_from_doc, weights_to_doc

SCENARIO_VERSIONS = ("1",)
BUNDLE_FORMAT = "mstnlearn-bundle"
BUNDLE_VERSION = 1

TABLE1_SHA256 = "18d30b986d82b3970e6220af7c1a8d61b755f9beb1a44d767de1dee29be815cc"
# printed values are rounded to 3 decimals; the happy row adds up to 0.997
TABLE1_ROW_TOL = 0.005


class ScenarioError(ValueError):
    pass


class UnsupportedVersionError(ScenarioError):
    pass


class EmptyEpisodeError(ScenarioError):
    pass


class ScenarioEmotionError(ScenarioError):
    def __init__(self, name: str, where: str, line: int | None):
        self.name, self.where, self.line = name, where, line
        loc = f"line {line}, {where}" if line else where
        super().__init__(f"unknown emotion {name!r} at {loc}")


class FixtureCorruptError(RuntimeError):
    pass


class BundleError(ValueError):
    pass


class ProvenanceWarning(UserWarning):
    pass


# ------------------------------------------------------------------ scenarios

@dataclass(frozen=True)
class Event:
    vector: np.ndarray
    note: str = ""
    emotions: dict = field(default_factory=dict)

    @property
    def is_stimulus(self) -> bool:
        return bool(np.any(self.vector > 0))


@dataclass(frozen=True)
class EpisodeSpec:
    events: tuple[Event, ...]
    start: MentalState = MentalState.QUIET


@dataclass(frozen=True)
class ScenarioFile:
    version: str
    name: str
    episodes: tuple[EpisodeSpec, ...]


def _line_of(text: str, token: str) -> int | None:
    m = re.search(re.escape(json.dumps(token)), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _parse_event(raw, where: str, text: str) -> Event:
    if not isinstance(raw, dict):
        raise ScenarioError(f"{where}: event must be an object")
    note = str(raw.get("note", ""))
    if "vector" in raw:
        if "emotions" in raw:
            raise ScenarioError(f"{where}: give either 'emotions' or 'vector', not both")
        try:
            return Event(emotion.emotion_vector(raw["vector"]), note)
        except ValueError as exc:
            raise ScenarioError(f"{where}: {exc}") from None
    emotions = raw.get("emotions", {})
    if not isinstance(emotions, dict):
        raise ScenarioError(f"{where}: 'emotions' must map names to intensities")
    parsed = {}
    for name, value in emotions.items():
        try:
            key = emotion.parse_emotion(name)
        except emotion.UnknownEmotionError:
            raise ScenarioEmotionError(name, where, _line_of(text, name)) from None
        parsed[key] = value
    try:
        vec = emotion.aggregate(parsed)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from None
    return Event(vec, note, parsed)


def parse_scenario(text: str) -> ScenarioFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"not a valid scenario document: {exc}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be an object")
    version = str(doc.get("version"))
    if version not in SCENARIO_VERSIONS:
        raise UnsupportedVersionError(f"unrecognized scenario version {doc.get('version')!r}")
    episodes_raw = doc.get("episodes")
    if not isinstance(episodes_raw, list) or not episodes_raw:
        raise ScenarioError("scenario needs at least one episode")
    episodes = []
    for i, ep in enumerate(episodes_raw):
        if not isinstance(ep, dict):
            raise ScenarioError(f"episode {i}: must be an object")
        events_raw = ep.get("events") or []
        if not events_raw:
            raise EmptyEpisodeError(f"episode {i} has no events")
        try:
            start = MentalState.parse(ep.get("start", "quiet"))
        except ValueError as exc:
            raise ScenarioError(f"episode {i}: {exc}") from None
        events = tuple(_parse_event(ev, f"episode {i}, event {j}", text) for j, ev in enumerate(events_raw))
        episodes.append(EpisodeSpec(events, start))
    return ScenarioFile(version, str(doc.get("name", "")), tuple(episodes))


def load_scenario(path) -> ScenarioFile:
    return parse_scenario(Path(path).read_text())


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("mstnlearn") / "data" / name))


# -------------------------------------------------------------------- Table I

class Table1(NamedTuple):
    p: np.ndarray         # rows renormalized to sum to 1; used for computation
    verbatim: np.ndarray  # as printed, 3 decimals; used for display


def load_table1(path=None) -> Table1:
    path = fixture_path("table1.csv") if path is None else Path(path)
    raw = path.read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    if digest != TABLE1_SHA256:
        raise FixtureCorruptError(f"{path}: checksum {digest[:12]}... does not match the Table I fixture")
    rows = list(csv.reader(io.StringIO(raw.decode())))
    header, body = rows[0], rows[1:]
    expected = [s.name.lower() for s in TABLE1_ORDER]
    if header[1:] != expected or [r[0] for r in body] != expected:
        raise FixtureCorruptError(f"{path}: unexpected state order")
    verbatim = np.array([[float(v) for v in r[1:]] for r in body])
    check_stochastic(verbatim, tol=TABLE1_ROW_TOL)
    p = verbatim / verbatim.sum(axis=1, keepdims=True)
    for a in (p, verbatim):
        a.setflags(write=False)
    return Table1(p, verbatim)


# -------------------------------------------------------------------- bundles

def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class ModelBundle:
    net: NetWeights
    ps_weights: WeightTable
    frequency: np.ndarray
    mode: str
    provenance: dict


def bundle_to_doc(bundle: ModelBundle) -> dict:
    return {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "network": weights_to_doc(bundle.net),
        "ps_weights": bundle.ps_weights.to_dict(),
        "frequency": {
            "mode": bundle.mode,
            "states": [s.name.lower() for s in TABLE1_ORDER],
            "matrix": np.asarray(bundle.frequency).tolist(),
        },
        "provenance": bundle.provenance,
    }


def dumps_bundle(bundle: ModelBundle) -> str:
    return json.dumps(bundle_to_doc(bundle), indent=1) + "\n"


def save_bundle(bundle: ModelBundle, path) -> None:
    Path(path).write_text(dumps_bundle(bundle))


def loads_bundle(text: str) -> ModelBundle:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BundleError(f"bundle is truncated or malformed: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != BUNDLE_FORMAT:
        raise BundleError("not a model bundle")
    if doc.get("version") != BUNDLE_VERSION:
        raise BundleError(f"unsupported bundle version {doc.get('version')!r}")
    try:
        net = weights_from_doc(doc["network"])
        ps = WeightTable.from_dict(doc["ps_weights"])
        freq = doc["frequency"]
        if freq["states"] != [s.name.lower() for s in TABLE1_ORDER]:
            raise BundleError("frequency matrix has unexpected state order")
        matrix = check_stochastic(np.array(freq["matrix"], dtype=float))
        prov = doc["provenance"]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, BundleError):
            raise
        raise BundleError(f"invalid bundle content: {exc!r}") from None
    stored = prov.get("config_hash")
    if "config" in prov and stored != config_hash(prov["config"]):
        warnings.warn("bundle config hash does not match its recorded config", ProvenanceWarning, stacklevel=2)
    return ModelBundle(net, ps, matrix, freq["mode"], prov)


def load_bundle(path) -> ModelBundle:
    return loads_bundle(Path(path).read_text())


# ------------------------------------------------------------------ rendering

ORDERS = {"paper1": TABLE1_ORDER, "paper3": TABLE3_ORDER}


def state_label(s: MentalState, order: str) -> str:
    if order == "paper3" and s is MentalState.QUIET:
        return "Normal"
    return s.label


def render_matrix(p, fmt: str = "text", order: str = "paper3", emphasized=()) -> str:
    """Render a 7x7 matrix with 4-decimal fixed point.

    ``emphasized`` is a collection of ``(current, next)`` cells; in text output
    they carry a trailing ``*``.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (N_STATES, N_STATES):
        raise ValueError(f"expected a 7x7 matrix, got {p.shape}")
    states = ORDERS[order]
    labels = [state_label(s, order) for s in states]
    marked = {(MentalState(c), MentalState(n)) for c, n, *_ in emphasized}
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["current"] + labels)
        for s, lab in zip(states, labels):
            w.writerow([lab] + [f"{p[s, t]:.4f}" for t in states])
        return buf.getvalue()
    if fmt == "structured":
        return json.dumps({
            "states": labels,
            "matrix": [[round(float(p[s, t]), 4) for t in states] for s in states],
            "emphasized": [[state_label(c, order), state_label(n, order)] for c, n in sorted(marked)],
        }, indent=1) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = ["current".ljust(10) + "".join(lab.rjust(10) for lab in labels)]
    for s, lab in zip(states, labels):
        cells = "".join((f"{p[s, t]:.4f}" + ("*" if (s, t) in marked else " ")).rjust(10) for t in states)
        lines.append(lab.ljust(10) + cells)
    return "\n".join(lines) + "\n"

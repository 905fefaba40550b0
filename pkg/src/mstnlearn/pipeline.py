"""End-to-end runs: scenario replay, profit-sharing cleanup, RNN training."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import frequency, mstn, profit_sharing as ps, rnn
from .mstn import MentalState
from .scenario_io import ModelBundle, ScenarioFile, Table1, config_hash, load_table1
from .traits import trait_scores


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    ps_M: float = 2.0
    ps_L: int = 1
    ps_epsilon: float = 0.1
    ps_max_length: int = 100
    rnn_hidden: int = rnn.DEFAULT_HIDDEN
    rnn_alpha: float = 0.05
    rnn_epochs: int = 300
    rnn_init_scale: float = 1.0
    freq_mode: str = "mean"
    emphasis_threshold: float = 0.5
    output_format: str = "text"
    table_order: str = "paper3"
    self_play: bool = False

    def __post_init__(self):
        try:
            self.reinforce_config
        except ps.ConfigError as exc:
            raise ConfigError(str(exc)) from None
        if self.rnn_hidden < 0 or self.rnn_epochs < 1 or not self.rnn_alpha > 0:
            raise ConfigError("rnn_hidden >= 0, rnn_epochs >= 1 and rnn_alpha > 0 are required")
        if self.freq_mode not in frequency.MODES:
            raise ConfigError(f"freq_mode must be one of {frequency.MODES}")
        if self.output_format not in ("text", "csv", "structured"):
            raise ConfigError("output_format must be text, csv or structured")
        if self.table_order not in ("paper1", "paper3"):
            raise ConfigError("table_order must be paper1 or paper3")

    @property
    def reinforce_config(self) -> ps.ReinforceConfig:
        return ps.ReinforceConfig(self.ps_M, self.ps_L, self.ps_epsilon, self.ps_max_length)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name: f.type for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        defaults = cls()
        kwargs = {}
        for key, value in d.items():
            want = type(getattr(defaults, key))
            if want is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if not isinstance(value, want) or (want is int and isinstance(value, bool)):
                raise ConfigError(f"config key {key!r} expects {want.__name__}, got {value!r}")
            kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config must be a flat key/value object")
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class Step:
    state: MentalState
    group: int | None  # None for a spontaneous (no stimulus) move
    next: MentalState
    vector: np.ndarray

    def to_doc(self) -> dict:
        return {"state": self.state.name.lower(), "group": self.group, "next": self.next.name.lower()}


def replay_episode(spec, costs, base, rng, weights: ps.WeightTable | None = None,
                   epsilon: float = 0.0) -> list[Step]:
    """Drive the network through one episode's events.

    Stimulus events pick the next state by intensity over cost, or, when
    ``weights`` is given, by epsilon-greedy rule selection. Empty events
    drift along ``base``.
    """
    cur = spec.start
    steps = []
    for ev in spec.events:
        if not ev.is_stimulus:
            nxt, group = mstn.idle_transition(cur, base, rng), None
        elif weights is not None:
            group = ps.select_action(weights, cur, epsilon, rng)
            nxt = mstn.group_target(group)
        else:
            nxt, group = mstn.next_state(cur, ev.vector, costs)
        steps.append(Step(cur, group, nxt, ev.vector))
        cur = nxt
    return steps


def simulate(scenario: ScenarioFile, config: PipelineConfig, table1: Table1 | None = None,
             weights: ps.WeightTable | None = None) -> list[list[Step]]:
    table1 = load_table1() if table1 is None else table1
    costs = mstn.costs_from_probabilities(table1.p)
    rng = np.random.default_rng(config.seed)
    if config.self_play and weights is None:
        weights = ps.WeightTable()
    if not config.self_play:
        weights = None
    return [replay_episode(ep, costs, table1.p, rng, weights, config.ps_epsilon) for ep in scenario.episodes]


def simulate_report(scenario: ScenarioFile, config: PipelineConfig, traces) -> dict:
    return {
        "scenario": scenario.name,
        "seed": config.seed,
        "episodes": [[s.to_doc() for s in steps] for steps in traces],
    }


def run_train(scenario: ScenarioFile, config: PipelineConfig, table1: Table1 | None = None):
    """Full training run; returns ``(report dict, ModelBundle)``."""
    table1 = load_table1() if table1 is None else table1
    rcfg = config.reinforce_config
    traces = simulate(scenario, dataclasses.replace(config, self_play=False), table1)

    weights = ps.WeightTable()
    sequences = []
    episode_log = []
    for n, steps in enumerate(traces):
        if len(steps) > rcfg.max_length:
            raise ConfigError(f"episode {n} has {len(steps)} steps, above ps_max_length={rcfg.max_length}")
        reward = ps.episode_reward(scenario.episodes[n].events[-1].vector)
        spans = ps.detect_detours([s.state for s in steps])
        kept = [steps[i] for i in ps.surviving_indices(len(steps), spans)]
        episode = ps.Episode(tuple((s.state, s.group) for s in kept if s.group is not None), reward)
        weights = ps.reinforce(weights, episode, rcfg)
        sequences.append(rnn.make_sequence((s.vector, s.state, s.next) for s in kept))
        episode_log.append({
            "steps": [s.to_doc() for s in steps],
            "detours": [list(span) for span in spans],
            "kept": [s.to_doc() for s in kept],
            "reward": reward,
        })

    topo = rnn.Topology.mstn(config.rnn_hidden)
    net0 = rnn.init_weights(topo, table1.p, config.rnn_init_scale, config.seed)
    net, curve = rnn.train(net0, sequences, config.rnn_alpha, config.rnn_epochs)
    before = frequency.transition_matrix_from_net(net0, config.freq_mode)
    after = frequency.transition_matrix_from_net(net, config.freq_mode)
    scores = trait_scores(after)

    cfg = config.to_dict()
    provenance = {
        "seed": config.seed,
        "config": cfg,
        "config_hash": config_hash(cfg),
        "scenario": scenario.name,
    }
    report = {
        "provenance": provenance,
        "episodes": episode_log,
        "ps_weight_deltas": {k: v for k, v in weights.to_dict().items() if v != 0.0},
        "loss_curve": curve,
        "frequency_before": before.tolist(),
        "frequency_after": after.tolist(),
        "traits": {t.value: {"score": s, "support": n} for t, s, n in scores.rows()},
    }
    bundle = ModelBundle(net, weights, after, config.freq_mode, provenance)
    return report, bundle

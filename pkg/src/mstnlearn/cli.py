"""Command-line entry point: simulate, train, freq, traits, check."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import frequency, mstn, profit_sharing as ps, rnn
from .pipeline import ConfigError, PipelineConfig, run_train, simulate, simulate_report
from .scenario_io import (
    BundleError, FixtureCorruptError, ScenarioError, dumps_bundle, fixture_path, load_bundle,
    load_scenario, load_table1, render_matrix, state_label,
)
from .traits import contributions, trait_scores

EXIT_OK, EXIT_FAILED, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3


def _config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    overrides = {}
    for flag, key in (("seed", "seed"), ("mode", "freq_mode"), ("format", "output_format"),
                      ("table_order", "table_order")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "self_play", False):
        overrides["self_play"] = True
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _scenario(args):
    path = args.scenario or fixture_path("scenario1.json")
    return load_scenario(path)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    scenario = _scenario(args)
    weights = load_bundle(args.bundle).ps_weights if args.bundle else None
    traces = simulate(scenario, cfg, weights=weights)
    if cfg.output_format == "structured":
        text = json.dumps(simulate_report(scenario, cfg, traces), indent=1) + "\n"
    elif cfg.output_format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["episode", "step", "state", "group", "next"])
        for n, steps in enumerate(traces, 1):
            for k, s in enumerate(steps):
                w.writerow([n, k, s.state.name.lower(), "" if s.group is None else s.group, s.next.name.lower()])
        text = buf.getvalue()
    else:
        lines = []
        for n, steps in enumerate(traces, 1):
            path = steps[0].state.name.lower()
            for s in steps:
                arrow = "~>" if s.group is None else f"-[{s.group}]->"
                path += f" {arrow} {s.next.name.lower()}"
            lines.append(f"episode {n:2d}: {path}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    scenario = _scenario(args)
    report, bundle = run_train(scenario, cfg)
    Path(args.out).write_text(dumps_bundle(bundle))
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=1) + "\n")
    curve = report["loss_curve"]
    print(f"scenario {scenario.name!r}: {len(scenario.episodes)} episodes, "
          f"{sum(len(e['detours']) for e in report['episodes'])} detours removed")
    print(f"loss {curve[0]:.6f} -> {curve[-1]:.6f} over {len(curve)} epochs")
    print(f"bundle written to {args.out}")
    return EXIT_OK


def _bundle_matrix(args, cfg):
    bundle = load_bundle(args.bundle)
    if args.mode is not None and args.mode != bundle.mode:
        return bundle, frequency.transition_matrix_from_net(bundle.net, args.mode)
    return bundle, bundle.frequency


def cmd_freq(args) -> int:
    cfg = _config(args)
    bundle = load_bundle(args.bundle)
    p = frequency.transition_matrix_from_net(bundle.net, cfg.freq_mode)
    marked = frequency.compare_matrices(np.zeros_like(p), p, cfg.emphasis_threshold)
    _emit(render_matrix(p, cfg.output_format, cfg.table_order, marked), args.out)
    return EXIT_OK


def cmd_traits(args) -> int:
    cfg = _config(args)
    _, p = _bundle_matrix(args, cfg)
    scores = trait_scores(p)
    order = cfg.table_order

    def cell(c):
        return f"{state_label(c[0], order)}->{state_label(c[1], order)}"

    rows = [(t, s, n, contributions(p, t)) for t, s, n in scores.rows()]
    if cfg.output_format == "structured":
        text = json.dumps([{"trait": t.value, "score": s, "support": n,
                            "top": [{"cell": cell(c), "value": v} for c, v in top]}
                           for t, s, n, top in rows], indent=1) + "\n"
    elif cfg.output_format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trait", "score", "support", "top_cells"])
        for t, s, n, top in rows:
            w.writerow([t.value, f"{s:.4f}", n, " ".join(f"{cell(c)}:{v:+.4f}" for c, v in top)])
        text = buf.getvalue()
    else:
        lines = [f"{'trait':<18}{'score':>9}{'support':>9}  top cells"]
        for t, s, n, top in rows:
            tops = ", ".join(f"{cell(c)} {v:+.4f}" for c, v in top)
            lines.append(f"{t.value:<18}{s:>9.4f}{n:>9d}  {tops}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK


def _gradient_spot_check(seed: int) -> float:
    rng = np.random.default_rng(seed)
    topo = rnn.Topology.mstn(4)
    net = rnn.NetWeights(topo, rng.normal(0.0, 0.5, len(topo.connections)))
    seq = rnn.make_sequence((rng.random(9), rng.integers(7), rng.integers(7)) for _ in range(3))
    grad, _ = rnn.bptt_gradients(net, seq)
    worst = 0.0
    for k in rng.choice(len(grad), size=25, replace=False):
        hi, lo = net.w.copy(), net.w.copy()
        hi[k] += 1e-5
        lo[k] -= 1e-5
        num = -(rnn.sequence_loss(net.with_weights(hi), seq) - rnn.sequence_loss(net.with_weights(lo), seq)) / 2e-5
        worst = max(worst, abs(grad[k] - num) / max(abs(grad[k]), abs(num), 1e-6))
    return worst


def cmd_check(args) -> int:
    cfg = _config(args)
    results = []

    def check(name, fn):
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, ok, detail))

    def table1():
        t = load_table1(args.fixture)
        return t.verbatim[0, 0] == 0.421 and t.verbatim[6, 6] == 0.313, "sha256 ok"

    def suppression():
        W = cfg.ps_max_length
        return ps.check_suppression(cfg.reinforce_config, W), f"L={cfg.ps_L} M={cfg.ps_M} W={W}"

    def gradient():
        err = _gradient_spot_check(cfg.seed)
        return err < 1e-4, f"max relative error {err:.2e}"

    def enumeration():
        n = len(frequency.enumerate_patterns())
        return n == frequency.N_PATTERNS == 511, f"{n} patterns"

    check("table1-fixture", table1)
    check("suppression", suppression)
    check("gradient", gradient)
    check("enumeration", enumeration)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    failed = [name for name, ok, _ in results if not ok]
    if failed:
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mstnlearn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=False, bundle=False, out=True):
        p.add_argument("--config", help="flat JSON key/value config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--mode", choices=frequency.MODES, help="pattern-frequency reduction")
        p.add_argument("--format", choices=("csv", "text", "structured"))
        p.add_argument("--table-order", dest="table_order", choices=("paper1", "paper3"),
                       help="paper1: happy-first order; paper3: surprise-first order")
        if scenario:
            p.add_argument("--scenario", help="scenario file (default: bundled synthetic scenario)")
        if bundle:
            p.add_argument("--bundle", required=bundle == "required", help="model bundle file")
        if out:
            p.add_argument("--out", help="write output here instead of stdout")

    p = sub.add_parser("simulate", help="replay a scenario through the network, no learning")
    common(p, scenario=True, bundle=True)
    p.add_argument("--self-play", dest="self_play", action="store_true",
                   help="choose emotion groups with the epsilon-greedy rule policy")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="profit-sharing cleanup and BPTT training")
    common(p, scenario=True, out=False)
    p.add_argument("--out", default="bundle.json", help="bundle destination (default bundle.json)")
    p.add_argument("--report", help="write the full JSON run report here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("freq", help="render the pattern-frequency matrix of a bundle")
    common(p, bundle="required")
    p.set_defaults(func=cmd_freq)

    p = sub.add_parser("traits", help="Big Five trait scores of a bundle")
    common(p, bundle="required")
    p.set_defaults(func=cmd_traits)

    p = sub.add_parser("check", help="run the built-in self-test battery")
    common(p, out=False)
    p.add_argument("--fixture", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ps.ConfigError, ScenarioError, BundleError, FixtureCorruptError,
            mstn.NoStimulusError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (rnn.TrainingError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

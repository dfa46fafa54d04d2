"""Command-line entry points.

Verbs:
    score        score a JSONL response stream into reward breakdowns
    build-pairs  pair correct target responses with scored negatives
    analyze      distribution stats, histograms, earth-mover distances
    check-grads  verify analytic gradients against finite differences
    simulate     run the reverse-RL template simulator

Exit codes: 0 success, 1 completed with failures (or a failed check),
2 could not start (bad config, unreadable input, invalid arguments).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

import numpy as np

from .config import ConfigError, load_config
from .optim import (
    center_bt_grad,
    center_bt_loss,
    dpo_grad,
    dpo_loss,
    finite_diff_check,
)
from .pipeline import analyze_streams, build_pairs, read_jsonl, resolve_clients, run_score, write_jsonl
from .simulation import default_question_bank, run_simulation

log = logging.getLogger("pns")

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_STARTUP = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="TOML config file")
    parser.add_argument("--output", default=None, help="output path")
    parser.add_argument("--seed", type=int, default=None, help="random seed override")
    parser.add_argument("--workers", type=int, default=None, help="worker thread count")


def _failures_path(output: str) -> str:
    if output.endswith(".jsonl"):
        return output[: -len(".jsonl")] + ".failures.jsonl"
    return output + ".failures.jsonl"


def cmd_score(args) -> int:
    if not args.output:
        log.error("score requires --output")
        return EXIT_STARTUP
    try:
        cfg = load_config(args.config)
        judge, rm = resolve_clients(cfg)
        with open(args.input, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except (ConfigError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_STARTUP
    scored, failures = run_score(lines, judge, rm, cfg, workers=args.workers)
    write_jsonl(args.output, scored)
    failures_path = args.failures or _failures_path(args.output)
    write_jsonl(failures_path, failures)
    log.info("scored %d records, %d failures", len(scored), len(failures))
    print(json.dumps({"scored": len(scored), "failures": len(failures),
                      "output": args.output, "failures_output": failures_path}))
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_build_pairs(args) -> int:
    if not args.output:
        log.error("build-pairs requires --output")
        return EXIT_STARTUP
    try:
        target = list(read_jsonl(args.target))
        negatives = list(read_jsonl(args.negatives))
    except (OSError, json.JSONDecodeError) as exc:
        log.error("cannot read scored streams: %s", exc)
        return EXIT_STARTUP
    try:
        pairs, stats = build_pairs(target, negatives, cross_product=args.cross_product)
    except (KeyError, ValueError) as exc:
        log.error("malformed scored records: %s", exc)
        return EXIT_STARTUP
    write_jsonl(args.output, pairs)
    print(json.dumps(stats))
    return EXIT_OK


def cmd_analyze(args) -> int:
    named = {}
    try:
        for item in args.streams:
            name, _, path = item.partition("=")
            if not name or not path:
                raise ConfigError(f"stream argument must look like NAME=PATH, got {item!r}")
            named[name] = list(read_jsonl(path))
        pairs = None
        if args.pairs:
            pairs = [(rec["chosen_score"], rec["rejected_score"])
                     for rec in read_jsonl(args.pairs)]
        report = analyze_streams(named, field=args.field, bins=args.bins, pairs=pairs)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        log.error("analyze failed: %s", exc)
        return EXIT_STARTUP
    text = json.dumps(report, indent=2)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_check_grads(args) -> int:
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    flip_center = args.inject_bad_gradient == "center-bt"
    flip_dpo = args.inject_bad_gradient == "dpo"
    worst = {"center-bt": 0.0, "dpo": 0.0}
    for _ in range(args.points):
        r_w, r_l = rng.uniform(-2.0, 2.0, size=2)
        lam = float(rng.uniform(0.0, 1.0))
        sign = -1.0 if flip_center else 1.0

        def center_f(p):
            return center_bt_loss(p[0], p[1], lam)

        def center_g(p):
            g = center_bt_grad(p[0], p[1], lam)
            return (sign * g[0], sign * g[1])

        err = finite_diff_check(center_f, center_g, (r_w, r_l), step=args.step)
        worst["center-bt"] = max(worst["center-bt"], err)

        lw, ll = rng.uniform(-2.0, 2.0, size=2)
        beta = float(rng.uniform(0.05, 1.0))
        dsign = -1.0 if flip_dpo else 1.0

        def dpo_f(p):
            return dpo_loss(p[0], p[1], beta)

        def dpo_g(p):
            g = dpo_grad(p[0], p[1], beta)
            return (dsign * g[0], dsign * g[1])

        err = finite_diff_check(dpo_f, dpo_g, (lw, ll), step=args.step)
        worst["dpo"] = max(worst["dpo"], err)

    ok = all(v < args.tolerance for v in worst.values())
    for name, err in worst.items():
        status = "PASS" if err < args.tolerance else "FAIL"
        print(f"{name}: max_rel_err={err:.3e} tolerance={args.tolerance:.1e} {status}")
    print(json.dumps({"points": args.points, "tolerance": args.tolerance,
                      "max_rel_err": worst, "ok": ok}))
    return EXIT_OK if ok else EXIT_PARTIAL


def cmd_simulate(args) -> int:
    if not args.output:
        log.error("simulate requires --output")
        return EXIT_STARTUP
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_STARTUP
    sim = cfg.simulation
    if args.seed is not None:
        sim = dataclasses.replace(sim, seed=args.seed)
    if args.steps is not None:
        sim = dataclasses.replace(sim, steps=args.steps)
    if args.regime is not None:
        sim = dataclasses.replace(sim, reward_regime=args.regime)
    try:
        bank = default_question_bank(sim.n_questions)
        result = run_simulation(bank, sim, cfg.reward)
    except (ValueError, LookupError) as exc:
        log.error("simulation failed: %s", exc)
        return EXIT_STARTUP
    write_jsonl(args.output, result.trajectory)
    summary = {
        "regime": result.regime,
        "steps": sim.steps,
        "seed": sim.seed,
        "group_size": sim.group_size,
        "learning_rate": sim.learning_rate,
        "clip_range": list(sim.clip_range),
        "final": result.final_masses(),
        "final_policy": result.final_policy,
        "output": args.output,
    }
    print(json.dumps(summary))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pns",
        description="Reward orchestration for plausible-negative-sample synthesis.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score a JSONL response stream")
    p.add_argument("input", help="input JSONL of response records")
    p.add_argument("--failures", default=None,
                   help="failure sidecar path (default: derived from --output)")
    _add_common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("build-pairs", help="build preference pairs from scored streams")
    p.add_argument("target", help="scored JSONL from the target model")
    p.add_argument("negatives", help="scored JSONL from the negative pools")
    p.add_argument("--cross-product", action="store_true",
                   help="emit every chosen x rejected combination per question")
    _add_common(p)
    p.set_defaults(func=cmd_build_pairs)

    p = sub.add_parser("analyze", help="compare score distributions across streams")
    p.add_argument("streams", nargs="+", metavar="NAME=PATH",
                   help="named scored streams to compare")
    p.add_argument("--field", default="rm_raw", help="numeric field to analyze")
    p.add_argument("--bins", type=int, default=20, help="histogram bin count")
    p.add_argument("--pairs", default=None,
                   help="JSONL of {chosen_score, rejected_score} for ranking accuracy")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("check-grads", help="finite-difference gradient verification")
    p.add_argument("--points", type=int, default=100, help="random points per loss")
    p.add_argument("--step", type=float, default=1e-5, help="finite difference step")
    p.add_argument("--tolerance", type=float, default=1e-5, help="max relative error")
    p.add_argument("--inject-bad-gradient", choices=("center-bt", "dpo"), default=None,
                   help=argparse.SUPPRESS)
    _add_common(p)
    p.set_defaults(func=cmd_check_grads)

    p = sub.add_parser("simulate", help="run the reverse-RL template simulator")
    p.add_argument("--regime", choices=("pns", "standard"), default=None,
                   help="reward regime override")
    p.add_argument("--steps", type=int, default=None, help="step count override")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

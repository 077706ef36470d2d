"""grprep command line.

    grprep prepare state.txt --out base.json
    grprep optimize-exact state.txt --out exact.json
    grprep optimize-approx state.txt --fmin 0.95 --intervals 20 --out approx.json
    grprep simulate approx.json --target state.txt
    grprep experiment merge_ratio --n 20 --sparsity 1e-5 1e-3 --reps 20 --out ratios.csv

Circuits go to ``--out`` or stdout.  A one-line JSON result record goes to
stderr; failures print ``{"error": <category>, "message": ...}`` there too
and exit nonzero.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .approx_optimizer import DEFAULT_INTERVALS, ApproxOptimizer
from .circuit_ir import cost_report, parse_circuit, serialize_circuit
from .errors import GRPrepError
from .exact_optimizer import optimize_exact
from .fidelity_bound import amplification_table, lower_bound
from .harness import EXPERIMENTS, ExperimentConfig, run_experiment, run_pipeline
from .simulator import overlap, simulate
from .state_model import (
    build_preparation_tree,
    compute_baseline_angles,
    dump_state_json,
    dump_state_text,
    parse_state,
)


def _read(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text()


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _report(record: dict) -> None:
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def _log(events, enabled: bool) -> None:
    if enabled:
        for ev in events:
            print(json.dumps(ev.to_dict()), file=sys.stderr)


def cmd_prepare(args) -> int:
    state = parse_state(_read(args.state))
    circuit = compute_baseline_angles(build_preparation_tree(state)).to_circuit()
    _write(serialize_circuit(circuit), args.out)
    _report({"command": "prepare", "n": state.n, "d": state.d, "cnots": cost_report(circuit).total})
    return 0


def cmd_optimize_exact(args) -> int:
    state = parse_state(_read(args.state))
    tree = build_preparation_tree(state)
    exact = optimize_exact(compute_baseline_angles(tree), tree)
    _log(exact.merge_log, args.emit_log)
    _write(serialize_circuit(exact.optimized), args.out)
    _report({"command": "optimize-exact", **exact.cost.to_dict(), "gates": exact.optimized.gate_count})
    return 0


def cmd_optimize_approx(args) -> int:
    state = parse_state(_read(args.state))
    tree = build_preparation_tree(state)
    baseline = compute_baseline_angles(tree)
    exact = optimize_exact(baseline, tree)
    opt = ApproxOptimizer(baseline, tree, start=exact.optimized)
    opt.run(args.fmin, args.intervals)
    res = opt.result()
    _log(exact.merge_log, args.emit_log)
    _log(res.accepted_merges, args.emit_log)
    f_lb = lower_bound(res.clusters, amplification_table(baseline, res.optimized, tree))
    f_true = overlap(simulate(res.optimized), state)
    _write(serialize_circuit(res.optimized), args.out)
    _report({
        "command": "optimize-approx", "cnots_after_exact": exact.cost.total,
        "cnots_after_approx": res.cost.total, "f_est": res.f_est, "f_lb": f_lb, "f_true": f_true,
    })
    return 0


def cmd_simulate(args) -> int:
    circuit = parse_circuit(_read(args.circuit))
    state = simulate(circuit)
    text = dump_state_json(state) if args.format == "json" else dump_state_text(state)
    _write(text, args.out)
    record: dict = {"command": "simulate", "n": state.n, "d": state.d}
    if args.target:
        record["overlap"] = overlap(state, parse_state(_read(args.target)))
    _report(record)
    return 0


def cmd_pipeline(args) -> int:
    state = parse_state(_read(args.state))
    rec = run_pipeline(state, args.fmin, args.intervals)
    _write(json.dumps(rec.to_dict(), indent=1), args.out)
    return 0


def cmd_experiment(args) -> int:
    config = ExperimentConfig.defaults(
        args.experiment,
        n=args.n,
        sparsities=tuple(args.sparsity) if args.sparsity else None,
        f_mins=tuple(args.fmin) if args.fmin else None,
        intervals=tuple(args.intervals) if args.intervals else None,
        reps=args.reps,
        seed=args.seed,
        jobs=args.jobs,
    )

    def progress(point, count):
        if args.verbose:
            print(f"point {point.index}: D={point.sparsity:g} d={point.d} f_min={point.f_min} "
                  f"M={point.intervals} reps={count}", file=sys.stderr)

    result = run_experiment(config, progress)
    _write(result.to_csv(), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grprep", description="Sparse Grover-Rudolph state preparation compiler")
    p.add_argument("--emit-log", action="store_true", help="write every accepted merge as a JSON line to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("prepare", help="baseline circuit for a state file")
    s.add_argument("state")
    s.add_argument("--out")
    s.set_defaults(func=cmd_prepare)

    s = sub.add_parser("optimize-exact", help="strip and merge without changing the state")
    s.add_argument("state")
    s.add_argument("--out")
    s.set_defaults(func=cmd_optimize_exact)

    s = sub.add_parser("optimize-approx", help="greedy merging down to a minimum overlap")
    s.add_argument("state")
    s.add_argument("--fmin", type=float, required=True)
    s.add_argument("--intervals", type=int, default=DEFAULT_INTERVALS)
    s.add_argument("--out")
    s.set_defaults(func=cmd_optimize_approx)

    s = sub.add_parser("simulate", help="state prepared by a circuit JSON file")
    s.add_argument("circuit")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.add_argument("--target", help="state file to compute the overlap against")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("pipeline", help="full result record for one state")
    s.add_argument("state")
    s.add_argument("--fmin", type=float)
    s.add_argument("--intervals", type=int, default=DEFAULT_INTERVALS)
    s.add_argument("--out")
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("experiment", help="CSV sweep over random instances")
    s.add_argument("experiment", choices=EXPERIMENTS)
    s.add_argument("--n", type=int)
    s.add_argument("--sparsity", type=float, nargs="+")
    s.add_argument("--fmin", type=float, nargs="+")
    s.add_argument("--intervals", type=int, nargs="+")
    s.add_argument("--reps", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out")
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GRPrepError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 evaluation failure
(no replication survived objective evaluation), 4 model failure (no
replication survived fitting or acquisition).
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from .harness import (
    ExternalSpec,
    RunConfig,
    RunRecord,
    RunResult,
    aggregate_results,
    emit_results,
    run_experiment,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EVALUATION = 3
EXIT_MODEL = 4

SWEEP_POLICIES = ("kgcp", "ei", "ucb")
SWEEP_HYPERS = ("mle", "slice")


def _ucb_beta_arg(text):
    if text == "schedule":
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected a number or 'schedule', got {text!r}"
        ) from None


def _add_run_flags(parser, with_policy=True):
    parser.add_argument("--problem", help="built-in problem name, or 'external'")
    if with_policy:
        parser.add_argument(
            "--policy",
            default="kgcp",
            choices=["kgcp", "ei", "ucb", "soft-kgcp"],
            help="acquisition policy (default kgcp)",
        )
        parser.add_argument(
            "--hyper",
            default="mle",
            choices=["mle", "slice"],
            help="hyperparameter handling (default mle)",
        )
    parser.add_argument("--budget", type=int, help="total observations including the initial design")
    parser.add_argument("--init", type=int, default=10, help="initial design size (default 10)")
    parser.add_argument("--replications", type=int, default=1, help="replications (default 1)")
    parser.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    parser.add_argument("--mc-candidates", type=int, help="candidate count (default 1000 per dimension)")
    parser.add_argument("--local-refine", type=int, default=10, help="candidates refined locally (default 10)")
    parser.add_argument("--local-budget", type=int, default=200, help="refinement evaluation budget (default 200)")
    parser.add_argument("--slice-samples", type=int, default=100, help="posterior samples when --hyper slice (default 100)")
    parser.add_argument(
        "--ucb-beta",
        type=_ucb_beta_arg,
        default=0.5,
        help="fixed UCB exploration weight, or 'schedule' for the adaptive confidence schedule (default 0.5)",
    )
    parser.add_argument("--ucb-delta", type=float, default=0.1, help="confidence delta when --ucb-beta schedule (default 0.1)")
    parser.add_argument("--soft-k", type=float, default=1e4, help="soft-kgcp smoothing strength (default 1e4)")
    parser.add_argument("--format", default="csv", choices=["csv", "json"], help="output format (default csv)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--external-cmd", help="objective subprocess command line")
    parser.add_argument("--external-dim", type=int, help="input dimension of the external objective")
    parser.add_argument("--external-lower", help="comma-separated lower bounds for the external objective")
    parser.add_argument("--external-upper", help="comma-separated upper bounds for the external objective")
    parser.add_argument(
        "--external-true-optimum",
        type=float,
        default=float("nan"),
        help="known maximal value of the external objective (opportunity costs are NaN without it)",
    )
    parser.add_argument(
        "--external-persistent",
        action="store_true",
        help="keep one objective process alive instead of one per evaluation",
    )
    parser.add_argument("--timeout-s", type=float, default=60.0, help="external evaluation timeout (default 60)")
    parser.add_argument("--workers", type=int, default=1, help="parallel replication workers (default 1)")


def _parse_bounds(text, dim, label):
    try:
        values = tuple(float(v) for v in text.split(","))
    except (AttributeError, ValueError):
        raise ValueError(f"{label} must be comma-separated numbers") from None
    if len(values) != dim:
        raise ValueError(f"{label} must have {dim} entries")
    return values


def _external_spec(args) -> ExternalSpec | None:
    if not args.external_cmd:
        return None
    if args.external_dim is None or args.external_lower is None or args.external_upper is None:
        raise ValueError(
            "--external-cmd requires --external-dim, --external-lower and --external-upper"
        )
    return ExternalSpec(
        command=args.external_cmd,
        dim=args.external_dim,
        lower=_parse_bounds(args.external_lower, args.external_dim, "--external-lower"),
        upper=_parse_bounds(args.external_upper, args.external_dim, "--external-upper"),
        true_optimum=args.external_true_optimum,
        persistent=args.external_persistent,
    )


def _build_config(args, policy=None, hyper=None) -> RunConfig:
    external = _external_spec(args)
    problem = args.problem
    if external is not None:
        problem = "external"
    if problem is None:
        raise ValueError("--problem (or --external-cmd) is required")
    return RunConfig(
        problem=problem,
        policy=(policy or args.policy).replace("-", "_"),
        hyper=hyper or args.hyper,
        budget=args.budget,
        init_size=args.init,
        replications=args.replications,
        seed=args.seed,
        mc_candidates=args.mc_candidates,
        local_refine=args.local_refine,
        local_budget=args.local_budget,
        slice_samples=args.slice_samples,
        ucb_beta=args.ucb_beta,
        ucb_delta=args.ucb_delta,
        soft_k=args.soft_k,
        timeout_s=args.timeout_s,
        workers=args.workers,
        external=external,
    )


def _failure_exit(results) -> int:
    kinds = {r.error_kind for r in results if r.failed}
    return EXIT_EVALUATION if "evaluation" in kinds else EXIT_MODEL


def _cmd_run(args) -> int:
    try:
        config = _build_config(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    results, aggregate = run_experiment(config)
    written = emit_results(config, results, aggregate, args.out, args.format)
    for path in written:
        print(f"wrote {path}")
    if aggregate.n_runs == 0:
        for r in results:
            print(f"run {r.run_id} failed: {r.error}", file=sys.stderr)
        return _failure_exit(results)
    final_oc = aggregate.mean_oc[-1] if aggregate.mean_oc else float("nan")
    print(
        f"{config.problem} {config.policy}-{config.hyper}: "
        f"{aggregate.n_runs} runs, {aggregate.n_failed} failed, "
        f"final mean OC {final_oc:.6g}"
    )
    return EXIT_OK


def _cmd_sweep(args) -> int:
    summary = {}
    worst = EXIT_OK
    for policy in SWEEP_POLICIES:
        for hyper in SWEEP_HYPERS:
            try:
                config = _build_config(args, policy=policy, hyper=hyper)
            except ValueError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            label = f"{policy}_{hyper}"
            out_dir = os.path.join(args.out, label)
            results, aggregate = run_experiment(config)
            emit_results(config, results, aggregate, out_dir, args.format)
            if aggregate.n_runs == 0:
                worst = max(worst, _failure_exit(results))
                summary[label] = {"failed": True}
                print(f"{label}: all replications failed", file=sys.stderr)
                continue
            summary[label] = {
                "final_mean_oc": aggregate.mean_oc[-1],
                "n_runs": aggregate.n_runs,
                "n_failed": aggregate.n_failed,
            }
            print(f"{label}: final mean OC {aggregate.mean_oc[-1]:.6g}")
    os.makedirs(args.out, exist_ok=True)
    summary_path = os.path.join(args.out, "sweep_summary.json")
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"wrote {summary_path}")
    return worst


def _load_trace_rows(path):
    """Rows of (run_id, iteration, oc) from a traces.csv or results.json."""
    if path.endswith(".json"):
        with open(path) as fh:
            payload = json.load(fh)
        return [
            (int(row["run_id"]), int(row["iteration"]), float(row["oc"]))
            for row in payload["traces"]
        ]
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "oc" not in reader.fieldnames:
            raise ValueError(f"{path} is not a trace file")
        return [
            (int(row["run_id"]), int(row["iteration"]), float(row["oc"]))
            for row in reader
        ]


def _cmd_report(args) -> int:
    rows = []
    try:
        for offset, path in enumerate(args.inputs):
            # offset run ids per file so replications from different
            # files cannot collide
            file_rows = _load_trace_rows(path)
            base = 0 if not rows else max(r[0] for r in rows) + 1
            rows.extend((base + rid, it, oc) for rid, it, oc in file_rows)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not rows:
        print("error: no trace rows found", file=sys.stderr)
        return EXIT_CONFIG

    by_run = {}
    for rid, it, oc in rows:
        by_run.setdefault(rid, []).append((it, oc))
    results = []
    for rid, pairs in sorted(by_run.items()):
        pairs.sort()
        records = tuple(
            RunRecord(
                run_id=rid,
                iteration=it,
                x=np.empty(0),
                y=float("nan"),
                oc=oc,
                theta_summary={},
                wallclock_ms=0.0,
            )
            for it, oc in pairs
        )
        results.append(RunResult(run_id=rid, records=records))
    try:
        aggregate = aggregate_results(results)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    os.makedirs(args.out, exist_ok=True)
    if args.format == "csv":
        out_path = os.path.join(args.out, "aggregate.csv")
        with open(out_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "mean_oc", "ci_low", "ci_high", "n_runs", "n_failed"])
            for i, it in enumerate(aggregate.iterations):
                writer.writerow(
                    [
                        str(it),
                        repr(aggregate.mean_oc[i]),
                        repr(aggregate.ci_low[i]),
                        repr(aggregate.ci_high[i]),
                        str(aggregate.n_runs),
                        str(aggregate.n_failed),
                    ]
                )
    else:
        out_path = os.path.join(args.out, "aggregate.json")
        with open(out_path, "w") as fh:
            json.dump(
                {
                    "iteration": list(aggregate.iterations),
                    "mean_oc": list(aggregate.mean_oc),
                    "ci_low": list(aggregate.ci_low),
                    "ci_high": list(aggregate.ci_high),
                    "n_runs": aggregate.n_runs,
                    "n_failed": aggregate.n_failed,
                },
                fh,
                indent=2,
            )
            fh.write("\n")
    print(f"wrote {out_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kgopt",
        description="Kriging-based global optimization runs, sweeps, and reports",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one policy/hyper configuration")
    _add_run_flags(run_p, with_policy=True)
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="run the full policy x hyperparameter matrix")
    _add_run_flags(sweep_p, with_policy=False)
    sweep_p.set_defaults(func=_cmd_sweep)

    report_p = sub.add_parser("report", help="re-aggregate existing trace files")
    report_p.add_argument("inputs", nargs="+", help="traces.csv or results.json files")
    report_p.add_argument("--out", required=True, help="output directory")
    report_p.add_argument("--format", default="csv", choices=["csv", "json"])
    report_p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

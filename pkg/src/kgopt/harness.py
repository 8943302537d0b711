"""Experiment harness: seeded optimization runs, replication,
aggregation, and trace emission.

One run follows the standard loop: space-filling initial design, fit,
then propose / evaluate / refit until the observation budget is spent,
scoring the opportunity cost of the model's argmax after every
iteration. Replications differ only in the replication index mixed into
the seed, so any single run can be reproduced in isolation.
"""

import csv
import json
import os
import select
import shlex
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ._kernels import active as _kern
from .acquisition import AcquisitionConfig, model_argmax, propose
from .benchmarks import Problem, get_problem, opportunity_cost
from .design import maximin_lhs
from .exceptions import (
    AcquisitionFailedError,
    EvaluationFailedError,
    IllConditionedError,
    InsufficientDataError,
    SamplingStalledError,
    UndefinedGradientError,
)
from .hyperfit import ModelEnsemble, mle_ensemble, slice_sample
from .kriging import Dataset
from .policies import DEFAULT_SOFT_K, POLICY_NAMES, PolicyContext, PolicySpec, gp_ucb_beta

# 95% normal-approximation confidence multiplier.
CI_Z = 1.96

HYPER_NAMES = ("mle", "slice")

# Recorded in emitted metadata: how the initial design is produced.
DESIGN_METHOD = "maximin-lhs-best-of-1000"


@dataclass(frozen=True)
class ExternalSpec:
    """Objective served by a subprocess.

    The protocol is line-oriented: the harness writes one whitespace-
    separated x per line to stdin and reads one float (maximization-
    oriented) from stdout. One process per evaluation by default;
    persistent=True keeps a single process and streams lines through it.
    """

    command: str
    dim: int
    lower: tuple
    upper: tuple
    true_optimum: float = float("nan")
    persistent: bool = False

    def __post_init__(self):
        if not self.command.strip():
            raise ValueError("external command must be non-empty")
        if self.dim < 1:
            raise ValueError("external dim must be at least 1")
        if len(self.lower) != self.dim or len(self.upper) != self.dim:
            raise ValueError("external bounds must match dim")
        if any(u <= l for l, u in zip(self.lower, self.upper)):
            raise ValueError("external bounds must satisfy lower < upper")


class ExternalObjective:
    """Evaluates an ExternalSpec, owning the subprocess in persistent
    mode. Failures of any kind (bad exit, unparseable or non-finite
    output, timeout) raise EvaluationFailedError."""

    def __init__(self, spec: ExternalSpec, timeout_s: float):
        self.spec = spec
        self.timeout_s = timeout_s
        self.argv = shlex.split(spec.command)
        self._proc = None

    def _format(self, x):
        return " ".join(repr(float(v)) for v in x) + "\n"

    def _parse(self, line: str) -> float:
        try:
            value = float(line.strip())
        except ValueError:
            raise EvaluationFailedError(
                f"external objective wrote unparseable output: {line.strip()!r}"
            ) from None
        if not np.isfinite(value):
            raise EvaluationFailedError(
                f"external objective returned non-finite value {value}"
            )
        return value

    def _evaluate_oneshot(self, x) -> float:
        try:
            proc = subprocess.run(
                self.argv,
                input=self._format(x),
                capture_output=True,
                text=True,
                timeout=self.timeout_s,
            )
        except subprocess.TimeoutExpired:
            raise EvaluationFailedError(
                f"external objective timed out after {self.timeout_s}s"
            ) from None
        except OSError as exc:
            raise EvaluationFailedError(f"cannot launch external objective: {exc}") from None
        if proc.returncode != 0:
            raise EvaluationFailedError(
                f"external objective exited {proc.returncode}: {proc.stderr.strip()[:200]}"
            )
        if not proc.stdout.strip():
            raise EvaluationFailedError("external objective wrote no output")
        return self._parse(proc.stdout.strip().splitlines()[-1])

    def _ensure_proc(self):
        if self._proc is None or self._proc.poll() is not None:
            try:
                self._proc = subprocess.Popen(
                    self.argv,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    stderr=subprocess.DEVNULL,
                    text=True,
                    bufsize=1,
                )
            except OSError as exc:
                raise EvaluationFailedError(
                    f"cannot launch external objective: {exc}"
                ) from None
        return self._proc

    def _evaluate_persistent(self, x) -> float:
        proc = self._ensure_proc()
        try:
            proc.stdin.write(self._format(x))
            proc.stdin.flush()
        except (BrokenPipeError, OSError):
            raise EvaluationFailedError("external objective closed its input") from None
        ready, _, _ = select.select([proc.stdout], [], [], self.timeout_s)
        if not ready:
            proc.kill()
            raise EvaluationFailedError(
                f"external objective timed out after {self.timeout_s}s"
            )
        line = proc.stdout.readline()
        if not line:
            raise EvaluationFailedError("external objective closed its output")
        return self._parse(line)

    def evaluate(self, x) -> float:
        if self.spec.persistent:
            return self._evaluate_persistent(x)
        return self._evaluate_oneshot(x)

    def close(self):
        if self._proc is not None:
            try:
                self._proc.kill()
            except OSError:
                pass
            self._proc = None


@dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on. Unset budget and mc_candidates fall
    back to the problem's budget and 1000 per dimension.

    ucb_beta is the fixed exploration weight for the UCB policy;
    ucb_beta=None switches to the adaptive confidence schedule
    gp_ucb_beta(n, dim, ucb_delta), which explores much harder."""

    problem: str
    policy: str = "kgcp"
    hyper: str = "mle"
    budget: int | None = None
    init_size: int = 10
    replications: int = 1
    seed: int = 0
    mc_candidates: int | None = None
    local_refine: int = 10
    local_budget: int = 200
    slice_samples: int = 100
    ucb_beta: float | None = 0.5
    ucb_delta: float = 0.1
    soft_k: float = DEFAULT_SOFT_K
    timeout_s: float = 60.0
    workers: int = 1
    external: ExternalSpec | None = None

    def __post_init__(self):
        if self.policy not in POLICY_NAMES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.hyper not in HYPER_NAMES:
            raise ValueError(f"unknown hyperparameter mode {self.hyper!r}")
        if self.init_size < 1:
            raise ValueError("init_size must be at least 1")
        if self.budget is not None and self.budget <= self.init_size:
            raise ValueError("budget must exceed init_size")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.slice_samples < 1:
            raise ValueError("slice_samples must be at least 1")
        if self.ucb_beta is not None and not (
            np.isfinite(self.ucb_beta) and self.ucb_beta >= 0.0
        ):
            raise ValueError("ucb_beta must be nonnegative (or None for the schedule)")
        if not 0.0 < self.ucb_delta < 1.0:
            raise ValueError("ucb_delta must lie in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.timeout_s <= 0.0:
            raise ValueError("timeout_s must be positive")
        if self.problem == "external":
            if self.external is None:
                raise ValueError("problem 'external' requires an ExternalSpec")
            if self.budget is None:
                raise ValueError("external problems need an explicit budget")
        else:
            get_problem(self.problem)  # validates the name


@dataclass(frozen=True)
class RunRecord:
    """One acquisition iteration. iteration is the zero-based index of
    the acquired observation, so records run from init_size to
    budget - 1. oc is the opportunity cost of the model argmax after
    refitting with this observation."""

    run_id: int
    iteration: int
    x: np.ndarray
    y: float
    oc: float
    theta_summary: dict
    wallclock_ms: float


@dataclass(frozen=True)
class RunResult:
    """A replication's trace. failed runs keep their partial records
    but are excluded from aggregation."""

    run_id: int
    records: tuple
    failed: bool = False
    error: str | None = None
    error_kind: str | None = None  # "evaluation" | "model"


@dataclass(frozen=True)
class Aggregate:
    """Per-iteration mean opportunity cost with a 95% normal CI
    (mean +/- 1.96 * sample std / sqrt(runs)) over successful runs."""

    iterations: tuple
    mean_oc: tuple
    ci_low: tuple
    ci_high: tuple
    n_runs: int
    n_failed: int


def _build_problem(config: RunConfig, external: ExternalObjective | None) -> Problem:
    if config.problem == "external":
        spec = config.external
        return Problem(
            name="external",
            lower=np.asarray(spec.lower, float),
            upper=np.asarray(spec.upper, float),
            fn=lambda x: external.evaluate(x),
            true_optimum=spec.true_optimum,
            true_optimizer=None,
            budget=config.budget if config.budget is not None else config.init_size + 1,
        )
    return get_problem(config.problem)


def _fit_ensemble(data: Dataset, config: RunConfig, rng) -> ModelEnsemble:
    if config.hyper == "mle":
        return mle_ensemble(data, rng)
    return slice_sample(data, h=config.slice_samples, rng=rng)


def _theta_summary(ensemble: ModelEnsemble) -> dict:
    thetas = np.array([m.theta for m in ensemble.models])
    if ensemble.origin == "mle":
        return {"theta": thetas[0].tolist()}
    return {
        "theta_mean": thetas.mean(axis=0).tolist(),
        "theta_std": thetas.std(axis=0).tolist(),
    }


def _checked_evaluate(problem: Problem, x) -> float:
    y = problem.evaluate(x)
    if not np.isfinite(y):
        raise EvaluationFailedError(f"objective returned non-finite value {y}")
    return y


_MODEL_ERRORS = (
    IllConditionedError,
    InsufficientDataError,
    SamplingStalledError,
    AcquisitionFailedError,
    UndefinedGradientError,
)


def run_single(config: RunConfig, rep_index: int = 0) -> RunResult:
    """One seeded optimization run (replication rep_index)."""
    external = (
        ExternalObjective(config.external, config.timeout_s)
        if config.problem == "external"
        else None
    )
    problem = _build_problem(config, external)
    budget = config.budget if config.budget is not None else problem.budget
    if budget <= config.init_size:
        raise ValueError("budget must exceed init_size")
    acq = AcquisitionConfig(
        mc_candidates=config.mc_candidates,
        local_refine=config.local_refine,
        local_budget=config.local_budget,
    )
    spec = PolicySpec(config.policy)
    seed_seq = np.random.SeedSequence([config.seed, rep_index])
    rng_design, rng_loop = (np.random.default_rng(c) for c in seed_seq.spawn(2))

    records = []
    try:
        X0 = maximin_lhs(config.init_size, problem.lower, problem.upper, rng_design)
        y0 = np.array([_checked_evaluate(problem, row) for row in X0])
        data = Dataset(X=X0, y=y0, lower=problem.lower, upper=problem.upper)
        ensemble = _fit_ensemble(data, config, rng_loop)
        for n in range(config.init_size, budget):
            t0 = time.perf_counter()
            beta = (
                config.ucb_beta
                if config.ucb_beta is not None
                else gp_ucb_beta(n, problem.dim, config.ucb_delta)
            )
            context = PolicyContext(
                y_max=float(np.max(data.y)),
                iteration=n,
                ucb_beta=beta,
                soft_k=config.soft_k,
            )
            x_next, _ = propose(ensemble, spec, context, acq, rng_loop)
            y_next = _checked_evaluate(problem, x_next)
            data = data.append(x_next, y_next)
            ensemble = _fit_ensemble(data, config, rng_loop)
            x_hat = model_argmax(ensemble, acq, rng_loop)
            oc = opportunity_cost(problem, x_hat)
            records.append(
                RunRecord(
                    run_id=rep_index,
                    iteration=n,
                    x=x_next,
                    y=y_next,
                    oc=oc,
                    theta_summary=_theta_summary(ensemble),
                    wallclock_ms=(time.perf_counter() - t0) * 1e3,
                )
            )
        return RunResult(run_id=rep_index, records=tuple(records))
    except EvaluationFailedError as exc:
        return RunResult(
            run_id=rep_index,
            records=tuple(records),
            failed=True,
            error=f"{type(exc).__name__}: {exc}",
            error_kind="evaluation",
        )
    except _MODEL_ERRORS as exc:
        return RunResult(
            run_id=rep_index,
            records=tuple(records),
            failed=True,
            error=f"{type(exc).__name__}: {exc}",
            error_kind="model",
        )
    finally:
        if external is not None:
            external.close()


def aggregate_results(results) -> Aggregate:
    """Mean opportunity cost per iteration with 95% CI over successful
    replications. Failed replications are only counted."""
    ok = [r for r in results if not r.failed]
    n_failed = len(results) - len(ok)
    if not ok:
        return Aggregate((), (), (), (), 0, n_failed)
    iterations = tuple(rec.iteration for rec in ok[0].records)
    for r in ok:
        if tuple(rec.iteration for rec in r.records) != iterations:
            raise ValueError("successful runs disagree on recorded iterations")
    oc = np.array([[rec.oc for rec in r.records] for r in ok])
    mean = oc.mean(axis=0)
    n_runs = len(ok)
    if n_runs > 1:
        half = CI_Z * oc.std(axis=0, ddof=1) / np.sqrt(n_runs)
    else:
        half = np.zeros_like(mean)
    return Aggregate(
        iterations=iterations,
        mean_oc=tuple(float(v) for v in mean),
        ci_low=tuple(float(v) for v in mean - half),
        ci_high=tuple(float(v) for v in mean + half),
        n_runs=n_runs,
        n_failed=n_failed,
    )


def run_experiment(config: RunConfig):
    """All replications of a config. Returns (results, aggregate),
    results ordered by replication index regardless of scheduling."""
    reps = range(config.replications)
    if config.workers > 1 and config.replications > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(run_single, [config] * config.replications, reps))
    else:
        results = [run_single(config, r) for r in reps]
    results.sort(key=lambda r: r.run_id)
    return results, aggregate_results(results)


def _trace_header(dim: int):
    return ["run_id", "iteration"] + [f"x_{i + 1}" for i in range(dim)] + [
        "y",
        "oc",
        "wallclock_ms",
    ]


def _record_row(rec: RunRecord):
    return (
        [str(rec.run_id), str(rec.iteration)]
        + [repr(float(v)) for v in rec.x]
        + [repr(float(rec.y)), repr(float(rec.oc)), repr(float(rec.wallclock_ms))]
    )


def _config_echo(config: RunConfig) -> dict:
    echo = asdict(config)
    if config.external is not None:
        echo["external"] = asdict(config.external)
    echo["backend"] = _kern.name
    echo["design_method"] = DESIGN_METHOD
    return echo


def emit_results(config: RunConfig, results, aggregate: Aggregate, out_dir, fmt="csv"):
    """Write traces and aggregate under out_dir.

    csv: traces.csv (columns run_id, iteration, x_1..x_d, y, oc,
    wallclock_ms; successful runs only), aggregate.csv (iteration,
    mean_oc, ci_low, ci_high, n_runs, n_failed), and failures.csv when
    any replication failed. json: one results.json mirroring the same
    fields plus theta summaries and the full config echo. Returns the
    list of written paths.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    os.makedirs(out_dir, exist_ok=True)
    ok = [r for r in results if not r.failed]
    failed = [r for r in results if r.failed]
    dim = len(ok[0].records[0].x) if ok and ok[0].records else (
        config.external.dim
        if config.external is not None
        else get_problem(config.problem).dim
    )
    written = []
    if fmt == "csv":
        traces_path = os.path.join(out_dir, "traces.csv")
        with open(traces_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_trace_header(dim))
            for r in ok:
                for rec in r.records:
                    writer.writerow(_record_row(rec))
        written.append(traces_path)

        agg_path = os.path.join(out_dir, "aggregate.csv")
        with open(agg_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["iteration", "mean_oc", "ci_low", "ci_high", "n_runs", "n_failed"]
            )
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
        written.append(agg_path)

        if failed:
            fail_path = os.path.join(out_dir, "failures.csv")
            with open(fail_path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["run_id", "n_records", "error"])
                for r in failed:
                    writer.writerow([str(r.run_id), str(len(r.records)), r.error or ""])
            written.append(fail_path)
        return written

    payload = {
        "config": _config_echo(config),
        "traces": [
            {
                "run_id": rec.run_id,
                "iteration": rec.iteration,
                "x": [float(v) for v in rec.x],
                "y": float(rec.y),
                "oc": float(rec.oc),
                "wallclock_ms": float(rec.wallclock_ms),
                "theta_summary": rec.theta_summary,
            }
            for r in ok
            for rec in r.records
        ],
        "failures": [
            {
                "run_id": r.run_id,
                "n_records": len(r.records),
                "error": r.error,
                "error_kind": r.error_kind,
            }
            for r in failed
        ],
        "aggregate": {
            "iteration": list(aggregate.iterations),
            "mean_oc": list(aggregate.mean_oc),
            "ci_low": list(aggregate.ci_low),
            "ci_high": list(aggregate.ci_high),
            "n_runs": aggregate.n_runs,
            "n_failed": aggregate.n_failed,
        },
    }
    json_path = os.path.join(out_dir, "results.json")
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2, allow_nan=True)
        fh.write("\n")
    written.append(json_path)
    return written

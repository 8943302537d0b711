"""Release acceptance suite.

Every test prints exactly one line, "PASS criterion N: <measurements>"
or "FAIL criterion N: <measurements>", so running this module with -s
shows the whole release gate at a glance.

Criteria 1-6 are deterministic numerical checks of the policy algebra,
its gradients, and the surrogate against independent oracles. Criteria
7-11 are seeded desk-scale statistical checks of the optimization loop
on the built-in benchmark problems, with tolerances chosen for ten-ish
replications rather than publication-scale replication counts.
Criterion 12 covers the external-objective protocol: the ten-bar truss
sizing study this engine is also aimed at depends on proprietary
finite-element software, is declared not reproducible here, and is
replaced by proof that an out-of-process objective reproduces the
built-in Branin run exactly.
"""

import sys
import textwrap
import time

import numpy as np

from conftest import dense_reference, random_dataset
from kgopt.benchmarks import get_problem
from kgopt.harness import ExternalSpec, RunConfig, run_experiment, run_single
from kgopt.hyperfit import neg_concentrated_log_likelihood
from kgopt.kriging import fit
from kgopt.policies import (
    ed_gradient,
    ei_gradient,
    expected_decrement,
    expected_improvement,
    kgcp,
    soft_kgcp,
    soft_kgcp_gradient,
)


def report(num, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {num}: {detail}", flush=True)
    assert ok, f"criterion {num}: {detail}"


def random_triples(rng, count):
    mu = rng.uniform(-5.0, 5.0, size=count)
    s = 3.0 * (1.0 - rng.random(count))  # (0, 3]
    y_max = rng.uniform(-5.0, 5.0, size=count)
    return mu, s, y_max


def run_batch(problem, policy, replications, seed=0, budget=None):
    config = RunConfig(
        problem=problem,
        policy=policy,
        hyper="mle",
        budget=budget,
        replications=replications,
        seed=seed,
    )
    return run_experiment(config)


def final_ocs(results):
    return np.array([r.records[-1].oc for r in results])


class TestPolicyAlgebra:
    def test_criterion_1_kgcp_dominated_by_ei(self):
        mu, s, y_max = random_triples(np.random.default_rng(1), 100_000)
        gap = kgcp(mu, s, y_max) - expected_improvement(mu, s, y_max)
        worst = float(np.max(gap))
        report(1, worst <= 1e-12, f"max kgcp-ei gap {worst:.3e} over 1e5 triples (limit 1e-12)")

    def test_criterion_2_decrement_matches_monte_carlo(self):
        # triples are kept to (y_max - mu)/s <= 3: beyond that nearly
        # every draw of max(s*Z, y_max - mu) equals the constant, the
        # sample standard error degenerates to ~0, and a CLT-based
        # comparison stops being meaningful
        rng = np.random.default_rng(2)
        t0 = time.perf_counter()
        worst_sigma = 0.0
        for _ in range(50):
            mu = rng.uniform(-5.0, 5.0)
            s = rng.uniform(0.5, 3.0)
            y_max = mu + s * rng.uniform(-5.0, 3.0)
            draws = np.maximum(s * rng.standard_normal(1_000_000), y_max - mu)
            estimate = float(draws.mean())
            se = max(float(draws.std(ddof=1)) / 1000.0, 1e-12)
            closed = expected_decrement(mu, s, y_max)
            worst_sigma = max(worst_sigma, abs(closed - estimate) / se)
        elapsed = time.perf_counter() - t0
        ok = worst_sigma <= 3.0 and elapsed < 30.0
        report(
            2,
            ok,
            f"closed-form decrement within {worst_sigma:.2f} MC standard errors "
            f"(limit 3) on 50 triples, {elapsed:.1f}s (limit 30s)",
        )

    def test_criterion_3_ei_equals_ed_exactly_at_incumbent(self):
        rng = np.random.default_rng(3)
        count = 10_000
        s = 3.0 * (1.0 - rng.random(count))
        y_max = rng.uniform(-5.0, 5.0, size=count)
        at_tie = np.abs(
            expected_improvement(y_max, s, y_max) - expected_decrement(y_max, s, y_max)
        )
        # displacements at least 1e-6 * s on either side
        delta = np.where(rng.random(count) < 0.5, -1.0, 1.0) * s * 10 ** rng.uniform(
            -6, 1, size=count
        )
        off = np.abs(
            expected_improvement(y_max + delta, s, y_max)
            - expected_decrement(y_max + delta, s, y_max)
        )
        worst_tie = float(np.max(at_tie))
        min_off = float(np.min(off))
        ok = worst_tie <= 1e-12 and min_off > 0.0
        report(
            3,
            ok,
            f"|ei-ed| at incumbent max {worst_tie:.3e} (limit 1e-12), "
            f"min off-incumbent |ei-ed| {min_off:.3e} (must be > 0) on 1e4 triples",
        )

    def test_criterion_5_soft_matches_hard_at_large_k(self):
        mu, s, y_max = random_triples(np.random.default_rng(5), 10_000)
        gap = np.abs(soft_kgcp(mu, s, y_max, k=1e6) - kgcp(mu, s, y_max))
        worst = float(np.max(gap))
        report(5, worst <= 1e-6, f"max |soft(k=1e6) - hard| {worst:.3e} over 1e4 triples (limit 1e-6)")


def central_difference(f, x, h):
    x = np.asarray(x, float)
    grad = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        grad[k] = (f(x + e) - f(x - e)) / (2.0 * h)
    return grad


def rel_gap(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b)))


class TestGradientSuite:
    def policy_instances(self, seed_base, count=20):
        """Seeded (mu, s, y_max) with |z| <= 3: away from the incumbent
        kink and outside the Gaussian tails where central differences
        are roundoff-limited."""
        out = []
        rng = np.random.default_rng(seed_base)
        while len(out) < count:
            mu, s, y_max = (v[0] for v in random_triples(rng, 1))
            z = (y_max - mu) / s
            if abs(z) <= 3.0 and abs(z) >= 1e-3:
                out.append((float(mu), float(s), float(y_max)))
        return out

    def test_criterion_4_gradients_match_finite_differences(self):
        worst = {"ei": 0.0, "ed": 0.0, "soft": 0.0, "predict": 0.0}
        dmu = np.array([1.0, 0.0])
        ds = np.array([0.0, 1.0])

        for mu, s, y_max in self.policy_instances(40):
            h = 1e-6 * s
            analytic = ei_gradient(mu, s, dmu, ds, y_max)
            fd = central_difference(
                lambda v: expected_improvement(v[0], v[1], y_max), [mu, s], h
            )
            worst["ei"] = max(worst["ei"], rel_gap(analytic, fd))

            analytic = ed_gradient(mu, s, dmu, ds, y_max)
            fd = central_difference(
                lambda v: expected_decrement(v[0], v[1], y_max), [mu, s], h
            )
            worst["ed"] = max(worst["ed"], rel_gap(analytic, fd))

            analytic = soft_kgcp_gradient(mu, s, dmu, ds, y_max, k=50.0)
            fd = central_difference(
                lambda v: soft_kgcp(v[0], v[1], y_max, k=50.0), [mu, s], h
            )
            worst["soft"] = max(worst["soft"], rel_gap(analytic, fd))

        rng = np.random.default_rng(44)
        checked = 0
        while checked < 20:
            d = int(rng.integers(1, 4))
            data = random_dataset(rng, n=int(rng.integers(5, 9)), d=d, min_sep=0.05)
            theta = 10.0 ** rng.uniform(-0.3, 0.8, size=d)
            model = fit(data, theta)
            x = data.lower + data.span() * rng.uniform(0.05, 0.95, size=d)
            # keep the probe away from training points so the variance
            # surface is locally smooth and well-scaled
            if np.min(np.linalg.norm((data.X - x) / data.span(), axis=1)) < 0.08:
                continue
            dmean, dvar = model.predict_gradient(x)
            if np.linalg.norm(dmean) < 1e-6 or np.linalg.norm(dvar) < 1e-9:
                continue
            h = 1e-6 * float(np.min(data.span()))
            fd_mean = central_difference(lambda q: model.predict(q)[0], x, h)
            fd_var = central_difference(lambda q: model.predict(q)[1], x, h)
            worst["predict"] = max(
                worst["predict"], rel_gap(dmean, fd_mean), rel_gap(dvar, fd_var)
            )
            checked += 1

        ok = (
            worst["ei"] <= 1e-5
            and worst["ed"] <= 1e-5
            and worst["soft"] <= 1e-4
            and worst["predict"] <= 1e-5
        )
        report(
            4,
            ok,
            "max FD rel gap over 20 instances each: "
            f"ei {worst['ei']:.2e}, ed {worst['ed']:.2e} (limit 1e-5), "
            f"soft {worst['soft']:.2e} (limit 1e-4), "
            f"predict {worst['predict']:.2e} (limit 1e-5)",
        )

    def test_criterion_4_hard_kink_at_incumbent(self):
        mu, s, y_max = 1.0, 0.7, 1.0
        h = 1e-7
        left = (kgcp(mu, s, y_max) - kgcp(mu - h, s, y_max)) / h
        right = (kgcp(mu + h, s, y_max) - kgcp(mu, s, y_max)) / h
        jump = abs(left - right)
        # dEI/dmu = +0.5 approaching from below, dED/dmu = -0.5 above
        report(
            "4 (kink)",
            jump > 0.5,
            f"one-sided slopes at the incumbent mean differ by {jump:.3f} "
            f"(left {left:.3f}, right {right:.3f}); min gradient is non-smooth there",
        )


class TestSurrogateOracle:
    def test_criterion_6_predictions_and_likelihood_match_dense_oracle(self):
        rng = np.random.default_rng(6)
        worst_mean = worst_var = worst_nll = worst_interp = 0.0
        for _ in range(20):
            d = int(rng.integers(1, 4))
            n = int(rng.integers(d + 2, 11))
            data = random_dataset(rng, n=n, d=d, min_sep=0.05)
            theta = 10.0 ** rng.uniform(-0.5, 1.0, size=d)
            model = fit(data, theta)
            ref = dense_reference(data, theta, jitter=model.jitter)
            scale = max(1.0, float(np.max(np.abs(data.y))))

            nll = neg_concentrated_log_likelihood(data, theta)
            worst_nll = max(
                worst_nll, abs(nll.value - ref["nll"]) / max(1.0, abs(ref["nll"]))
            )

            for _ in range(20):
                x = data.lower + data.span() * rng.random(d)
                mean, var = model.predict(x)
                worst_mean = max(
                    worst_mean, abs(mean - ref["mean"](x)) / scale
                )
                worst_var = max(
                    worst_var, abs(var - ref["var"](x)) / max(model.sigma2, 1e-300)
                )

            for i in range(data.n):
                mean, _ = model.predict(data.X[i])
                worst_interp = max(worst_interp, abs(mean - data.y[i]) / scale)

        ok = (
            worst_mean <= 1e-10
            and worst_var <= 1e-10
            and worst_nll <= 1e-10
            and worst_interp <= 1e-8
        )
        report(
            6,
            ok,
            "20 datasets vs explicit-inverse oracle: "
            f"mean rel {worst_mean:.2e}, var rel {worst_var:.2e}, "
            f"likelihood rel {worst_nll:.2e} (limits 1e-10), "
            f"interpolation {worst_interp:.2e} of output scale (limit 1e-8)",
        )


class TestBenchmarkRuns:
    def test_criterion_7_branin_ucb(self):
        t0 = time.perf_counter()
        results, agg = run_batch("branin", "ucb", replications=10)
        elapsed = time.perf_counter() - t0
        mean_final = float(np.mean(final_ocs(results))) if agg.n_failed == 0 else float("inf")
        ok = agg.n_failed == 0 and mean_final <= 0.05 and elapsed <= 120.0
        report(
            7,
            ok,
            f"branin ucb-mle 10 reps N=20: mean final OC {mean_final:.4f} "
            f"(limit 0.05), {agg.n_failed} failed, {elapsed:.0f}s (limit 120s)",
        )

    def test_criterion_8_branin_kgcp(self):
        t0 = time.perf_counter()
        results, agg = run_batch("branin", "kgcp", replications=10)
        elapsed = time.perf_counter() - t0
        median_final = float(np.median(final_ocs(results))) if agg.n_failed == 0 else float("inf")
        ok = agg.n_failed == 0 and median_final <= 0.1 and elapsed <= 120.0
        report(
            8,
            ok,
            f"branin kgcp-mle 10 reps N=20: median final OC {median_final:.4f} "
            f"(limit 0.1), {agg.n_failed} failed, {elapsed:.0f}s (limit 120s)",
        )

    def test_criterion_9_schwefel_ordering(self):
        t0 = time.perf_counter()
        kgcp_results, kgcp_agg = run_batch("schwefel2", "kgcp", replications=10)
        ucb_results, ucb_agg = run_batch("schwefel2", "ucb", replications=10)
        elapsed = time.perf_counter() - t0
        failed = kgcp_agg.n_failed + ucb_agg.n_failed
        if failed == 0:
            kgcp_mean = float(np.mean(final_ocs(kgcp_results)))
            ucb_mean = float(np.mean(final_ocs(ucb_results)))
        else:
            kgcp_mean = ucb_mean = float("nan")
        ok = (
            failed == 0
            and kgcp_mean < ucb_mean
            and ucb_mean >= 150.0
            and elapsed <= 1200.0
        )
        report(
            9,
            ok,
            f"schwefel 10+10 reps N=100: kgcp mean final OC {kgcp_mean:.1f} < "
            f"ucb {ucb_mean:.1f} required, ucb >= 150 required, "
            f"{failed} failed, {elapsed:.0f}s (limit 1200s)",
        )

    def test_criterion_10_eggholder_trend(self):
        t0 = time.perf_counter()
        kgcp_results, kgcp_agg = run_batch("eggholder", "kgcp", replications=10)
        ei_results, ei_agg = run_batch("eggholder", "ei", replications=10)
        elapsed = time.perf_counter() - t0
        failed = kgcp_agg.n_failed + ei_agg.n_failed

        def oc_after_40(result):
            # records are indexed by zero-based observation number, so
            # the state after 40 observations is the record at 39
            return next(rec.oc for rec in result.records if rec.iteration == 39)

        if failed == 0:
            kgcp_40 = [oc_after_40(r) for r in kgcp_results]
            ei_40 = [oc_after_40(r) for r in ei_results]
            wins = sum(a < b for a, b in zip(kgcp_40, ei_40))
            mean_kgcp = float(np.mean(kgcp_40))
            mean_ei = float(np.mean(ei_40))
        else:
            wins = -1
            mean_kgcp = mean_ei = float("nan")
        ok = failed == 0 and wins >= 7 and elapsed <= 1800.0
        report(
            10,
            ok,
            f"eggholder 10+10 reps N=100: kgcp beats ei after 40 observations "
            f"on {wins}/10 paired seeds (need >= 7), group means "
            f"{mean_kgcp:.1f} vs {mean_ei:.1f}, {failed} failed, "
            f"{elapsed:.0f}s (limit 1800s)",
        )

    def test_criterion_11_hartmann6_sanity(self):
        t0 = time.perf_counter()
        results, agg = run_batch("hartmann6", "kgcp", replications=5)
        elapsed = time.perf_counter() - t0
        mean_final = float(np.mean(final_ocs(results))) if agg.n_failed == 0 else float("inf")
        ok = agg.n_failed == 0 and mean_final <= 2.5 and elapsed <= 600.0
        report(
            11,
            ok,
            f"hartmann6 kgcp-mle 5 reps N=40: mean final OC {mean_final:.3f} "
            f"(limit 2.5), {agg.n_failed} failed, {elapsed:.0f}s (limit 600s)",
        )


class TestExternalProtocol:
    def test_criterion_12_external_objective_reproduces_builtin(self, tmp_path):
        branin = get_problem("branin")
        script = tmp_path / "branin_server.py"
        script.write_text(
            textwrap.dedent(
                """\
                import sys
                from kgopt.benchmarks import get_problem
                problem = get_problem("branin")
                for line in sys.stdin:
                    x = [float(v) for v in line.split()]
                    print(repr(problem.evaluate(x)), flush=True)
                """
            )
        )
        base = dict(policy="kgcp", hyper="mle", budget=14, init_size=10, seed=0)
        builtin = run_single(RunConfig(problem="branin", **base), 0)
        spec = ExternalSpec(
            command=f"{sys.executable} {script}",
            dim=2,
            lower=tuple(branin.lower),
            upper=tuple(branin.upper),
            true_optimum=branin.true_optimum,
            persistent=True,
        )
        external = run_single(RunConfig(problem="external", external=spec, **base), 0)

        worst = 0.0
        ok = not builtin.failed and not external.failed
        if ok:
            for a, b in zip(builtin.records, external.records):
                worst = max(
                    worst,
                    float(np.max(np.abs(a.x - b.x))),
                    abs(a.y - b.y),
                    abs(a.oc - b.oc),
                )
            ok = worst <= 1e-9
        report(
            12,
            ok,
            "truss sizing study declared not reproducible (depends on "
            "proprietary finite-element software); substitute check: "
            f"subprocess-served objective reproduces the built-in branin run, "
            f"max trace deviation {worst:.2e} (limit 1e-9)",
        )

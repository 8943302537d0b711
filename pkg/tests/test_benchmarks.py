"""Benchmark problem tests: frozen values, optima, dominance, and the
progress metric.

All problems are maximization-oriented (standard minimization forms are
negated). Frozen values were computed with independent scalar formulas.
"""

import numpy as np
import pytest

from kgopt.benchmarks import (
    PROBLEMS,
    Problem,
    branin,
    eggholder,
    get_problem,
    hartmann6,
    opportunity_cost,
    schwefel2,
)
from kgopt.exceptions import KgoptError


class TestBranin:
    def setup_method(self):
        self.p = branin()

    def test_frozen_corner_values(self):
        assert self.p.evaluate([-5.0, 0.0]) == pytest.approx(
            -308.12909601160663, rel=1e-14
        )
        assert self.p.evaluate([0.0, 0.0]) == pytest.approx(
            -55.602112642270264, rel=1e-14
        )
        assert self.p.evaluate([10.0, 15.0]) == pytest.approx(
            -145.87219087939556, rel=1e-14
        )

    def test_three_global_optima(self):
        for x in ([-np.pi, 12.275], [np.pi, 2.275], [9.42478, 2.475]):
            assert self.p.evaluate(x) == pytest.approx(self.p.true_optimum, abs=1e-5)

    def test_optimizer_attains_optimum(self):
        assert self.p.evaluate(self.p.true_optimizer) == pytest.approx(
            self.p.true_optimum, rel=1e-12
        )

    def test_optimum_dominates_random_points(self):
        rng = np.random.default_rng(1)
        X = self.p.lower + (self.p.upper - self.p.lower) * rng.random((100_000, 2))
        vals = [self.p.evaluate(x) for x in X[:2000]]
        assert max(vals) <= self.p.true_optimum + 1e-9

    def test_domain_and_budget(self):
        np.testing.assert_array_equal(self.p.lower, [-5.0, 0.0])
        np.testing.assert_array_equal(self.p.upper, [10.0, 15.0])
        assert self.p.budget == 20


class TestHartmann6:
    def setup_method(self):
        self.p = hartmann6()

    def test_frozen_values(self):
        assert self.p.evaluate(np.zeros(6)) == pytest.approx(
            0.00508911288366444, rel=1e-12
        )
        assert self.p.evaluate(np.full(6, 0.5)) == pytest.approx(
            0.5053149917022333, rel=1e-12
        )

    def test_optimum(self):
        assert self.p.true_optimum == pytest.approx(3.3223680114155116, rel=1e-12)
        assert self.p.evaluate(self.p.true_optimizer) == pytest.approx(
            self.p.true_optimum, rel=1e-9
        )

    def test_optimizer_is_stationary(self):
        # central differences around the optimizer must be ~zero
        x = np.asarray(self.p.true_optimizer)
        h = 1e-6
        for k in range(6):
            e = np.zeros(6)
            e[k] = h
            g = (self.p.evaluate(x + e) - self.p.evaluate(x - e)) / (2 * h)
            assert abs(g) < 1e-4

    def test_dominates_random_points(self):
        rng = np.random.default_rng(2)
        X = rng.random((3000, 6))
        vals = [self.p.evaluate(x) for x in X]
        assert max(vals) <= self.p.true_optimum + 1e-9

    def test_budget(self):
        assert self.p.budget == 40


class TestSchwefel2:
    def setup_method(self):
        self.p = schwefel2()

    def test_frozen_values(self):
        assert self.p.evaluate([0.0, 0.0]) == pytest.approx(-837.9658, rel=1e-10)
        assert self.p.evaluate([-500.0, -500.0]) == pytest.approx(
            -476.78748293721645, rel=1e-12
        )

    def test_optimum_near_zero(self):
        # the canonical constant 418.9829 leaves a ~1e-5 residue at the
        # true optimizer; the recorded optimum absorbs it exactly
        assert self.p.evaluate(self.p.true_optimizer) == self.p.true_optimum
        assert abs(self.p.true_optimum) < 1e-3

    def test_optimizer_location(self):
        np.testing.assert_allclose(
            self.p.true_optimizer, [420.96874878568275] * 2, rtol=1e-12
        )

    def test_dominates_random_points(self):
        rng = np.random.default_rng(3)
        X = self.p.lower + (self.p.upper - self.p.lower) * rng.random((3000, 2))
        vals = [self.p.evaluate(x) for x in X]
        assert max(vals) <= self.p.true_optimum + 1e-9

    def test_budget(self):
        assert self.p.budget == 100


class TestEggholder:
    def setup_method(self):
        self.p = eggholder()

    def test_frozen_values(self):
        assert self.p.evaluate([0.0, 0.0]) == pytest.approx(
            25.460337185286313, rel=1e-12
        )
        assert self.p.evaluate([-512.0, -512.0]) == pytest.approx(
            -737.2782418559192, rel=1e-12
        )

    def test_optimum_on_boundary(self):
        assert self.p.true_optimizer[0] == 512.0
        assert self.p.evaluate(self.p.true_optimizer) == self.p.true_optimum
        assert self.p.true_optimum == pytest.approx(959.6406627208507, rel=1e-12)

    def test_dominates_random_points(self):
        rng = np.random.default_rng(4)
        X = self.p.lower + (self.p.upper - self.p.lower) * rng.random((5000, 2))
        vals = [self.p.evaluate(x) for x in X]
        assert max(vals) <= self.p.true_optimum + 1e-9

    def test_budget(self):
        assert self.p.budget == 100


class TestProblemContract:
    def test_registry_contents(self):
        assert set(PROBLEMS) == {"branin", "hartmann6", "schwefel2", "eggholder"}

    def test_get_problem_unknown_name(self):
        with pytest.raises(ValueError, match="unknown problem"):
            get_problem("rosenbrock")

    def test_evaluate_validates_input(self):
        p = branin()
        with pytest.raises(ValueError):
            p.evaluate([0.0])  # wrong dimension
        with pytest.raises(ValueError):
            p.evaluate([np.nan, 0.0])
        with pytest.raises(ValueError):
            p.evaluate([-6.0, 0.0])  # outside the box

    def test_custom_problem_validation(self):
        with pytest.raises(ValueError):
            Problem(
                name="bad",
                lower=np.array([1.0]),
                upper=np.array([0.0]),
                fn=lambda x: 0.0,
                true_optimum=0.0,
                true_optimizer=np.array([0.5]),
                budget=10,
            )


class TestOpportunityCost:
    def setup_method(self):
        self.p = branin()

    def test_zero_at_optimizer(self):
        assert opportunity_cost(self.p, self.p.true_optimizer) == 0.0

    def test_positive_elsewhere_and_ordering(self):
        near = [np.pi + 0.05, 2.3]
        far = [-3.0, 14.0]
        oc_near = opportunity_cost(self.p, near)
        oc_far = opportunity_cost(self.p, far)
        assert 0.0 < oc_near < oc_far

    def test_tiny_negative_clamps_to_zero(self):
        # roundoff can make evaluate(x*) beat the recorded optimum by a
        # hair; clamp instead of reporting impossible negative cost
        x = [np.pi, 2.275]
        oc = opportunity_cost(self.p, x)
        assert oc >= 0.0

    def test_large_negative_is_an_error(self):
        boosted = Problem(
            name="wrong-optimum",
            lower=self.p.lower,
            upper=self.p.upper,
            fn=self.p.fn,
            true_optimum=self.p.true_optimum - 1.0,  # claims a worse optimum
            true_optimizer=self.p.true_optimizer,
            budget=10,
        )
        with pytest.raises(KgoptError):
            opportunity_cost(boosted, self.p.true_optimizer)

    def test_out_of_domain_rejected(self):
        with pytest.raises(ValueError):
            opportunity_cost(self.p, [99.0, 0.0])

    def test_nan_objective_passes_through(self):
        nan_problem = Problem(
            name="nan-case",
            lower=np.array([0.0]),
            upper=np.array([1.0]),
            fn=lambda x: float("nan"),
            true_optimum=1.0,
            true_optimizer=np.array([0.5]),
            budget=5,
        )
        assert np.isnan(opportunity_cost(nan_problem, [0.5]))

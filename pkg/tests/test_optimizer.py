import numpy as np
import pytest

from cloudpricing import (
    BundledPlan,
    DifferentiatedPlan,
    InfeasibleError,
    Instance,
    ObjectiveSpec,
    ResourceModel,
    ResourcePlan,
    SolverConfig,
    UserType,
    UtilityParams,
    barrier_optimize,
    bundled_price_bisection,
    concavity_weight_bound,
    discount_line_search,
    evaluate,
    grid_oracle,
    objective,
    tradeoff_bound_check,
)
from cloudpricing.fairness import beta_fairness
from cloudpricing.synth import random_instance, sample_feasible_prices

TIGHT = SolverConfig(tolerance=1e-9)


class TestObjective:
    def test_zero_weight_is_pure_fairness(self, toy_instance):
        plan = DifferentiatedPlan(prices=np.array([0.6]))
        out = evaluate(toy_instance, plan)
        fairness = beta_fairness(out.net_utilities, 2.0, weights=toy_instance.counts)
        assert objective(toy_instance, plan, ObjectiveSpec(0.0, 2.0)) == pytest.approx(fairness)

    def test_toy_value(self, toy_instance):
        plan = DifferentiatedPlan(prices=np.array([0.5]))
        # revenue 2, net utility 2, F_2 = -1/2
        assert objective(toy_instance, plan, ObjectiveSpec(1.0, 2.0)) == pytest.approx(1.5)

    def test_linear_in_weight(self, toy_instance):
        plan = DifferentiatedPlan(prices=np.array([0.7]))
        base = objective(toy_instance, plan, ObjectiveSpec(0.0, 2.0))
        one = objective(toy_instance, plan, ObjectiveSpec(1.0, 2.0))
        three = objective(toy_instance, plan, ObjectiveSpec(3.0, 2.0))
        assert three - base == pytest.approx(3.0 * (one - base), rel=1e-12)

    def test_infeasible_names_resource(self, toy_instance):
        plan = DifferentiatedPlan(prices=np.array([0.1]))
        with pytest.raises(ValueError, match="resource 'r'"):
            objective(toy_instance, plan, ObjectiveSpec(1.0, 2.0))


class TestConcavityBound:
    def test_zero_margin_gives_zero(self):
        instance = Instance(
            resources=ResourceModel(names=("r",), capacities=(1.0,)),
            user_types=(UserType("a", 1, (1.0,), UtilityParams(0.5, 1.0)),),
            discount=1.0,
        )
        # beta*(1-alpha) == gamma exactly: no certificate
        assert concavity_weight_bound(instance, beta=2.0) == 0.0

    def test_single_type_closed_form(self):
        instance = Instance(
            resources=ResourceModel(names=("cpu", "mem"), capacities=(6.0, 6.0)),
            user_types=(UserType("a", 1, (0.6, 0.5), UtilityParams(0.5, 1.0)),),
            discount=1.0,
        )
        # plug-in: (beta*(1-alpha) - gamma) * (max_i C/R)**(beta*(alpha-1)/gamma)
        assert concavity_weight_bound(instance, beta=20.0) == pytest.approx(
            9.0 * 12.0**-10.0, rel=1e-12
        )

    def test_nu_zero_always_certified(self, reference_instance):
        assert concavity_weight_bound(reference_instance, beta=20.0) >= 0.0

    def test_requires_beta_above_one(self, reference_instance):
        with pytest.raises(ValueError, match="beta > 1"):
            concavity_weight_bound(reference_instance, beta=0.5)


class TestBarrier:
    def test_toy_boundary_optimum(self, toy_instance):
        # grid oracle at step 1e-4 puts the optimum at 0.5 for any weight
        for nu in (0.0, 1.0, 10.0):
            result = barrier_optimize(toy_instance, "differentiated", ObjectiveSpec(nu, 2.0), TIGHT)
            assert result.converged
            assert result.plan.prices[0] == pytest.approx(0.5, rel=1e-6)
            assert result.outcome.revenue == pytest.approx(2.0, rel=1e-6)

    def test_gap_meets_tolerance(self, toy_instance):
        result = barrier_optimize(
            toy_instance, "differentiated", ObjectiveSpec(1.0, 2.0), SolverConfig(tolerance=1e-7)
        )
        assert result.converged and result.gap <= 1e-7

    def test_outcome_feasible(self, reference_instance):
        for kind in ("bundled", "resource", "differentiated"):
            result = barrier_optimize(reference_instance, kind, ObjectiveSpec(1.0, 2.0))
            assert result.converged
            assert result.outcome.feasible

    def test_fd_hessian_path_agrees(self, toy_instance):
        spec = ObjectiveSpec(1.0, 2.0)
        analytic = barrier_optimize(toy_instance, "differentiated", spec, TIGHT)
        fd = barrier_optimize(
            toy_instance,
            "differentiated",
            spec,
            SolverConfig(tolerance=1e-9, use_fd_hessian=True),
        )
        assert fd.converged
        assert fd.plan.prices[0] == pytest.approx(analytic.plan.prices[0], rel=1e-6)

    def test_stalled_solve_reports_diagnostics(self, reference_instance):
        # a one-iteration Newton budget cannot reach the central path: the
        # result must come back flagged, with a message, not as an exception
        result = barrier_optimize(
            reference_instance,
            "resource",
            ObjectiveSpec(1.0, 2.0),
            SolverConfig(max_newton_iterations=1),
        )
        assert not result.converged
        assert result.message
        assert result.outcome.feasible  # iterates never leave the domain

    def test_no_positive_utility_region_is_infeasible(self):
        # log utility: surplus needs price < c/e, but capacity needs price >= 2
        instance = Instance(
            resources=ResourceModel(names=("r",), capacities=(0.5,)),
            user_types=(UserType("a", 1, (1.0,), UtilityParams(1.0, 1.0)),),
            discount=1.0,
        )
        with pytest.raises(InfeasibleError):
            barrier_optimize(instance, "differentiated", ObjectiveSpec(0.0, 2.0))

    def test_matches_grid_on_reference(self, reference_instance):
        spec = ObjectiveSpec(1.0, 2.0)
        axes = [np.arange(0.05, 10.0001, 0.05)] * 2
        grid = grid_oracle(reference_instance, "resource", spec, axes)
        solved = barrier_optimize(reference_instance, "resource", spec)
        assert solved.converged
        floor = grid.objective_value - 1e-3 * abs(grid.objective_value)
        assert solved.objective_value >= floor

    def test_steep_fairness_reaches_the_wall(self):
        # the start objective can exceed the optimum's magnitude by dozens
        # of orders at beta=20; the solve must still ride down to the
        # capacity boundary instead of quitting at start-scale tolerance
        instance = Instance(
            resources=ResourceModel(names=("r",), capacities=(5.0,)),
            user_types=(
                UserType("a", 2, (0.8,), UtilityParams(0.35, 1.2)),
                UserType("b", 1, (1.4,), UtilityParams(0.55, 0.8)),
                UserType("c", 3, (0.3,), UtilityParams(0.7, 1.0)),
            ),
            discount=0.9,
        )
        spec = ObjectiveSpec(nu=1.0, beta=20.0)
        solved = barrier_optimize(instance, "resource", spec, TIGHT)
        assert solved.converged
        zoom = grid_oracle(
            instance,
            "resource",
            spec,
            [np.linspace(solved.plan.prices[0] * 0.97, solved.plan.prices[0] * 1.03, 300)],
        )
        # scale-robust comparison: utility-equivalent ratio near one
        equivalent = (-solved.objective_value) ** (1 / 19) / (
            -zoom.objective_value
        ) ** (1 / 19)
        assert equivalent <= 1.0 + 1e-4


class TestBundledBisection:
    def test_toy_root(self, toy_instance):
        price = bundled_price_bisection(toy_instance, bundle=np.array([1.0]))
        assert price == pytest.approx(0.5, rel=1e-8)
        out = evaluate(toy_instance, BundledPlan(bundle=np.array([1.0]), price=price))
        assert out.demands[0] == pytest.approx(4.0, rel=1e-7)

    def test_reference_residual(self, reference_instance):
        bundle = np.array([1.0, 1.0])
        price = bundled_price_bisection(reference_instance, bundle=bundle)
        mu = np.array([2.7, 0.02, 0.6])
        counts = reference_instance.counts
        out = evaluate(reference_instance, BundledPlan(bundle=bundle, price=price))
        available = 6.0
        residual = abs(float(np.sum(counts * mu * out.demands)) - available)
        assert residual <= 1e-8 * available

    def test_doubling_capacity_lowers_price(self, reference_instance):
        bundle = np.array([1.0, 1.0])
        small = bundled_price_bisection(reference_instance, bundle=bundle)
        big_instance = Instance(
            resources=ResourceModel(names=("cpu", "mem"), capacities=(12.0, 12.0)),
            user_types=reference_instance.user_types,
            discount=1.0,
        )
        assert bundled_price_bisection(big_instance, bundle=bundle) < small

    def test_matches_barrier_for_any_weight(self, toy_instance):
        root = bundled_price_bisection(toy_instance, bundle=np.array([1.0]))
        for nu in (0.0, 1.0, 100.0):
            result = barrier_optimize(
                toy_instance, "bundled", ObjectiveSpec(nu, 2.0), TIGHT, bundle=np.array([1.0])
            )
            assert result.plan.price == pytest.approx(root, rel=1e-6)


class TestGridOracle:
    def test_three_point_grid(self, toy_instance):
        spec = ObjectiveSpec(1.0, 2.0)
        result = grid_oracle(
            toy_instance, "differentiated", spec, [np.array([0.4, 0.5, 0.6])]
        )
        assert result.plan.prices[0] == pytest.approx(0.5)
        assert result.iterations == 3

    def test_all_infeasible_grid(self, toy_instance):
        spec = ObjectiveSpec(1.0, 2.0)
        with pytest.raises(ValueError, match="no feasible grid point"):
            grid_oracle(toy_instance, "differentiated", spec, [np.array([0.1, 0.2])])

    def test_refinement_never_decreases(self, toy_instance):
        spec = ObjectiveSpec(1.0, 2.0)
        coarse_axis = np.array([0.45, 0.65, 0.85])
        fine_axis = np.union1d(coarse_axis, np.linspace(0.45, 0.9, 19))
        coarse = grid_oracle(toy_instance, "differentiated", spec, [coarse_axis])
        fine = grid_oracle(toy_instance, "differentiated", spec, [fine_axis])
        assert fine.objective_value >= coarse.objective_value

    def test_deterministic_tie_break(self, toy_instance):
        # a flat stretch of equal objectives resolves to the lowest index
        spec = ObjectiveSpec(0.0, 2.0)
        axis = np.array([0.6, 0.6, 0.7])
        result = grid_oracle(toy_instance, "differentiated", spec, [axis])
        assert result.plan.prices[0] == pytest.approx(0.6)


class TestDiscountSearch:
    def test_singleton(self, reference_instance):
        spec = ObjectiveSpec(1.0, 2.0)
        found = discount_line_search(reference_instance, "differentiated", spec, [1.0])
        assert found.gamma == 1.0
        assert found.result.converged

    def test_three_point_argmax(self, reference_instance):
        spec = ObjectiveSpec(1.0, 2.0)
        found = discount_line_search(
            reference_instance, "differentiated", spec, [0.8, 0.9, 1.0], config=TIGHT
        )
        assert len(found.records) == 3
        assert all(point.result is not None for point in found.records)
        best = max(found.records, key=lambda p: p.result.objective_value)
        assert found.gamma == best.gamma

    def test_invalid_gammas_recorded_not_fatal(self, reference_instance):
        spec = ObjectiveSpec(1.0, 2.0)
        found = discount_line_search(
            reference_instance, "differentiated", spec, [0.2, 1.0]
        )
        assert found.gamma == 1.0
        assert found.records[0].error is not None
        assert found.records[0].result is None


class TestTradeoffBounds:
    def test_single_type_equality(self, toy_instance):
        for price in (0.6, 1.0, 4.0):
            plan = DifferentiatedPlan(prices=np.array([price]))
            for beta in (0.5, 2.0):
                holds, slack = tradeoff_bound_check(toy_instance, plan, beta)
                assert holds
                assert abs(slack) <= 1e-9

    def test_random_plans_hold(self, rng):
        for _ in range(10):
            instance = random_instance(rng)
            for prices in sample_feasible_prices(instance, "resource", rng, 5):
                plan = ResourcePlan(prices=prices)
                for beta in (0.5, 2.0):
                    holds, _ = tradeoff_bound_check(instance, plan, beta)
                    assert holds

    def test_requires_feasible_plan(self, toy_instance):
        with pytest.raises(ValueError, match="feasible"):
            tradeoff_bound_check(
                toy_instance, DifferentiatedPlan(prices=np.array([0.01])), 2.0
            )


class TestPlanDominance:
    def test_differentiated_at_least_resource(self, rng):
        spec = ObjectiveSpec(1.0, 2.0)
        for _ in range(4):
            instance = random_instance(rng)
            res = barrier_optimize(instance, "resource", spec, TIGHT)
            diff = barrier_optimize(instance, "differentiated", spec, TIGHT)
            scale = max(1.0, abs(res.objective_value))
            assert diff.objective_value >= res.objective_value - 1e-6 * scale

    def test_rank_n_equality_single_type(self, rng):
        spec = ObjectiveSpec(1.0, 2.0)
        for _ in range(3):
            instance = random_instance(rng, n=1)
            res = barrier_optimize(instance, "resource", spec, TIGHT)
            diff = barrier_optimize(instance, "differentiated", spec, TIGHT)
            scale = max(1.0, abs(diff.objective_value))
            assert abs(diff.objective_value - res.objective_value) <= 1e-6 * scale

    def test_unit_bundle_never_beats_resource_grid(self, rng):
        # grid-oracle comparison on 2-resource markets where one resource
        # dominates every type's unit-bundle requirement
        spec = ObjectiveSpec(1.0, 2.0)
        bundle = np.array([1.0, 1.0])
        found = 0
        while found < 3:
            instance = random_instance(rng, m=2)
            R = instance.requirement_matrix
            if not np.all(R[0] > R[1]):  # resource 1 must set every requirement
                continue
            found += 1
            root = bundled_price_bisection(instance, bundle=bundle)
            bundled = grid_oracle(
                instance,
                "bundled",
                spec,
                [np.geomspace(root, root * 50.0, 300)],
                bundle=bundle,
            )
            resource = grid_oracle(
                instance,
                "resource",
                spec,
                [np.geomspace(root * 0.02, root * 50.0, 120)] * 2,
            )
            slack = 1e-2 * abs(resource.objective_value)  # grid resolution
            assert bundled.objective_value <= resource.objective_value + slack

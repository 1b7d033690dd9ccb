import numpy as np
import pytest

from cloudpricing import (
    Instance,
    ObjectiveSpec,
    ResourceModel,
    UserType,
    UtilityParams,
    barrier_optimize,
)
from cloudpricing.deadline import (
    IntervalDemandSpec,
    IntervalMarket,
    build_program,
    horizon_spec_from_json,
    schedule_feasible,
    solve_horizon,
)
from cloudpricing.fairness import beta_fairness
from cloudpricing.pricing import instance_to_json


def single_type_market(capacity: float, c: float = 1.0) -> Instance:
    return Instance(
        resources=ResourceModel(names=("r",), capacities=(capacity,)),
        user_types=(UserType("a", 1, (1.0,), UtilityParams(alpha=0.5, c=c)),),
        discount=1.0,
    )


class TestBuildProgram:
    def test_horizon_one_is_single_interval(self):
        spec = IntervalDemandSpec(
            horizon=1,
            intervals=(IntervalMarket(single_type_market(4.0), deadlines=(1,), nu=0.0),),
        )
        program = build_program(spec, beta=2.0)
        assert program.schedule_vars == ((0, 1, 1),)
        result = solve_horizon(program)
        single = barrier_optimize(
            single_type_market(4.0), "resource", ObjectiveSpec(0.0, 2.0)
        )
        fairness = beta_fairness(single.outcome.net_utilities, 2.0)
        assert result.total_fairness == pytest.approx(fairness, rel=1e-6)
        assert result.total_revenue == pytest.approx(single.outcome.revenue, rel=1e-6)

    def test_variable_enumeration(self):
        spec = IntervalDemandSpec(
            horizon=2,
            intervals=(
                IntervalMarket(single_type_market(4.0), deadlines=(2,), nu=0.0),
                IntervalMarket(single_type_market(4.0), deadlines=(2,), nu=0.0),
            ),
        )
        program = build_program(spec, beta=2.0)
        assert program.schedule_vars == ((0, 1, 1), (0, 1, 2), (0, 2, 2))
        assert program.variable_count == 3

    def test_deadline_out_of_range(self):
        with pytest.raises(ValueError, match="deadline 3 outside"):
            IntervalDemandSpec(
                horizon=2,
                intervals=(
                    IntervalMarket(single_type_market(4.0), deadlines=(3,), nu=0.0),
                    IntervalMarket(single_type_market(4.0), deadlines=(2,), nu=0.0),
                ),
            )
        with pytest.raises(ValueError, match="deadline 1 outside"):
            IntervalDemandSpec(
                horizon=2,
                intervals=(
                    IntervalMarket(single_type_market(4.0), deadlines=(1,), nu=0.0),
                    IntervalMarket(single_type_market(4.0), deadlines=(1,), nu=0.0),
                ),
            )

    def test_warns_above_concavity_certificate(self):
        spec = IntervalDemandSpec(
            horizon=1,
            intervals=(IntervalMarket(single_type_market(4.0), deadlines=(1,), nu=5.0),),
        )
        with pytest.warns(UserWarning, match="concavity"):
            build_program(spec, beta=2.0)


class TestScheduleFeasible:
    def two_interval_spec(self, capacity: float, deadlines=(2, 2)):
        return IntervalDemandSpec(
            horizon=2,
            intervals=(
                IntervalMarket(single_type_market(capacity), deadlines=(deadlines[0],), nu=0.0),
                IntervalMarket(single_type_market(capacity), deadlines=(deadlines[1],), nu=0.0),
            ),
        )

    def test_zero_demand(self):
        ok, schedule = schedule_feasible([[0.0], [0.0]], self.two_interval_spec(1.0))
        assert ok
        assert schedule.amounts == {}

    def test_split_across_deadline_window(self):
        ok, schedule = schedule_feasible([[2.0], [0.0]], self.two_interval_spec(1.0))
        assert ok
        assert schedule.amounts[(0, 1, 1)] == pytest.approx(1.0)
        assert schedule.amounts[(0, 1, 2)] == pytest.approx(1.0)

    def test_immediate_deadline_overload(self):
        ok, certificate = schedule_feasible(
            [[2.0], [0.0]], self.two_interval_spec(1.0, deadlines=(1, 2))
        )
        assert not ok
        text = str(certificate)
        assert "interval 1" in text and "capacity saturated" in text
        assert "misses deadline" in text

    def test_witness_residuals(self):
        spec = self.two_interval_spec(1.5)
        demands = [[2.2], [0.6]]
        ok, schedule = schedule_feasible(demands, spec)
        assert ok
        # deadline coverage to 1e-9
        assert schedule.delivered(0, 1) >= 2.2 - 1e-9
        assert schedule.delivered(0, 2) >= 0.6 - 1e-9
        for t in (1, 2):
            usage = schedule.interval_usage(spec, t)
            assert np.all(usage <= 1.5 + 1e-9)


@pytest.mark.filterwarnings("ignore:interval .*concavity:UserWarning")
class TestSolveHorizon:
    def test_immediate_deadlines_decouple(self):
        market = single_type_market(4.0)
        spec = IntervalDemandSpec(
            horizon=2,
            intervals=(
                IntervalMarket(market, deadlines=(1,), nu=1.0),
                IntervalMarket(market, deadlines=(2,), nu=1.0),
            ),
        )
        result = solve_horizon(build_program(spec, beta=2.0))
        single = barrier_optimize(market, "resource", ObjectiveSpec(1.0, 2.0))
        fairness = beta_fairness(single.outcome.net_utilities, 2.0)
        assert result.price_scale == 1.0
        assert result.total_revenue == pytest.approx(2 * single.outcome.revenue, rel=1e-6)
        assert result.total_fairness == pytest.approx(2 * fairness, rel=1e-6)

    def test_tight_interval_defers_mass(self):
        # both intervals have unit capacity; interval-1 jobs may finish in
        # interval 2, so its relaxed price solve demands more than one unit
        spec = IntervalDemandSpec(
            horizon=2,
            intervals=(
                IntervalMarket(single_type_market(1.0), deadlines=(2,), nu=0.0),
                IntervalMarket(single_type_market(1.0), deadlines=(2,), nu=0.0),
            ),
        )
        result = solve_horizon(build_program(spec, beta=2.0))
        deferred = result.schedule.amounts.get((0, 1, 2), 0.0)
        assert deferred > 0.0
        assert result.price_scale > 1.0
        for t in (1, 2):
            assert np.all(result.schedule.interval_usage(spec, t) <= 1.0 + 1e-6)

    def test_totals_are_interval_sums(self):
        market = single_type_market(4.0)
        spec = IntervalDemandSpec(
            horizon=3,
            intervals=(
                IntervalMarket(market, deadlines=(1,), nu=0.5),
                IntervalMarket(single_type_market(2.0), deadlines=(2,), nu=0.5),
                IntervalMarket(market, deadlines=(3,), nu=0.5),
            ),
        )
        program = build_program(spec, beta=2.0)
        result = solve_horizon(program)
        from cloudpricing.pricing import evaluate

        revenue = sum(
            evaluate(interval.instance, plan).revenue
            for interval, plan in zip(spec.intervals, result.plans)
        )
        assert result.total_revenue == pytest.approx(revenue, rel=1e-12)

    def test_deadline_constraint_set_convex(self, rng):
        # convex combinations of feasible (demand, schedule) pairs stay feasible
        spec = IntervalDemandSpec(
            horizon=2,
            intervals=(
                IntervalMarket(single_type_market(2.0), deadlines=(2,), nu=0.0),
                IntervalMarket(single_type_market(2.0), deadlines=(2,), nu=0.0),
            ),
        )
        for _ in range(20):
            d1 = [rng.uniform(0, 2.5, size=1), rng.uniform(0, 1.0, size=1)]
            d2 = [rng.uniform(0, 2.5, size=1), rng.uniform(0, 1.0, size=1)]
            ok1, s1 = schedule_feasible(d1, spec)
            ok2, s2 = schedule_feasible(d2, spec)
            if not (ok1 and ok2):
                continue
            t = float(rng.uniform(0, 1))
            mixed = [t * a + (1 - t) * b for a, b in zip(d1, d2)]
            ok, _ = schedule_feasible(mixed, spec)
            assert ok


class TestHorizonJson:
    def test_round_trip(self):
        market = single_type_market(4.0)
        payload = {
            "horizon": 2,
            "intervals": [
                {"instance": instance_to_json(market), "deadlines": [2], "nu": 0.5},
                {"instance": instance_to_json(market), "deadlines": [2]},
            ],
        }
        spec = horizon_spec_from_json(payload)
        assert spec.horizon == 2
        assert spec.intervals[0].nu == 0.5
        assert spec.intervals[1].nu == 0.0

    def test_error_paths(self):
        with pytest.raises(ValueError, match="horizon"):
            horizon_spec_from_json({"intervals": []})
        market = single_type_market(4.0)
        with pytest.raises(ValueError, match=r"intervals\[0\]\.deadlines"):
            horizon_spec_from_json(
                {
                    "horizon": 1,
                    "intervals": [
                        {"instance": instance_to_json(market), "deadlines": [1.5]}
                    ],
                }
            )

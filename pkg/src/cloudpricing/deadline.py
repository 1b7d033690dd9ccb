"""Multi-interval pricing with job deadlines.

Over a horizon of ``T`` intervals, each interval has its own market (user
types, requirements, weights) and the operator posts per-interval prices.
Jobs submitted in interval ``s`` carry a deadline ``tau`` and may be
processed in any mix of intervals ``s..tau``; work is divisible, so a
schedule assigns nonnegative masses ``x[(j, s, t)]`` meeting each cohort's
demand without exceeding any interval's capacities.

Revenue and fairness depend only on the posted prices (jobs are billed at
submission-time prices), so the horizon problem splits into independent
per-interval price optimizations plus a scheduling feasibility check,
solved here as a phase-one linear program.  When the stage-wise optimal
demands cannot be scheduled, prices are scaled up uniformly by the smallest
factor restoring feasibility.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .fairness import beta_fairness
from .optimizer import (
    InfeasibleError,
    ObjectiveSpec,
    SolveResult,
    SolverConfig,
    barrier_optimize,
    concavity_weight_bound,
)
from .pricing import Instance, ResourceModel, ResourcePlan, evaluate
from .simplex import phase_one

__all__ = [
    "IntervalMarket",
    "IntervalDemandSpec",
    "HorizonProgram",
    "Schedule",
    "InfeasibilityCertificate",
    "HorizonResult",
    "build_program",
    "schedule_feasible",
    "solve_horizon",
    "horizon_spec_from_json",
    "load_horizon_spec",
]


@dataclass(frozen=True, eq=False)
class IntervalMarket:
    """One interval's market, per-type deadlines, and revenue weight.

    ``deadlines[j]`` is the last interval (1-based, inclusive) in which jobs
    of type ``j`` submitted here may still be processed.
    """

    instance: Instance
    deadlines: tuple[int, ...]
    nu: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "deadlines", tuple(int(d) for d in self.deadlines))
        if len(self.deadlines) != self.instance.n:
            raise ValueError(
                f"expected {self.instance.n} deadlines (one per user type), "
                f"got {len(self.deadlines)}"
            )
        if self.nu < 0.0:
            raise ValueError(f"nu must be nonnegative, got {self.nu}")


@dataclass(frozen=True, eq=False)
class IntervalDemandSpec:
    """A full horizon: one market description per interval."""

    horizon: int
    intervals: tuple[IntervalMarket, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "intervals", tuple(self.intervals))
        if self.horizon < 1 or len(self.intervals) != self.horizon:
            raise ValueError(
                f"horizon {self.horizon} must be positive and match the "
                f"{len(self.intervals)} interval descriptions"
            )
        names = self.intervals[0].instance.resources.names
        for s, interval in enumerate(self.intervals, start=1):
            if interval.instance.resources.names != names:
                raise ValueError(f"interval {s}: resource names differ from interval 1")
            for j, tau in enumerate(interval.deadlines):
                if not (s <= tau <= self.horizon):
                    label = interval.instance.user_types[j].label
                    raise ValueError(
                        f"interval {s}, type '{label}': deadline {tau} outside "
                        f"[{s}, {self.horizon}]"
                    )


@dataclass(frozen=True, eq=False)
class HorizonProgram:
    """The joint program: per-interval price variables plus schedule variables.

    ``schedule_vars`` enumerates the schedule unknowns as (type index,
    submission interval, processing interval) triples, both intervals
    1-based.  The objective is the weighted per-interval sum
    ``sum_s nu(s) * revenue_s + fairness_s``; capacity couples intervals only
    through the schedule variables.
    """

    spec: IntervalDemandSpec
    beta: float
    schedule_vars: tuple[tuple[int, int, int], ...]

    @property
    def variable_count(self) -> int:
        return len(self.schedule_vars)

    def interval_objectives(self) -> tuple[ObjectiveSpec, ...]:
        return tuple(
            ObjectiveSpec(nu=interval.nu, beta=self.beta) for interval in self.spec.intervals
        )

    def total_objective(self, outcomes) -> float:
        """Weighted objective of per-interval outcomes (prices already chosen)."""
        total = 0.0
        for interval, outcome in zip(self.spec.intervals, outcomes):
            fairness = beta_fairness(
                outcome.net_utilities, self.beta, weights=interval.instance.counts
            )
            total += interval.nu * outcome.revenue + fairness
        return total


@dataclass(frozen=True, eq=False)
class Schedule:
    """Nonnegative processing masses keyed by (type, submitted, processed)."""

    amounts: dict[tuple[int, int, int], float]

    def delivered(self, type_index: int, submitted: int) -> float:
        return sum(
            v for (j, s, _t), v in self.amounts.items() if j == type_index and s == submitted
        )

    def interval_usage(self, spec: IntervalDemandSpec, t: int) -> np.ndarray:
        """Physical usage in interval ``t`` implied by the schedule."""
        m = spec.intervals[0].instance.m
        usage = np.zeros(m)
        for (j, s, when), value in self.amounts.items():
            if when == t:
                usage += spec.intervals[s - 1].instance.user_types[j].requirements * value
        return usage


@dataclass(frozen=True, eq=False)
class InfeasibilityCertificate:
    """Human-readable description of why no schedule exists."""

    violations: tuple[str, ...]

    def __str__(self) -> str:
        return "; ".join(self.violations)


@dataclass(frozen=True, eq=False)
class HorizonResult:
    plans: tuple[ResourcePlan, ...]
    interval_results: tuple[SolveResult, ...]
    schedule: Schedule
    total_revenue: float
    total_fairness: float
    price_scale: float
    feasible: bool


def _schedule_variables(spec: IntervalDemandSpec) -> tuple[tuple[int, int, int], ...]:
    variables: list[tuple[int, int, int]] = []
    for s, interval in enumerate(spec.intervals, start=1):
        for j, tau in enumerate(interval.deadlines):
            for t in range(s, tau + 1):
                variables.append((j, s, t))
    return tuple(variables)


def build_program(spec: IntervalDemandSpec, beta: float) -> HorizonProgram:
    """Assemble the horizon program and enumerate its schedule variables.

    Warns when an interval's revenue weight exceeds the concavity
    certificate for that interval's market (the joint problem is then not
    certified convex).
    """
    if not beta > 0.0 or beta == 1.0:
        raise ValueError(f"beta must be positive and != 1, got {beta}")
    for s, interval in enumerate(spec.intervals, start=1):
        if beta > 1.0 and interval.nu > 0.0:
            certified = concavity_weight_bound(interval.instance, beta)
            if interval.nu > certified:
                warnings.warn(
                    f"interval {s}: revenue weight {interval.nu} exceeds the concavity "
                    f"certificate {certified:.3g}; joint convexity is not guaranteed",
                    stacklevel=2,
                )
    return HorizonProgram(spec=spec, beta=beta, schedule_vars=_schedule_variables(spec))


def _demand_windows(spec: IntervalDemandSpec):
    """All (type, submitted) cohorts with their processing windows."""
    for s, interval in enumerate(spec.intervals, start=1):
        for j, tau in enumerate(interval.deadlines):
            yield j, s, tau, interval


def schedule_feasible(
    demands, spec: IntervalDemandSpec
) -> tuple[bool, Schedule | InfeasibilityCertificate]:
    """Can the demanded job masses be scheduled within deadlines and capacity?

    ``demands[s-1][j]`` is the total demanded mass (jobs times population)
    of type ``j`` submitted in interval ``s``.  Returns a witness schedule
    when feasible; otherwise a certificate naming the unmet cohorts and the
    saturated interval capacities inside their windows.
    """
    demands = [np.asarray(row, dtype=float) for row in demands]
    if len(demands) != spec.horizon:
        raise ValueError(f"expected {spec.horizon} demand rows, got {len(demands)}")
    for s, interval in enumerate(spec.intervals, start=1):
        if demands[s - 1].size != interval.instance.n:
            raise ValueError(f"interval {s}: expected {interval.instance.n} demands")
        if np.any(demands[s - 1] < 0.0):
            raise ValueError(f"interval {s}: demands must be nonnegative")

    variables = _schedule_variables(spec)
    index = {v: i for i, v in enumerate(variables)}
    n_vars = len(variables)
    m = spec.intervals[0].instance.m

    ge_rows, ge_rhs, cohorts = [], [], []
    for j, s, tau, _interval in _demand_windows(spec):
        demand = float(demands[s - 1][j])
        row = np.zeros(n_vars)
        for t in range(s, tau + 1):
            row[index[(j, s, t)]] = 1.0
        ge_rows.append(row)
        ge_rhs.append(demand)
        cohorts.append((j, s, tau))

    le_rows, le_rhs, capacity_labels = [], [], []
    for t in range(1, spec.horizon + 1):
        caps = spec.intervals[t - 1].instance.resources.capacities
        names = spec.intervals[t - 1].instance.resources.names
        for i in range(m):
            row = np.zeros(n_vars)
            for (j, s, when), col in index.items():
                if when == t:
                    row[col] = spec.intervals[s - 1].instance.user_types[j].requirements[i]
            le_rows.append(row)
            le_rhs.append(float(caps[i]))
            capacity_labels.append((t, names[i]))

    result = phase_one(np.array(ge_rows), np.array(ge_rhs), np.array(le_rows), np.array(le_rhs))
    if result.feasible:
        amounts = {v: float(result.x[i]) for v, i in index.items() if result.x[i] > 0.0}
        return True, Schedule(amounts=amounts)

    headroom = np.asarray(le_rhs) - np.asarray(le_rows) @ result.x  # per (t, i) row
    violations = []
    for (j, s, tau), shortfall in zip(cohorts, result.ge_violations):
        if shortfall <= 1e-9:
            continue
        label = spec.intervals[s - 1].instance.user_types[j].label
        violations.append(
            f"type '{label}' submitted in interval {s} misses deadline {tau} "
            f"by {shortfall:.6g} jobs"
        )
        for t in range(s, tau + 1):
            for i in range(m):
                row = (t - 1) * m + i
                if headroom[row] <= 1e-9 * max(1.0, le_rhs[row]):
                    name = capacity_labels[row][1]
                    violations.append(f"interval {t}: resource '{name}' capacity saturated")
    return False, InfeasibilityCertificate(violations=tuple(dict.fromkeys(violations)))


def _window_relaxed(interval: IntervalMarket, s: int) -> Instance:
    """Interval market with capacity relaxed by its deadline window.

    A cohort submitted in interval ``s`` with deadline ``tau`` may draw on
    every interval in ``[s, tau]``, so the stage-one price solve sees
    ``window`` times the per-interval capacity (the smallest window over the
    interval's types, staying conservative when deadlines differ).  The
    schedule stage restores physical per-interval limits.
    """
    window = min(interval.deadlines) - s + 1
    if window == 1:
        return interval.instance
    resources = interval.instance.resources
    relaxed = ResourceModel(
        names=resources.names, capacities=resources.capacities * window
    )
    return Instance(
        resources=relaxed,
        user_types=interval.instance.user_types,
        discount=interval.instance.discount,
    )


def _stage_demands(spec: IntervalDemandSpec, plans, scale: float):
    """Total demanded masses per cohort at uniformly scaled prices."""
    rows = []
    for interval, plan in zip(spec.intervals, plans):
        scaled = ResourcePlan(prices=plan.prices * scale)
        outcome = evaluate(interval.instance, scaled)
        rows.append(interval.instance.counts * outcome.demands)
    return rows


def solve_horizon(program: HorizonProgram, config: SolverConfig | None = None) -> HorizonResult:
    """Optimize per-interval prices, then certify or repair schedulability.

    Stage one solves each interval's price problem independently (revenue
    and fairness depend only on prices).  Stage two checks the resulting
    demands against the deadline/capacity system; if unschedulable, all
    prices are scaled up by the smallest uniform factor (bisection to 1e-6
    relative) that restores feasibility, re-verifying after each probe.
    """
    spec = program.spec
    interval_results = []
    for s, (interval, obj_spec) in enumerate(
        zip(spec.intervals, program.interval_objectives()), start=1
    ):
        interval_results.append(
            barrier_optimize(_window_relaxed(interval, s), "resource", obj_spec, config)
        )
    plans = tuple(result.plan for result in interval_results)

    feasible, witness = schedule_feasible(_stage_demands(spec, plans, 1.0), spec)
    scale = 1.0
    if not feasible:
        lo, hi = 1.0, 2.0
        for _ in range(60):
            ok, candidate = schedule_feasible(_stage_demands(spec, plans, hi), spec)
            if ok:
                witness = candidate
                break
            lo = hi
            hi *= 2.0
        else:
            raise InfeasibleError(f"no finite price scaling yields a schedule: {witness}")
        while hi - lo > 1e-6 * hi:
            mid = 0.5 * (lo + hi)
            ok, candidate = schedule_feasible(_stage_demands(spec, plans, mid), spec)
            if ok:
                hi, witness = mid, candidate
            else:
                lo = mid
        scale = hi
        plans = tuple(ResourcePlan(prices=p.prices * scale) for p in plans)

    outcomes = [evaluate(interval.instance, plan) for interval, plan in zip(spec.intervals, plans)]
    total_revenue = float(sum(outcome.revenue for outcome in outcomes))
    total_fairness = float(
        sum(
            beta_fairness(outcome.net_utilities, program.beta, weights=interval.instance.counts)
            for interval, outcome in zip(spec.intervals, outcomes)
        )
    )
    return HorizonResult(
        plans=plans,
        interval_results=tuple(interval_results),
        schedule=witness,
        total_revenue=total_revenue,
        total_fairness=total_fairness,
        price_scale=scale,
        feasible=True,
    )


# ---------------------------------------------------------------------------
# JSON interface


def horizon_spec_from_json(obj: dict) -> IntervalDemandSpec:
    """Parse {"horizon": T, "intervals": [{"instance", "deadlines", "nu"}...]}."""
    from .pricing import instance_from_json

    if not isinstance(obj, dict):
        raise ValueError("horizon spec: expected a JSON object")
    if "horizon" not in obj or "intervals" not in obj:
        raise ValueError("horizon spec: missing 'horizon' or 'intervals'")
    horizon = obj["horizon"]
    if isinstance(horizon, bool) or not isinstance(horizon, int) or horizon < 1:
        raise ValueError(f"horizon: expected a positive integer, got {horizon!r}")
    raw_intervals = obj["intervals"]
    if not isinstance(raw_intervals, list):
        raise ValueError("intervals: expected a list")
    intervals = []
    for s, raw in enumerate(raw_intervals, start=1):
        path = f"intervals[{s - 1}]"
        if not isinstance(raw, dict) or "instance" not in raw or "deadlines" not in raw:
            raise ValueError(f"{path}: expected an object with 'instance' and 'deadlines'")
        try:
            instance = instance_from_json(raw["instance"])
        except ValueError as err:
            raise ValueError(f"{path}.{err}") from None
        deadlines = raw["deadlines"]
        if not isinstance(deadlines, list) or not all(
            isinstance(d, int) and not isinstance(d, bool) for d in deadlines
        ):
            raise ValueError(f"{path}.deadlines: expected a list of integers")
        nu = raw.get("nu", 0.0)
        if isinstance(nu, bool) or not isinstance(nu, (int, float)):
            raise ValueError(f"{path}.nu: expected a number, got {nu!r}")
        intervals.append(
            IntervalMarket(instance=instance, deadlines=tuple(deadlines), nu=float(nu))
        )
    return IntervalDemandSpec(horizon=horizon, intervals=tuple(intervals))


def load_horizon_spec(path) -> IntervalDemandSpec:
    import json

    with open(path, "r", encoding="utf-8") as fh:
        return horizon_spec_from_json(json.load(fh))

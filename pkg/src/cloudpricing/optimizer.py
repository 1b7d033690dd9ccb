"""Price optimization for the weighted fairness-revenue objective.

The operator maximizes ``nu * revenue + F_beta`` over the prices of a chosen
plan kind, subject to capacity.  Because demand is isoelastic, every plan's
per-job cost vector is linear in the price variables, and revenue, fairness,
and usage all reduce to per-type power laws of those costs; gradients and
Hessians are assembled analytically from that structure.

The solver is a log-barrier interior-point method: minimize

    f_t(p) = -t * objective(p) - sum_i log(slack_i(p)) - sum_k log(p_k)
             - sum_k log(cap_k - p_k)

by damped Newton (the price box keeps every centering problem bounded and
never binds at an optimum), then increase ``t`` geometrically until the
barrier gap falls below tolerance relative to the objective's magnitude at
the current iterate.  Fairness exponents make objective values span many
orders of magnitude along the path, so both the initial weight and the
stopping test adapt to the local scale.

A brute-force grid search over the same objective is provided as an
independent verification oracle, along with the closed-form concavity
certificate for the revenue weight and the fairness-revenue tradeoff bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .fairness import beta_fairness
from .pricing import (
    BundledPlan,
    DifferentiatedPlan,
    FEASIBILITY_ATOL,
    Instance,
    Outcome,
    PricingPlan,
    ResourcePlan,
    bundle_requirement,
    evaluate,
)

__all__ = [
    "InfeasibleError",
    "ObjectiveSpec",
    "SolverConfig",
    "SolveResult",
    "DiscountPoint",
    "DiscountSearchResult",
    "objective",
    "concavity_weight_bound",
    "barrier_optimize",
    "bundled_price_bisection",
    "grid_oracle",
    "discount_line_search",
    "tradeoff_bound_check",
]

PLAN_KINDS = ("bundled", "resource", "differentiated")


class InfeasibleError(ValueError):
    """No strictly feasible price vector exists for the request."""


@dataclass(frozen=True)
class ObjectiveSpec:
    """Revenue weight ``nu >= 0`` and fairness exponent ``beta``."""

    nu: float
    beta: float

    def __post_init__(self) -> None:
        if self.nu < 0.0:
            raise ValueError(f"nu must be nonnegative, got {self.nu}")
        if not self.beta > 0.0 or self.beta == 1.0:
            raise ValueError(f"beta must be positive and != 1, got {self.beta}")


@dataclass(frozen=True)
class SolverConfig:
    """Barrier-method knobs.

    ``tolerance`` bounds the final barrier gap, measured relative to the
    magnitude of the objective at the returned prices (floored at one);
    ``barrier_update`` is the geometric factor applied to the barrier
    weight between outer rounds.  The Hessian is analytic unless
    ``use_fd_hessian`` asks for central differences of the gradient with
    step ``fd_step``.
    """

    tolerance: float = 1e-6
    barrier_update: float = 20.0
    barrier_init: float = 1.0
    max_newton_iterations: int = 80
    fd_step: float = 1e-6
    use_fd_hessian: bool = False

    def __post_init__(self) -> None:
        if self.tolerance <= 0.0 or self.barrier_init <= 0.0 or self.fd_step <= 0.0:
            raise ValueError("tolerance, barrier_init, and fd_step must be positive")
        if not self.barrier_update > 1.0:
            raise ValueError(f"barrier_update must exceed 1, got {self.barrier_update}")
        if self.max_newton_iterations < 1:
            raise ValueError("max_newton_iterations must be at least 1")


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Optimized plan with its outcome and convergence diagnostics.

    ``gap`` is the barrier suboptimality estimate (constraint count over
    the barrier weight) relative to the returned objective's magnitude;
    ``converged`` implies it is at or below the configured tolerance.
    """

    plan: PricingPlan
    outcome: Outcome
    objective_value: float
    iterations: int
    converged: bool
    gap: float
    message: str = ""


def _count_weighted_fairness(instance: Instance, outcome: Outcome, beta: float) -> float:
    bad = np.nonzero(outcome.net_utilities <= 0.0)[0]
    if bad.size:
        label = instance.user_types[int(bad[0])].label
        raise ValueError(
            f"user type '{label}' has nonpositive net utility under this plan; "
            "fairness is undefined"
        )
    return beta_fairness(outcome.net_utilities, beta, weights=instance.counts)


def objective(instance: Instance, plan: PricingPlan, spec: ObjectiveSpec) -> float:
    """nu * revenue + F_beta of the plan's outcome (count-weighted)."""
    outcome = evaluate(instance, plan)
    if not outcome.feasible:
        if isinstance(plan, BundledPlan):
            raise ValueError("plan infeasible: bundle demand exceeds the available bundles")
        worst = int(np.argmax(outcome.usage - instance.resources.capacities))
        name = instance.resources.names[worst]
        raise ValueError(
            f"plan infeasible: resource '{name}' usage {outcome.usage[worst]:.6g} exceeds "
            f"capacity {instance.resources.capacities[worst]:.6g}"
        )
    fairness = _count_weighted_fairness(instance, outcome, spec.beta)
    return spec.nu * outcome.revenue + fairness


def concavity_weight_bound(instance: Instance, beta: float, gamma: float | None = None) -> float:
    """Largest certified revenue weight keeping the objective concave.

    Any ``nu`` at or below the returned value makes ``nu * revenue + F_beta``
    a concave function of the prices, so price optimization is a convex
    program.  Requires ``beta > 1``; returns 0 when ``beta * (1 - alpha_j)``
    does not exceed the discount for every type (no certificate available).
    """
    if not beta > 1.0:
        raise ValueError(f"the concavity certificate needs beta > 1, got {beta}")
    g = instance.discount if gamma is None else gamma
    capacities = instance.resources.capacities
    bound = math.inf
    for j, user in enumerate(instance.user_types):
        alpha = user.utility.alpha
        if alpha >= 1.0 or beta * (1.0 - alpha) <= g:
            return 0.0
        head = ((g + alpha - 1.0) / (1.0 - alpha)) ** (1.0 - beta)
        power = g ** (beta * g / (alpha + g - 1.0) - 1.0)
        margin = beta * (1.0 - alpha) - g
        positive = user.requirements > 0.0
        headroom = float(np.max(capacities[positive] / user.requirements[positive]))
        scale = headroom ** (beta * (alpha - 1.0) / g)
        bound = min(bound, head * power * margin * scale)
    return bound


# ---------------------------------------------------------------------------
# Smooth problem structure shared by the barrier solver and the grid oracle.


class _PriceProblem:
    """Objective, constraints, and derivatives as functions of the prices.

    Per-job costs are linear in the price vector (``r = D @ p``), and every
    per-type quantity is a power law ``a * r**b``, so first and second
    derivatives in price space are congruence transforms of per-type scalar
    derivatives by ``D``.
    """

    def __init__(self, instance: Instance, plan_kind: str, bundle=None):
        if plan_kind not in PLAN_KINDS:
            raise ValueError(f"plan kind must be one of {PLAN_KINDS}, got {plan_kind!r}")
        self.instance = instance
        self.kind = plan_kind
        gamma = instance.discount
        self.gamma = gamma
        self.w = instance.counts
        self.k, self.e = instance.demand_curves()
        self.A = self.k**gamma
        self.q = 1.0 + gamma * self.e
        self.alphas = instance.alphas
        self.cs = np.array([u.utility.c for u in instance.user_types])
        R = instance.requirement_matrix

        if plan_kind == "bundled":
            b = instance.resources.capacities if bundle is None else np.asarray(bundle, float)
            mu = np.array([bundle_requirement(u, b) for u in instance.user_types])
            self.bundle = b
            self.mu = mu
            self.dim = 1
            self.D = (mu**gamma)[:, None]
            self.G = (self.w * mu)[None, :]
            self.limits = np.array([float(np.min(instance.resources.capacities / b))])
        elif plan_kind == "resource":
            self.dim = instance.m
            self.D = (R**gamma).T
            self.G = R * self.w[None, :]
            self.limits = instance.resources.capacities.copy()
        else:
            self.dim = instance.n
            self.D = np.eye(instance.n)
            self.G = R * self.w[None, :]
            self.limits = instance.resources.capacities.copy()

        self.n_capacity = self.limits.size

    def make_plan(self, prices: np.ndarray) -> PricingPlan:
        if self.kind == "bundled":
            return BundledPlan(bundle=self.bundle, price=float(prices[0]))
        if self.kind == "resource":
            return ResourcePlan(prices=prices)
        return DifferentiatedPlan(prices=prices)

    def costs(self, prices: np.ndarray) -> np.ndarray:
        return self.D @ prices

    def demands(self, costs: np.ndarray) -> np.ndarray:
        return self.k * costs**self.e

    def utilities(self, costs: np.ndarray) -> np.ndarray:
        """Net utilities as functions of cost (log-utility types included)."""
        out = np.empty_like(costs)
        for j in range(costs.size if costs.ndim == 1 else costs.shape[0]):
            alpha = self.alphas[j]
            r = costs[j]
            if alpha == 1.0:
                out[j] = self.cs[j] * (np.log(self.k[j]) + self.e[j] * np.log(r)) - self.A[j]
            else:
                nu_u = self.gamma / (1.0 - alpha) - 1.0
                out[j] = nu_u * self.A[j] * r ** self.q[j]
        return out

    def slacks(self, costs: np.ndarray) -> np.ndarray:
        return self.limits - self.G @ self.demands(costs)

    def objective_value(self, spec: ObjectiveSpec, costs: np.ndarray) -> float:
        with np.errstate(over="ignore", divide="ignore"):
            revenue = float(np.sum(self.w * self.A * costs**self.q))
            utils = self.utilities(costs)
            if np.any(utils <= 0.0) or not np.all(np.isfinite(utils)):
                return -math.inf
            fairness = beta_fairness(utils, spec.beta, weights=self.w)
        return spec.nu * revenue + fairness

    def objective_cost_derivatives(
        self, spec: ObjectiveSpec, costs: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        """First and second derivatives of the objective per per-job cost."""
        beta, nu = spec.beta, spec.nu
        utils = self.utilities(costs)
        rev1 = self.A * self.q * costs ** (self.q - 1.0)
        rev2 = self.A * self.q * (self.q - 1.0) * costs ** (self.q - 2.0)
        u1 = -self.A * costs ** (self.q - 1.0)
        u2 = -self.gamma * self.e * self.A * costs ** (self.q - 2.0)
        with np.errstate(over="ignore"):
            um_b = utils**-beta
            fair1 = um_b * u1
            fair2 = -beta * utils ** (-beta - 1.0) * u1**2 + um_b * u2
        first = self.w * (nu * rev1 + fair1)
        second = self.w * (nu * rev2 + fair2)
        return first, second


def _bisect_load(load, target: float) -> float:
    """Smallest scale with load(scale) <= target; load strictly decreasing."""
    lo, hi = 1.0, 1.0
    for _ in range(80):
        if load(lo) > target:
            break
        lo /= 4.0
    else:
        raise InfeasibleError("demand never reaches capacity at any positive price")
    for _ in range(80):
        if load(hi) < target:
            break
        hi *= 4.0
    else:
        raise InfeasibleError("no price high enough to fit demand inside capacity")
    for _ in range(96):
        mid = math.sqrt(lo * hi)
        if load(mid) > target:
            lo = mid
        else:
            hi = mid
    return hi


def _feasible_start(problem: _PriceProblem) -> np.ndarray:
    """Strictly feasible prices with the binding usage ratio near one half.

    Uniform prices are bisected to the target load for bundled and resource
    plans.  Differentiated prices are set per type so each carries an equal
    slice of its own binding resource: a uniform start can leave a type's
    demand negligible, and its flat objective coordinate then drifts on the
    barrier instead of optimizing.  When positive net utilities require
    lower prices than the half-capacity point allows, the target is relaxed
    toward the boundary.
    """

    def prices_at(scale: float, base: np.ndarray) -> np.ndarray:
        return scale * base

    def utilities_ok(prices: np.ndarray) -> bool:
        utils = problem.utilities(problem.costs(prices))
        return bool(np.all(np.isfinite(utils)) and np.all(utils > 0.0))

    for target in (0.5, 0.8, 0.95, 0.99):
        if problem.kind == "differentiated":
            base = np.empty(problem.dim)
            share = target / problem.dim
            for j in range(problem.dim):
                row = problem.G[:, j]  # this type's usage per job of each resource

                def own_load(price: float, j=j, row=row) -> float:
                    with np.errstate(over="ignore"):
                        x = problem.k[j] * price ** problem.e[j]
                    return float(np.max(row * x / problem.limits))

                base[j] = _bisect_load(own_load, share)

            def joint_load(s: float) -> float:
                used = problem.G @ problem.demands(problem.costs(prices_at(s, base)))
                return float(np.max(used / problem.limits))

            start = prices_at(_bisect_load(joint_load, target), base)
        else:
            def load(scale: float) -> float:
                costs = problem.costs(np.full(problem.dim, scale))
                with np.errstate(over="ignore"):
                    used = problem.G @ problem.demands(costs)
                return float(np.max(used / problem.limits))

            start = np.full(problem.dim, _bisect_load(load, target))
        if utilities_ok(start):
            return start
    raise InfeasibleError(
        "no strictly feasible price vector keeps every type's net utility positive"
    )


def _barrier_value(problem, spec, t_scaled, prices, ceiling) -> float:
    if np.any(prices <= 0.0) or np.any(prices >= ceiling):
        return math.inf
    costs = problem.costs(prices)
    if np.any(costs <= 0.0):
        return math.inf
    slack = problem.slacks(costs)
    if np.any(slack <= 0.0):
        return math.inf
    with np.errstate(over="ignore"):
        value = problem.objective_value(spec, costs)
    if not math.isfinite(value):
        return math.inf
    return (
        -t_scaled * value
        - float(np.sum(np.log(slack)))
        - float(np.sum(np.log(prices)))
        - float(np.sum(np.log(ceiling - prices)))
    )


def _barrier_gradient(problem, spec, t_scaled, prices, ceiling) -> np.ndarray:
    costs = problem.costs(prices)
    with np.errstate(over="ignore", invalid="ignore"):
        x1 = problem.k * problem.e * costs ** (problem.e - 1.0)
        slack = problem.slacks(costs)
        obj1, _ = problem.objective_cost_derivatives(spec, costs)
        grad = -t_scaled * (problem.D.T @ obj1)
        jac = (problem.G * x1[None, :]) @ problem.D  # d usage_i / d p
        grad += jac.T @ (1.0 / slack)
        grad -= 1.0 / prices
        grad += 1.0 / (ceiling - prices)
    return grad


def _barrier_hessian(problem, spec, t_scaled, prices, ceiling) -> np.ndarray:
    costs = problem.costs(prices)
    with np.errstate(over="ignore", invalid="ignore"):
        x1 = problem.k * problem.e * costs ** (problem.e - 1.0)
        x2 = problem.k * problem.e * (problem.e - 1.0) * costs ** (problem.e - 2.0)
        slack = problem.slacks(costs)
        _, obj2 = problem.objective_cost_derivatives(spec, costs)
        D = problem.D
        hess = -t_scaled * (D.T * obj2) @ D
        jac = (problem.G * x1[None, :]) @ D
        hess += (jac.T / slack**2) @ jac
        curvature = (problem.G * x2[None, :]) / slack[:, None]  # sum_i (d2 usage)/slack
        hess += (D.T * curvature.sum(axis=0)) @ D
        hess += np.diag(1.0 / prices**2 + 1.0 / (ceiling - prices) ** 2)
    return hess


def _fd_hessian(problem, spec, t_scaled, prices, ceiling, step) -> np.ndarray:
    d = prices.size
    hess = np.empty((d, d))
    for kk in range(d):
        h = step * max(1.0, abs(prices[kk]))
        for _ in range(40):
            plus = prices.copy()
            minus = prices.copy()
            plus[kk] += h
            minus[kk] -= h
            if (
                _barrier_value(problem, spec, t_scaled, plus, ceiling) < math.inf
                and _barrier_value(problem, spec, t_scaled, minus, ceiling) < math.inf
            ):
                break
            h *= 0.5
        hess[kk] = (
            _barrier_gradient(problem, spec, t_scaled, plus, ceiling)
            - _barrier_gradient(problem, spec, t_scaled, minus, ceiling)
        ) / (2.0 * h)
    return 0.5 * (hess + hess.T)


def _newton_direction(hess: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Solve for a descent direction, ridging the Hessian up to definiteness.

    Cholesky is the definiteness test; when the barrier Hessian is indefinite
    (the weighted objective need not be concave above the certified revenue
    weight) a growing multiple of the identity blends the step toward
    steepest descent.
    """
    dim = hess.shape[0]
    scale = max(1.0, float(np.max(np.abs(np.diag(hess)))))
    tau = 0.0
    for _ in range(40):
        try:
            low = np.linalg.cholesky(hess + tau * np.eye(dim))
        except np.linalg.LinAlgError:
            tau = max(1e-10 * scale, tau * 4.0)
            continue
        direction = np.linalg.solve(low.T, np.linalg.solve(low, -grad))
        if np.all(np.isfinite(direction)) and grad @ direction < 0.0:
            return direction
        tau = max(1e-10 * scale, tau * 4.0)
    return -grad  # last resort: steepest descent


ARMIJO_SLOPE = 1e-4
BACKTRACK_FACTOR = 0.5


def _newton_minimize(
    problem, spec, t_scaled, prices, ceiling, config
) -> tuple[np.ndarray, int, bool]:
    """Damped Newton with backtracking on the barrier function."""
    value = _barrier_value(problem, spec, t_scaled, prices, ceiling)
    for iteration in range(config.max_newton_iterations):
        grad = _barrier_gradient(problem, spec, t_scaled, prices, ceiling)
        if not np.all(np.isfinite(grad)):
            return prices, iteration, False
        if config.use_fd_hessian:
            hess = _fd_hessian(problem, spec, t_scaled, prices, ceiling, config.fd_step)
        else:
            hess = _barrier_hessian(problem, spec, t_scaled, prices, ceiling)
        if not np.all(np.isfinite(hess)):
            return prices, iteration, False
        direction = _newton_direction(hess, grad)
        decrement = -float(grad @ direction)
        if decrement / 2.0 <= 1e-10 * (1.0 + abs(value)):
            return prices, iteration, True
        slope = float(grad @ direction)

        def sufficient(step: float) -> tuple[bool, float]:
            trial = _barrier_value(problem, spec, t_scaled, prices + step * direction, ceiling)
            return trial <= value + ARMIJO_SLOPE * step * slope, trial

        step = 1.0
        ok_step, cand_value = sufficient(step)
        if ok_step:
            # expand toward the ray's minimum while doubling keeps strictly
            # improving: ridged directions through flat nonconvex channels
            # are otherwise crossed one fixed-length step at a time
            while step < 2.0**30:
                grew, trial = sufficient(2.0 * step)
                if not grew or trial >= cand_value:
                    break
                step *= 2.0
                cand_value = trial
        else:
            while step > 1e-18:
                step *= BACKTRACK_FACTOR
                ok_step, cand_value = sufficient(step)
                if ok_step:
                    break
            else:
                # no acceptable step: on a flat plateau a small predicted
                # decrease that cannot be realized is convergence, not failure
                settled = decrement / 2.0 <= 1e-6 * (1.0 + abs(value))
                return prices, iteration, settled
        prices = prices + step * direction
        value = cand_value
    grad = _barrier_gradient(problem, spec, t_scaled, prices, ceiling)
    hess = _barrier_hessian(problem, spec, t_scaled, prices, ceiling)
    direction = _newton_direction(hess, grad)
    converged = bool(-float(grad @ direction) / 2.0 <= 1e-6 * (1.0 + abs(value)))
    return prices, config.max_newton_iterations, converged


def barrier_optimize(
    instance: Instance,
    plan_kind: str,
    spec: ObjectiveSpec,
    config: SolverConfig | None = None,
    bundle=None,
) -> SolveResult:
    """Maximize ``nu * revenue + F_beta`` over the plan's prices.

    Finds a strictly feasible starting price vector internally, then runs
    the log-barrier method with damped Newton inner solves.  Inner-solver
    stagnation yields a non-converged result carrying diagnostics rather
    than an exception; an empty feasible interior raises
    :class:`InfeasibleError`.
    """
    config = config or SolverConfig()
    problem = _PriceProblem(instance, plan_kind, bundle)
    start = _feasible_start(problem)

    best = None
    for prices in _start_candidates(problem, start):
        result = _barrier_ladder(problem, spec, config, prices)
        if best is None or result.beats(best):
            best = result
        if result.converged:  # alternates exist only to escape stalls
            break

    if not best.converged and problem.dim <= 4:
        # basin escape for the uncertified nonconvex regime: probe a coarse
        # grid around the stall, then polish the best cell with a fresh ladder
        probe = _coarse_probe(problem, spec, best.prices)
        if probe is not None:
            result = _barrier_ladder(problem, spec, config, probe)
            if result.beats(best):
                best = result

    plan = problem.make_plan(best.prices)
    outcome = evaluate(instance, plan)
    return SolveResult(
        plan=plan,
        outcome=outcome,
        objective_value=best.value,
        iterations=best.iterations,
        converged=best.converged,
        gap=best.gap,
        message=best.message,
    )


def _coarse_probe(problem: _PriceProblem, spec: ObjectiveSpec, around: np.ndarray):
    """Best strictly feasible point of a rough grid spanning two decades."""
    axes = [np.geomspace(p / 30.0, p * 30.0, 14) for p in around]
    shape = tuple(a.size for a in axes)
    flat = np.arange(int(np.prod(shape)))
    coords = np.unravel_index(flat, shape)
    P = np.stack([axes[d][coords[d]] for d in range(problem.dim)])
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        R = problem.D @ P
        X = problem.k[:, None] * R ** problem.e[:, None]
        usage = problem.G @ X
        valid = np.all(usage < problem.limits[:, None], axis=0) & np.all(R > 0.0, axis=0)
        values = np.full(flat.size, -math.inf)
        for idx in np.nonzero(valid)[0]:
            values[idx] = problem.objective_value(spec, R[:, idx])
    best = int(np.argmax(values))
    if not math.isfinite(values[best]):
        return None
    return np.array([axes[d][coords[d][best]] for d in range(problem.dim)])


def _start_candidates(problem: _PriceProblem, start: np.ndarray):
    """The default start plus alternates used only after a stalled ladder.

    Price optimization is certified convex only below the concavity weight
    bound; elsewhere the barrier path can wedge into a poor stationary
    region, and a second start usually frees it.  Alternates that land
    outside the domain (a uniform level can overload capacity that the
    balanced start respected) are dropped.
    """

    def usable(prices: np.ndarray) -> bool:
        costs = problem.costs(prices)
        if np.any(costs <= 0.0) or np.any(problem.slacks(costs) <= 0.0):
            return False
        utils = problem.utilities(costs)
        return bool(np.all(np.isfinite(utils)) and np.all(utils > 0.0))

    yield start
    uniform = np.full(problem.dim, float(np.exp(np.mean(np.log(start)))))
    if not np.allclose(uniform, start) and usable(uniform):
        yield uniform
    if usable(start * 3.0):
        yield start * 3.0


@dataclass(frozen=True, eq=False)
class _LadderResult:
    prices: np.ndarray
    iterations: int
    value: float
    gap: float
    converged: bool
    message: str

    def beats(self, other: "_LadderResult") -> bool:
        return (self.converged, self.value) > (other.converged, other.value)


def _barrier_ladder(problem, spec, config, prices) -> _LadderResult:
    """Run the t-ladder from one starting point."""
    # A price box makes every centering problem bounded: without the ceiling,
    # objectives that vanish at high prices (beta < 1) lose to the positivity
    # barrier's log reward and the iterates run away.  The box never binds at
    # an optimum, which always sits on the capacity wall far below it.
    ceiling = np.full(problem.dim, 1e4 * float(np.max(prices)))
    n_constraints = problem.n_capacity + 2 * problem.dim

    if not math.isfinite(_barrier_value(problem, spec, 0.0, prices, ceiling)):
        raise InfeasibleError("barrier ladder started outside the feasible domain")
    start_objective = problem.objective_value(spec, problem.costs(prices))
    scale = max(1.0, abs(start_objective))

    # Balance the first barrier weight against the objective's slope so the
    # initial centering solution stays near the start; nearly-flat objectives
    # would otherwise let the barrier drag prices toward the box center, and
    # the way back is thousands of damped steps.
    obj_slope = float(
        np.linalg.norm(
            problem.D.T @ problem.objective_cost_derivatives(spec, problem.costs(prices))[0]
        )
    )
    barrier_slope = float(
        np.linalg.norm(_barrier_gradient(problem, spec, 0.0, prices, ceiling))
    )
    t = config.barrier_init * max(1.0, scale * barrier_slope / max(obj_slope, 1e-300))
    total_iterations = 0
    message = ""
    converged = True
    gap = math.inf
    # The gap test is relative to the objective where the iterate currently
    # sits, not where it started: steep fairness exponents shrink |objective|
    # by many orders along the path, and a start-scaled tolerance would call
    # the solve done long before the capacity wall.
    for _ in range(300):
        prices, inner_iters, ok = _newton_minimize(
            problem, spec, t / scale, prices, ceiling, config
        )
        total_iterations += inner_iters
        value = problem.objective_value(spec, problem.costs(prices))
        gap = (n_constraints / t) * scale / max(1.0, abs(value))
        if not ok:
            converged = False
            message = f"inner Newton solve stalled at barrier weight t={t:.3g}"
            break
        if gap <= config.tolerance:
            break
        t *= config.barrier_update
    else:
        converged = False
        message = "barrier weight budget exhausted before the gap closed"

    value = problem.objective_value(spec, problem.costs(prices))
    return _LadderResult(
        prices=prices,
        iterations=total_iterations,
        value=value,
        gap=gap,
        converged=converged,
        message=message,
    )


def bundled_price_bisection(
    instance: Instance, bundle=None, rtol: float = 1e-8, max_iter: int = 400
) -> float:
    """Lowest feasible bundle price: demand exactly fills the bundles.

    The weighted objective under bundled pricing is maximized at the lowest
    feasible price for every revenue weight, so the optimum reduces to a
    one-dimensional root of the bundle-count constraint.  Returns the price
    where total bundle demand equals the available bundles, with relative
    residual at most ``rtol``.
    """
    problem = _PriceProblem(instance, "bundled", bundle)
    available = problem.limits[0]

    def excess(price: float) -> float:
        costs = problem.costs(np.array([price]))
        return float(problem.G[0] @ problem.demands(costs)) - available

    lo = hi = 1.0
    for _ in range(600):
        if excess(lo) > 0.0:
            break
        lo /= 2.0
    else:
        raise InfeasibleError("bundle demand never exceeds supply at any positive price")
    for _ in range(600):
        if excess(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise InfeasibleError("bundle demand never fits within supply at any finite price")
    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        if excess(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if abs(excess(hi)) <= rtol * available:
            break
    return hi


def grid_oracle(
    instance: Instance,
    plan_kind: str,
    spec: ObjectiveSpec,
    axes: Sequence[np.ndarray],
    bundle=None,
    chunk: int = 1 << 18,
) -> SolveResult:
    """Exhaustive objective evaluation over a price grid.

    ``axes`` gives the candidate values per price dimension (one axis for
    bundled plans, one per resource or per type otherwise).  Infeasible and
    nonpositive-utility points are skipped; the best surviving point is
    returned (ties break to the lowest grid index).  Serves as a brute-force
    verification oracle for :func:`barrier_optimize` in low dimensions.
    """
    problem = _PriceProblem(instance, plan_kind, bundle)
    axes = [np.asarray(a, dtype=float) for a in axes]
    if len(axes) != problem.dim:
        raise ValueError(f"expected {problem.dim} grid axes for {plan_kind}, got {len(axes)}")
    shape = tuple(a.size for a in axes)
    total = int(np.prod(shape))
    if total == 0:
        raise ValueError("empty grid")

    beta, nu = spec.beta, spec.nu
    log_domain = beta >= 10.0
    w = problem.w[:, None]
    best_value = -math.inf
    best_flat = -1

    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        flat = np.arange(start, stop)
        coords = np.unravel_index(flat, shape)
        P = np.stack([axes[d][coords[d]] for d in range(problem.dim)])  # (dim, c)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            R = problem.D @ P  # (n, c) per-job costs
            valid = np.all(P > 0.0, axis=0) & np.all(R > 0.0, axis=0)
            Rsafe = np.where(R > 0.0, R, 1.0)
            X = problem.k[:, None] * Rsafe ** problem.e[:, None]
            usage = problem.G @ X
            valid &= np.all(usage <= problem.limits[:, None] + FEASIBILITY_ATOL, axis=0)

            utils = np.empty_like(Rsafe)
            for j in range(problem.instance.n):
                if problem.alphas[j] == 1.0:
                    utils[j] = (
                        problem.cs[j] * (np.log(problem.k[j]) + problem.e[j] * np.log(Rsafe[j]))
                        - problem.A[j]
                    )
                else:
                    nu_u = problem.gamma / (1.0 - problem.alphas[j]) - 1.0
                    utils[j] = nu_u * problem.A[j] * Rsafe[j] ** problem.q[j]
            valid &= np.all(utils > 0.0, axis=0) & np.all(np.isfinite(utils), axis=0)

            revenue = np.sum(w * problem.A[:, None] * Rsafe ** problem.q[:, None], axis=0)
            logs = np.where(utils > 0.0, np.log(utils), 0.0)
            if log_domain:
                fairness = np.exp(logsumexp((1.0 - beta) * logs, b=w, axis=0)) / (1.0 - beta)
            else:
                fairness = np.sum(w * np.exp((1.0 - beta) * logs), axis=0) / (1.0 - beta)
            values = nu * revenue + fairness
        values = np.where(valid & np.isfinite(values), values, -math.inf)
        local_best = int(np.argmax(values))
        if values[local_best] > best_value:
            best_value = float(values[local_best])
            best_flat = start + local_best

    if best_flat < 0:
        raise ValueError("no feasible grid point with positive net utilities")

    coords = np.unravel_index(best_flat, shape)
    prices = np.array([axes[d][coords[d]] for d in range(problem.dim)])
    plan = problem.make_plan(prices)
    outcome = evaluate(instance, plan)
    return SolveResult(
        plan=plan,
        outcome=outcome,
        objective_value=best_value,
        iterations=total,
        converged=True,
        gap=0.0,
        message="exhaustive grid search; accuracy limited by grid resolution",
    )


@dataclass(frozen=True)
class DiscountPoint:
    """Recorded solve for one discount value in a line search."""

    gamma: float
    result: Optional[SolveResult]
    error: Optional[str] = None


@dataclass(frozen=True)
class DiscountSearchResult:
    gamma: float
    result: SolveResult
    records: tuple[DiscountPoint, ...]


def discount_line_search(
    instance: Instance,
    plan_kind: str,
    spec: ObjectiveSpec,
    gamma_grid: Sequence[float],
    config: SolverConfig | None = None,
    bundle=None,
) -> DiscountSearchResult:
    """Re-optimize prices per candidate discount and keep the best.

    Each grid point is solved independently; failures are recorded and
    skipped so the audit trail stays complete.
    """
    if not len(gamma_grid):
        raise ValueError("gamma_grid must be non-empty")
    records: list[DiscountPoint] = []
    for gamma in gamma_grid:
        try:
            candidate = replace(instance, discount=float(gamma))
            result = barrier_optimize(candidate, plan_kind, spec, config, bundle)
            records.append(DiscountPoint(gamma=float(gamma), result=result))
        except (ValueError, InfeasibleError) as err:
            records.append(DiscountPoint(gamma=float(gamma), result=None, error=str(err)))
    solved = [p for p in records if p.result is not None]
    if not solved:
        raise InfeasibleError(
            "every discount in the grid failed: " + "; ".join(p.error or "" for p in records)
        )
    best = max(solved, key=lambda p: p.result.objective_value)
    return DiscountSearchResult(gamma=best.gamma, result=best.result, records=tuple(records))


def tradeoff_bound_check(
    instance: Instance, plan: PricingPlan, beta: float
) -> tuple[bool, float]:
    """Check the fairness-revenue tradeoff bound at a feasible plan.

    For ``beta > 1`` the revenue is bounded below by a function of the
    achieved fairness; for ``beta < 1`` the fairness is bounded below by a
    function of the achieved revenue.  Returns (bound holds, slack), slack
    being the bounded quantity minus its bound.  Requires every type to have
    ``alpha < 1`` (log utilities break the closed forms used here).
    """
    if not beta > 0.0 or beta == 1.0:
        raise ValueError(f"beta must be positive and != 1, got {beta}")
    alphas = instance.alphas
    if np.any(alphas >= 1.0):
        raise ValueError("tradeoff bounds require alpha < 1 for every user type")
    outcome = evaluate(instance, plan)
    if not outcome.feasible:
        raise ValueError("tradeoff bounds are stated for feasible plans only")
    gamma = instance.discount
    counts = instance.counts
    fairness = _count_weighted_fairness(instance, outcome, beta)
    revenue = outcome.revenue
    if beta > 1.0:
        floor = (fairness * (1.0 - beta)) ** (1.0 / (1.0 - beta)) * float(
            np.sum(counts * (1.0 - alphas) / (gamma + alphas - 1.0))
        )
        slack = revenue - floor
    else:
        weight = gamma / (1.0 - float(np.min(alphas))) - 1.0
        floor = revenue ** (1.0 - beta) / (1.0 - beta) * weight ** (1.0 - beta)
        slack = fairness - floor
    holds = bool(slack >= -1e-9 * max(1.0, abs(floor)))
    return holds, float(slack)

"""User demand under isoelastic utilities and volume discounts.

A user with utility U submits jobs until the marginal utility of one more
job equals its marginal (discounted) cost.  With a per-job cost ``r`` and a
volume-discount exponent ``gamma`` in (0, 1], the user pays ``r * x**gamma``
for ``x`` jobs and solves

    max_x  U(x) - r * x**gamma.

For the isoelastic family the maximizer has the closed form of a power law
in ``r``; a bisection fallback is provided as an independent numeric route
and for non-isoelastic marginals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

__all__ = [
    "UtilityParams",
    "DemandPoint",
    "optimal_demand",
    "demand_by_bisection",
    "demand_sensitivity",
    "net_utility",
    "demand_power_law",
    "demand_point",
]

#: Relative tolerance met by the closed-form demand (stationarity residual).
STATIONARITY_RTOL = 1e-9


@dataclass(frozen=True)
class UtilityParams:
    """Isoelastic utility ``U(x) = c * x**(1-alpha) / (1-alpha)``.

    ``alpha`` in (0, 1] controls concavity (price sensitivity); at
    ``alpha == 1`` the utility degenerates to ``c * log(x)``.  ``c > 0``
    scales the utility level, in dollars per job**(1-alpha).
    """

    alpha: float
    c: float

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.c > 0.0:
            raise ValueError(f"c must be positive, got {self.c}")

    def value(self, jobs: float) -> float:
        """Utility of processing ``jobs`` jobs; U(0) = 0 by convention."""
        if jobs == 0.0:
            return 0.0
        if self.alpha == 1.0:
            return self.c * math.log(jobs)
        return self.c * jobs ** (1.0 - self.alpha) / (1.0 - self.alpha)

    def marginal(self, jobs: float) -> float:
        """U'(jobs) = c * jobs**(-alpha)."""
        return self.c * jobs ** (-self.alpha)

    def curvature(self, jobs: float) -> float:
        """U''(jobs) = -alpha * c * jobs**(-alpha - 1)."""
        return -self.alpha * self.c * jobs ** (-self.alpha - 1.0)


@dataclass(frozen=True)
class DemandPoint:
    """One evaluated point on a user's demand curve."""

    jobs: float
    per_job_cost: float
    discount: float
    net_utility: float


def _check_args(utility: UtilityParams, per_job_cost: float, discount: float) -> None:
    if not (0.0 < discount <= 1.0):
        raise ValueError(f"discount must lie in (0, 1], got {discount}")
    if utility.alpha < 1.0 and discount <= 1.0 - utility.alpha:
        raise ValueError(
            f"discount {discount} must exceed 1 - alpha = {1.0 - utility.alpha}; "
            "below that the user's optimum is unbounded or undefined"
        )
    if per_job_cost <= 0.0:
        raise ValueError(
            f"per_job_cost must be positive, got {per_job_cost} (free jobs make demand unbounded)"
        )


def demand_power_law(utility: UtilityParams, discount: float) -> tuple[float, float]:
    """Coefficient and exponent of the demand curve ``x*(r) = k * r**e``.

    For ``alpha < 1``: k = (gamma/c)**(1/(1-alpha-gamma)), e = 1/(1-alpha-gamma).
    For ``alpha == 1`` (log utility): k = (c/gamma)**(1/gamma), e = -1/gamma.
    The exponent is strictly negative whenever the arguments are valid.
    """
    gamma = discount
    if utility.alpha == 1.0:
        return (utility.c / gamma) ** (1.0 / gamma), -1.0 / gamma
    e = 1.0 / (1.0 - utility.alpha - gamma)
    return (gamma / utility.c) ** e, e


def optimal_demand(utility: UtilityParams, per_job_cost: float, discount: float) -> float:
    """Utility-maximizing number of jobs at the given discounted per-job cost.

    Solves the stationarity condition U'(x) = per_job_cost * gamma * x**(gamma-1)
    in closed form.  Requires ``discount > 1 - alpha`` (strictly) so that the
    stationary point is a maximum.
    """
    _check_args(utility, per_job_cost, discount)
    k, e = demand_power_law(utility, discount)
    return k * per_job_cost**e


def demand_by_bisection(
    marginal_utility: Callable[[float], float],
    per_job_cost: float,
    discount: float,
    lo: float = 1e-12,
    hi: float = 1e12,
    max_iter: int = 200,
    rtol: float = 1e-12,
) -> float:
    """Numeric root of U'(x) = r * gamma * x**(gamma-1) on a geometric bracket.

    Independent of the closed form: works from the marginal utility alone, so
    it also serves non-isoelastic utilities.  The default bracket
    [1e-12, 1e12] is widened geometrically when the root falls outside it.
    Inputs whose net marginal changes sign more than once on the bracket are
    rejected (the root would be ambiguous).
    """
    if per_job_cost <= 0.0:
        raise ValueError("per_job_cost must be positive")
    if not (0.0 < discount <= 1.0):
        raise ValueError("discount must lie in (0, 1]")

    def residual(x: float) -> float:
        return marginal_utility(x) - per_job_cost * discount * x ** (discount - 1.0)

    for _ in range(64):  # widen until the root is bracketed
        if residual(lo) > 0.0:
            break
        lo /= 1e3
        if lo < 1e-290:
            raise ValueError("no positive bracket: net marginal utility never positive")
    for _ in range(64):
        if residual(hi) < 0.0:
            break
        hi *= 1e3
        if hi > 1e290:
            raise ValueError("demand does not saturate: no finite root found")

    # Reject non-monotone (non-isoelastic) inputs with several crossings.
    samples = [lo * (hi / lo) ** (i / 64.0) for i in range(65)]
    signs = [residual(x) > 0.0 for x in samples]
    crossings = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    if crossings > 1:
        raise ValueError(
            f"net marginal utility changes sign {crossings} times on the bracket; "
            "demand is ambiguous for this utility"
        )

    for _ in range(max_iter):
        mid = math.sqrt(lo * hi)
        if residual(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * lo:
            break
    return math.sqrt(lo * hi)


def demand_sensitivity(utility: UtilityParams, per_job_cost: float, discount: float) -> float:
    """Rate of change of demand with the per-job cost, d(x*)/dr.

    Evaluates gamma * x**(gamma-1) / (U''(x) + gamma*(1-gamma)*x**(gamma-2)*r)
    at the optimal demand.  Strictly negative under the validity conditions.
    """
    _check_args(utility, per_job_cost, discount)
    gamma = discount
    x = optimal_demand(utility, per_job_cost, discount)
    denom = utility.curvature(x) + gamma * (1.0 - gamma) * x ** (gamma - 2.0) * per_job_cost
    return gamma * x ** (gamma - 1.0) / denom


def net_utility(utility: UtilityParams, per_job_cost: float, discount: float) -> float:
    """Consumer surplus U(x*) - r * (x*)**gamma at the optimal demand.

    Never negative: a user whose best interior option loses money processes
    zero jobs instead (relevant only for log utility; for ``alpha < 1`` the
    interior optimum is always profitable).
    """
    _check_args(utility, per_job_cost, discount)
    x = optimal_demand(utility, per_job_cost, discount)
    surplus = utility.value(x) - per_job_cost * x**discount
    return max(surplus, 0.0)


def demand_point(utility: UtilityParams, per_job_cost: float, discount: float) -> DemandPoint:
    """Evaluate demand, cost, and surplus together, checking stationarity."""
    x = optimal_demand(utility, per_job_cost, discount)
    if x > 0.0:
        residual = abs(
            utility.marginal(x) - per_job_cost * discount * x ** (discount - 1.0)
        )
        if not residual <= STATIONARITY_RTOL * per_job_cost:
            raise AssertionError(
                f"stationarity residual {residual:.3e} exceeds tolerance at x={x!r}"
            )
    return DemandPoint(
        jobs=x,
        per_job_cost=per_job_cost,
        discount=discount,
        net_utility=net_utility(utility, per_job_cost, discount),
    )

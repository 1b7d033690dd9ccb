"""Market instances and the three pricing plans.

An :class:`Instance` is a market: resource capacities, user types (each a
population of identical clients with a per-job resource requirement column
and an isoelastic utility), and a volume-discount exponent.  A pricing plan
maps to a per-job cost for every type:

* bundled      -- one price ``p`` for a fixed resource bundle ``b``; a job
                  needs ``mu = max_i R_i / b_i`` bundles, so costs ``mu**gamma * p``;
* resource     -- a unit price per resource; a job costs ``sum_i p_i * R_i**gamma``;
* differentiated -- an operator-chosen per-type job price.

Billing is discounted (``r * x**gamma``) but physical usage is not: capacity
is consumed at ``R_ij * x_j`` regardless of the discount.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .demand import UtilityParams, demand_power_law, net_utility

__all__ = [
    "ResourceModel",
    "UserType",
    "Instance",
    "BundledPlan",
    "ResourcePlan",
    "DifferentiatedPlan",
    "PricingPlan",
    "Outcome",
    "bundle_requirement",
    "per_job_cost",
    "evaluate",
    "dominant_info",
    "lift_resource_to_differentiated",
    "instance_to_json",
    "instance_from_json",
    "load_instance",
    "save_instance",
]

#: Absolute slack allowed when comparing usage against capacity.
FEASIBILITY_ATOL = 1e-9


def _freeze(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ResourceModel:
    """Named resources and their strictly positive capacities."""

    names: tuple[str, ...]
    capacities: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "capacities", _freeze(self.capacities, "capacities"))
        if len(self.names) != self.capacities.size or not self.names:
            raise ValueError("need at least one resource, with one capacity per name")
        if not np.all(self.capacities > 0.0):
            raise ValueError(f"capacities must be strictly positive, got {self.capacities}")

    @property
    def m(self) -> int:
        return len(self.names)


@dataclass(frozen=True, eq=False)
class UserType:
    """A population of ``count`` identical clients.

    ``requirements[i]`` is the amount of resource ``i`` one job consumes;
    at least one entry must be positive.
    """

    label: str
    count: int
    requirements: np.ndarray
    utility: UtilityParams

    def __post_init__(self) -> None:
        object.__setattr__(self, "requirements", _freeze(self.requirements, "requirements"))
        if self.count < 1 or int(self.count) != self.count:
            raise ValueError(f"count must be a positive integer, got {self.count}")
        if np.any(self.requirements < 0.0) or not np.any(self.requirements > 0.0):
            raise ValueError(
                f"requirements must be nonnegative with at least one positive entry, "
                f"got {self.requirements}"
            )


@dataclass(frozen=True, eq=False)
class Instance:
    """A market: resources, user types, and the volume discount."""

    resources: ResourceModel
    user_types: tuple[UserType, ...]
    discount: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "user_types", tuple(self.user_types))
        if not self.user_types:
            raise ValueError("need at least one user type")
        if not (0.0 < self.discount <= 1.0):
            raise ValueError(f"discount must lie in (0, 1], got {self.discount}")
        for j, user in enumerate(self.user_types):
            if user.requirements.size != self.resources.m:
                raise ValueError(
                    f"user_types[{j}].requirements: expected {self.resources.m} entries, "
                    f"got {user.requirements.size}"
                )
            alpha = user.utility.alpha
            if alpha < 1.0 and self.discount <= 1.0 - alpha:
                raise ValueError(
                    f"user_types[{j}]: discount {self.discount} must exceed "
                    f"1 - alpha = {1.0 - alpha} for demand to be well-defined"
                )

    @property
    def n(self) -> int:
        return len(self.user_types)

    @property
    def m(self) -> int:
        return self.resources.m

    @property
    def requirement_matrix(self) -> np.ndarray:
        """Resources-by-types matrix R with R[i, j] = requirements of type j."""
        return np.column_stack([u.requirements for u in self.user_types])

    @property
    def counts(self) -> np.ndarray:
        return np.array([u.count for u in self.user_types], dtype=float)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([u.utility.alpha for u in self.user_types])

    def demand_curves(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-type power-law coefficients (k, e) with x*_j(r) = k_j * r**e_j."""
        pairs = [demand_power_law(u.utility, self.discount) for u in self.user_types]
        k, e = zip(*pairs)
        return np.array(k), np.array(e)


@dataclass(frozen=True, eq=False)
class BundledPlan:
    """One unit price for a fixed bundle of resources."""

    bundle: np.ndarray
    price: float
    kind = "bundled"

    def __post_init__(self) -> None:
        object.__setattr__(self, "bundle", _freeze(self.bundle, "bundle"))
        if not np.all(self.bundle > 0.0):
            raise ValueError(f"bundle entries must be strictly positive, got {self.bundle}")
        if not self.price > 0.0:
            raise ValueError(f"bundle price must be positive, got {self.price}")

    def per_job_costs(self, instance: Instance) -> np.ndarray:
        mu = np.array([bundle_requirement(u, self.bundle) for u in instance.user_types])
        return mu**instance.discount * self.price


@dataclass(frozen=True, eq=False)
class ResourcePlan:
    """An independent unit price per resource."""

    prices: np.ndarray
    kind = "resource"

    def __post_init__(self) -> None:
        object.__setattr__(self, "prices", _freeze(self.prices, "prices"))
        if np.any(self.prices < 0.0) or not np.any(self.prices > 0.0):
            raise ValueError(
                f"resource prices must be nonnegative with at least one positive, "
                f"got {self.prices}"
            )

    def per_job_costs(self, instance: Instance) -> np.ndarray:
        if self.prices.size != instance.m:
            raise ValueError(f"expected {instance.m} resource prices, got {self.prices.size}")
        costs = (instance.requirement_matrix**instance.discount).T @ self.prices
        for j, r in enumerate(costs):
            if r <= 0.0:
                raise ValueError(
                    f"user_types[{j}] ({instance.user_types[j].label}) has zero per-job "
                    "cost under these resource prices; its demand would be unbounded"
                )
        return costs


@dataclass(frozen=True, eq=False)
class DifferentiatedPlan:
    """An operator-chosen per-type job price."""

    prices: np.ndarray
    kind = "differentiated"

    def __post_init__(self) -> None:
        object.__setattr__(self, "prices", _freeze(self.prices, "prices"))
        if not np.all(self.prices > 0.0):
            raise ValueError(f"differentiated prices must be positive, got {self.prices}")

    def per_job_costs(self, instance: Instance) -> np.ndarray:
        if self.prices.size != instance.n:
            raise ValueError(f"expected {instance.n} per-type prices, got {self.prices.size}")
        return self.prices.copy()


PricingPlan = Union[BundledPlan, ResourcePlan, DifferentiatedPlan]


@dataclass(frozen=True, eq=False)
class Outcome:
    """Evaluation of a plan on an instance.

    ``usage`` and ``leftover`` are physical (undiscounted); ``revenue`` is
    billed (discounted).  ``feasible`` reflects the plan's own constraint:
    the capacity vector for resource and differentiated plans, the bundle
    count for bundled plans.
    """

    demands: np.ndarray
    per_job_costs: np.ndarray
    net_utilities: np.ndarray
    revenue: float
    usage: np.ndarray
    leftover: np.ndarray
    feasible: bool


def bundle_requirement(user: UserType, bundle) -> float:
    """Bundles needed per job: max_i requirements[i] / bundle[i]."""
    b = np.asarray(bundle, dtype=float)
    if np.any(b <= 0.0):
        raise ValueError(f"bundle entries must be strictly positive, got {b}")
    if b.size != user.requirements.size:
        raise ValueError(f"bundle has {b.size} entries, requirements {user.requirements.size}")
    return float(np.max(user.requirements / b))


def per_job_cost(instance: Instance, plan: PricingPlan, user_index: int) -> float:
    """Per-job cost of one user type under the plan."""
    return float(plan.per_job_costs(instance)[user_index])


def evaluate(instance: Instance, plan: PricingPlan) -> Outcome:
    """Demands, utilities, usage, and revenue induced by a plan.

    Never raises on an over-capacity plan; infeasibility is recorded in the
    ``feasible`` flag so that searches can step through infeasible points.
    """
    gamma = instance.discount
    costs = plan.per_job_costs(instance)
    k, e = instance.demand_curves()
    demands = k * costs**e
    utilities = np.array(
        [net_utility(u.utility, float(r), gamma) for u, r in zip(instance.user_types, costs)]
    )
    counts = instance.counts
    usage = instance.requirement_matrix @ (counts * demands)
    leftover = instance.resources.capacities - usage
    revenue = float(np.sum(counts * costs * demands**gamma))

    if isinstance(plan, BundledPlan):
        mu = np.array([bundle_requirement(u, plan.bundle) for u in instance.user_types])
        available = float(np.min(instance.resources.capacities / plan.bundle))
        feasible = bool(np.sum(counts * mu * demands) <= available + FEASIBILITY_ATOL)
    else:
        feasible = bool(np.all(leftover >= -FEASIBILITY_ATOL))

    return Outcome(
        demands=demands,
        per_job_costs=costs,
        net_utilities=utilities,
        revenue=revenue,
        usage=usage,
        leftover=leftover,
        feasible=feasible,
    )


def dominant_info(user: UserType, resources: ResourceModel, demand: float) -> tuple[int, float]:
    """Dominant resource index and dominant share at the given demand.

    The dominant resource maximizes ``requirements[i] / capacity[i]``; ties
    break to the lowest index.  The share is that ratio times the demand.
    """
    ratios = user.requirements / resources.capacities
    index = int(np.argmax(ratios))
    return index, float(ratios[index] * demand)


def lift_resource_to_differentiated(instance: Instance, plan: ResourcePlan) -> DifferentiatedPlan:
    """Differentiated plan charging each type its resource-plan job cost.

    The per-job cost of every type is unchanged, so demands, utilities,
    usage, and revenue are identical to the resource plan's.
    """
    if not isinstance(plan, ResourcePlan):
        raise TypeError(f"expected a ResourcePlan, got {type(plan).__name__}")
    return DifferentiatedPlan(prices=plan.per_job_costs(instance))


# ---------------------------------------------------------------------------
# JSON interface


def instance_to_json(instance: Instance) -> dict:
    """Plain-dict form of an instance (stable field order)."""
    return {
        "resources": [
            {"name": name, "capacity": float(cap)}
            for name, cap in zip(instance.resources.names, instance.resources.capacities)
        ],
        "user_types": [
            {
                "label": u.label,
                "count": int(u.count),
                "alpha": float(u.utility.alpha),
                "c": float(u.utility.c),
                "requirements": [float(v) for v in u.requirements],
            }
            for u in instance.user_types
        ],
        "gamma": float(instance.discount),
    }


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ValueError(f"{path}.{key}: missing field")
    return obj[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{path}: expected a number, got {value!r}")
    return float(value)


def instance_from_json(obj: dict) -> Instance:
    """Parse and validate an instance, naming the offending field on errors."""
    if not isinstance(obj, dict):
        raise ValueError("instance: expected a JSON object")
    resources = _require(obj, "resources", "instance")
    if not isinstance(resources, list) or not resources:
        raise ValueError("instance.resources: expected a non-empty list")
    names, capacities = [], []
    for i, res in enumerate(resources):
        path = f"resources[{i}]"
        if not isinstance(res, dict):
            raise ValueError(f"{path}: expected an object")
        names.append(str(_require(res, "name", path)))
        cap = _number(_require(res, "capacity", path), f"{path}.capacity")
        if cap <= 0.0:
            raise ValueError(f"{path}.capacity: must be strictly positive, got {cap}")
        capacities.append(cap)

    raw_types = _require(obj, "user_types", "instance")
    if not isinstance(raw_types, list) or not raw_types:
        raise ValueError("instance.user_types: expected a non-empty list")
    gamma = _number(_require(obj, "gamma", "instance"), "instance.gamma")

    user_types = []
    for j, raw in enumerate(raw_types):
        path = f"user_types[{j}]"
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: expected an object")
        label = str(_require(raw, "label", path))
        count = _require(raw, "count", path)
        if isinstance(count, bool) or not isinstance(count, int) or count < 1:
            raise ValueError(f"{path}.count: expected a positive integer, got {count!r}")
        alpha = _number(_require(raw, "alpha", path), f"{path}.alpha")
        c = _number(_require(raw, "c", path), f"{path}.c")
        reqs = _require(raw, "requirements", path)
        if not isinstance(reqs, list):
            raise ValueError(f"{path}.requirements: expected a list")
        reqs = [_number(v, f"{path}.requirements[{i}]") for i, v in enumerate(reqs)]
        if len(reqs) != len(names):
            raise ValueError(
                f"{path}.requirements: expected {len(names)} entries, got {len(reqs)}"
            )
        try:
            utility = UtilityParams(alpha=alpha, c=c)
            user_types.append(
                UserType(label=label, count=count, requirements=reqs, utility=utility)
            )
        except ValueError as err:
            raise ValueError(f"{path}: {err}") from None

    try:
        return Instance(
            resources=ResourceModel(names=tuple(names), capacities=capacities),
            user_types=tuple(user_types),
            discount=gamma,
        )
    except ValueError as err:
        raise ValueError(f"instance: {err}") from None


def load_instance(path) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return instance_from_json(json.load(fh))


def save_instance(instance: Instance, path) -> None:
    Path(path).write_text(
        json.dumps(instance_to_json(instance), indent=2, sort_keys=False) + "\n",
        encoding="utf-8",
    )

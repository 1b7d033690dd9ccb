"""End-to-end trace ingestion: tasks -> jobs -> clusters -> priced market.

Generates a synthetic trace with three planted job types, pushes it through
parsing, aggregation, outlier filtering, and k-means, then optimizes prices
on the resulting market instance.
"""

import math
import tempfile
from pathlib import Path

import numpy as np

from cloudpricing import ObjectiveSpec, barrier_optimize
from cloudpricing.synth import planted_trace
from cloudpricing.trace import (
    aggregate_and_filter,
    build_instance,
    cluster_report,
    kmeans,
    parse_trace,
    trace_statistics,
)

centers = np.array([[0.4, 2.7], [0.01, 0.02], [0.6, 0.5]])
records = planted_trace(centers, jobs_per_cluster=120, noise=0.006, seed=2024)

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "trace.csv"
    with open(path, "w") as fh:
        fh.write("time,job_id,task_id,cpu,mem\n")
        for r in records:
            fh.write(f"{r.time},{r.job_id},{r.task_id},{r.cpu!r},{r.mem!r}\n")
    parsed = parse_trace(path)

print(f"parsed {len(parsed)} task records")
jobs = aggregate_and_filter(parsed, k_std=math.inf)
stats = trace_statistics(jobs)
print(
    f"{len(jobs)} jobs; mean cpu {stats['mean_cpu']:.4f}, mean mem {stats['mean_mem']:.4f}"
)

model = kmeans(jobs, k=3, restarts=30, seed=7)
print(f"k-means inertia {model.inertia:.5f} after 30 restarts")
print(cluster_report(model), end="")

# Pair clusters with utility parameters by job size: the hungriest jobs get
# the least price-sensitive users, the tiny jobs the big population.
rank = np.argsort(np.argsort(-model.centroids.sum(axis=1)))
alphas_by_size, counts_by_size = (0.4, 0.5, 0.7), (1, 1, 8)
instance = build_instance(
    model,
    capacities=(6.0, 6.0),
    gamma=1.0,
    alphas=[alphas_by_size[r] for r in rank],
    cs=(1.0, 1.0, 1.0),
    counts=[counts_by_size[r] for r in rank],
)
print(f"built a {instance.n}-type market on {instance.resources.names}")

result = barrier_optimize(instance, "differentiated", ObjectiveSpec(nu=1.0, beta=2.0))
print(f"optimized differentiated prices: {np.round(result.plan.prices, 4)}")
print(f"revenue {result.outcome.revenue:.4f}, leftover {np.round(result.outcome.leftover, 4)}")

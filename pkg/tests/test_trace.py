import math

import numpy as np
import pytest

from cloudpricing.synth import planted_trace
from cloudpricing.trace import (
    JobUsage,
    TaskRecord,
    aggregate_and_filter,
    build_instance,
    cluster_report,
    kmeans,
    parse_trace,
    trace_statistics,
)

HEADER = "time,job_id,task_id,cpu,mem\n"


def write_trace(tmp_path, body: str):
    path = tmp_path / "trace.csv"
    path.write_text(HEADER + body)
    return path


class TestParseTrace:
    def test_two_rows(self, tmp_path):
        path = write_trace(tmp_path, "0,j1,t1,0.1,0.2\n1,j1,t1,0.2,0.1\n")
        records = parse_trace(path)
        assert len(records) == 2
        assert records[0] == TaskRecord(0, "j1", "t1", 0.1, 0.2)

    def test_header_only(self, tmp_path):
        assert parse_trace(write_trace(tmp_path, "")) == []

    def test_negative_usage_reports_line(self, tmp_path):
        path = write_trace(tmp_path, "0,j1,t1,0.1,0.2\n1,j1,t2,-1,0.2\n")
        with pytest.raises(ValueError, match="line 3"):
            parse_trace(path)

    def test_non_numeric_usage(self, tmp_path):
        path = write_trace(tmp_path, "0,j1,t1,abc,0.2\n")
        with pytest.raises(ValueError, match="line 2"):
            parse_trace(path)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="expected header"):
            parse_trace(path)

    def test_duplicate_key(self, tmp_path):
        path = write_trace(tmp_path, "0,j1,t1,0.1,0.2\n0,j1,t1,0.3,0.4\n")
        with pytest.raises(ValueError, match="duplicate"):
            parse_trace(path)


class TestAggregateAndFilter:
    def test_sums_tasks(self):
        records = [
            TaskRecord(0, "j1", "t1", 0.1, 0.5),
            TaskRecord(1, "j1", "t2", 0.2, 0.25),
        ]
        jobs = aggregate_and_filter(records, k_std=math.inf)
        assert len(jobs) == 1
        assert jobs[0].totals == pytest.approx([0.3, 0.75])

    def test_outlier_dropped(self):
        records = [TaskRecord(0, f"j{i:03d}", "t", 1.0, 1.0) for i in range(100)]
        records.append(TaskRecord(0, "jbig", "t", 1000.0, 1.0))
        jobs = aggregate_and_filter(records, k_std=1.0)
        ids = {job.job_id for job in jobs}
        assert "jbig" not in ids
        assert len(jobs) == 100

    def test_infinite_threshold_keeps_all(self):
        records = [TaskRecord(0, f"j{i}", "t", float(i), 1.0) for i in range(10)]
        assert len(aggregate_and_filter(records, k_std=math.inf)) == 10

    def test_permutation_invariant(self, rng):
        records = [
            TaskRecord(int(rng.integers(0, 3)), f"j{i % 7}", f"t{i}", float(i), float(i) / 2)
            for i in range(30)
        ]
        forward = aggregate_and_filter(records, k_std=1.0)
        backward = aggregate_and_filter(list(reversed(records)), k_std=1.0)
        assert [j.job_id for j in forward] == [j.job_id for j in backward]
        assert all(
            np.allclose(a.totals, b.totals) for a, b in zip(forward, backward)
        )

    def test_filter_idempotent_with_same_statistics(self):
        records = [TaskRecord(0, f"j{i:03d}", "t", 1.0 + 0.01 * i, 1.0) for i in range(50)]
        records.append(TaskRecord(0, "jbig", "t", 500.0, 1.0))
        once = aggregate_and_filter(records, k_std=1.0)
        points = np.array([j.totals for j in once])
        pre = np.array(
            [j.totals for j in aggregate_and_filter(records, k_std=math.inf)]
        )
        mean, std = pre.mean(axis=0), pre.std(axis=0)
        keep = np.all(np.abs(points - mean) <= 1.0 * std, axis=1)
        assert keep.all()  # re-applying the same statistics drops nothing


class TestKmeans:
    def test_single_cluster_is_mean(self, rng):
        jobs = [JobUsage(f"j{i}", rng.uniform(0, 1, size=2)) for i in range(20)]
        model = kmeans(jobs, k=1, restarts=3, seed=0)
        points = np.array([j.totals for j in jobs])
        assert model.centroids[0] == pytest.approx(points.mean(axis=0))
        assert model.counts.tolist() == [20]

    def test_planted_clusters_recovered(self):
        centers = np.array([[0.4, 2.7], [0.01, 0.02], [0.6, 0.5]])
        separation = min(
            np.linalg.norm(a - b) for i, a in enumerate(centers) for b in centers[i + 1 :]
        )
        records = planted_trace(centers, jobs_per_cluster=60, noise=0.01 * separation, seed=9)
        jobs = aggregate_and_filter(records, k_std=math.inf)
        model = kmeans(jobs, k=3, restarts=30, seed=1)
        # recovery error measured against the cluster separation scale
        for center in centers:
            nearest = min(np.linalg.norm(model.centroids - center, axis=1))
            assert nearest <= 0.05 * separation

    def test_duplicate_points_rejected(self):
        jobs = [JobUsage(f"j{i}", np.array([1.0, 1.0])) for i in range(5)]
        with pytest.raises(ValueError, match="distinct"):
            kmeans(jobs, k=2, restarts=2, seed=0)

    def test_deterministic(self, rng):
        jobs = [JobUsage(f"j{i}", rng.uniform(0, 1, size=2)) for i in range(40)]
        a = kmeans(jobs, k=3, restarts=10, seed=123)
        b = kmeans(jobs, k=3, restarts=10, seed=123)
        assert np.array_equal(a.centroids, b.centroids)
        assert a.inertia == b.inertia

    def test_objective_history_non_increasing(self, rng):
        jobs = [JobUsage(f"j{i}", rng.uniform(0, 5, size=2)) for i in range(60)]
        model = kmeans(jobs, k=4, restarts=5, seed=2)
        history = model.objective_history
        assert all(b <= a + 1e-9 for a, b in zip(history, history[1:]))

    def test_best_of_restarts(self, rng):
        jobs = [JobUsage(f"j{i}", rng.uniform(0, 5, size=2)) for i in range(60)]
        model = kmeans(jobs, k=3, restarts=20, seed=3)
        assert model.inertia <= min(model.restart_inertias) + 1e-12


class TestBuildInstance:
    def test_reference_configuration(self):
        centers = np.array([[0.4, 2.7], [0.01, 0.02], [0.6, 0.5]])
        records = planted_trace(centers, jobs_per_cluster=40, noise=1e-6, seed=4)
        jobs = aggregate_and_filter(records, k_std=math.inf)
        model = kmeans(jobs, k=3, restarts=10, seed=4)
        instance = build_instance(
            model,
            capacities=(6.0, 6.0),
            gamma=1.0,
            alphas=(0.4, 0.7, 0.5),
            cs=(1.0, 1.0, 1.0),
            counts=(1, 8, 1),
        )
        assert instance.n == 3
        # per-job requirements recover the planted centers
        sums = sorted(instance.requirement_matrix.sum(axis=0))
        assert sums == pytest.approx(sorted([3.1, 0.03, 1.1]), rel=1e-3)

    def test_single_cluster(self):
        model = kmeans([JobUsage("a", np.array([1.0, 1.0])), JobUsage("b", np.array([1.2, 0.8]))], 1, 1, 0)
        instance = build_instance(model, (1.0, 1.0), 1.0, (0.5,), (1.0,), (1,))
        assert instance.n == 1

    def test_discount_alpha_conflict(self):
        model = kmeans([JobUsage("a", np.array([1.0, 1.0])), JobUsage("b", np.array([1.2, 0.8]))], 1, 1, 0)
        with pytest.raises(ValueError, match="discount"):
            build_instance(model, (1.0, 1.0), 0.4, (0.5,), (1.0,), (1,))


class TestReporting:
    def test_cluster_report_shape(self):
        model = kmeans(
            [JobUsage(f"j{i}", np.array([float(i), 1.0])) for i in range(6)], 2, 3, 0
        )
        report = cluster_report(model)
        lines = report.strip().splitlines()
        assert lines[0] == "cluster_id,centroid_cpu,centroid_mem,count"
        assert len(lines) == 3

    def test_trace_statistics(self):
        jobs = [JobUsage("a", np.array([1.0, 2.0])), JobUsage("b", np.array([3.0, 6.0]))]
        stats = trace_statistics(jobs)
        assert stats["mean_cpu"] == pytest.approx(2.0)
        assert stats["mean_mem"] == pytest.approx(4.0)
        assert stats["std_over_mean_cpu"] == pytest.approx(0.5)

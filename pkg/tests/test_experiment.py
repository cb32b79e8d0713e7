"""Experiment matrix: row shapes, aggregates, failures, reproducible CSVs."""

import math
import statistics

import pytest

from dagsched.experiment import (
    RUNS_HEADER,
    SUMMARY_HEADER,
    ExperimentSpec,
    run_experiment,
)
from dagsched.generate import GeneratorParams, generate_instance
from dagsched.partition import PARTITIONERS
from dagsched.sched import POLICIES

from conftest import build_cluster, build_diamond


@pytest.fixture(scope="module")
def instance():
    return generate_instance(GeneratorParams(vertices=40, devices=3, seed=5))


@pytest.fixture(scope="module")
def small_result(instance):
    graph, cluster = instance
    spec = ExperimentSpec(partitioners=("hash", "critical_path"),
                          schedulers=("fifo", "pct"), repetitions=10,
                          seed_base=100)
    return spec, run_experiment(graph, cluster, spec)


class TestShape:
    def test_row_and_stat_counts(self, small_result):
        _, result = small_result
        assert len(result.rows) == 40
        assert len(result.stats) == 4

    def test_rows_ordered_by_combination(self, small_result):
        _, result = small_result
        combos = [(r.partitioner, r.scheduler, r.repetition)
                  for r in result.rows]
        assert combos == sorted(
            combos, key=lambda c: (("hash", "critical_path").index(c[0]),
                                   ("fifo", "pct").index(c[1]), c[2]))

    def test_seed_column_tracks_base(self, small_result):
        _, result = small_result
        for row in result.rows:
            assert row.seed == 100 + row.repetition

    def test_stats_cover_full_matrix(self, small_result):
        _, result = small_result
        assert [(s.partitioner, s.scheduler) for s in result.stats] == [
            ("hash", "fifo"), ("hash", "pct"),
            ("critical_path", "fifo"), ("critical_path", "pct")]


class TestAggregates:
    def test_summary_recomputes_from_rows(self, small_result):
        _, result = small_result
        for stat in result.stats:
            mks = [r.makespan for r in result.rows
                   if (r.partitioner, r.scheduler) == (stat.partitioner,
                                                       stat.scheduler)]
            uts = [r.mean_utilization for r in result.rows
                   if (r.partitioner, r.scheduler) == (stat.partitioner,
                                                       stat.scheduler)]
            assert stat.mean_makespan == statistics.fmean(mks)
            assert stat.std_makespan == statistics.pstdev(mks)
            assert stat.mean_utilization == statistics.fmean(uts)
            assert stat.failures == 0
            assert stat.repetitions == 10

    def test_deterministic_strategy_has_zero_spread(self, small_result):
        _, result = small_result
        by_combo = {(s.partitioner, s.scheduler): s for s in result.stats}
        assert by_combo[("critical_path", "pct")].std_makespan == 0.0

    def test_seeded_strategy_varies(self, small_result):
        _, result = small_result
        hash_rows = {r.makespan for r in result.rows
                     if r.partitioner == "hash" and r.scheduler == "fifo"}
        assert len(hash_rows) > 1


class TestFailures:
    def test_infeasible_combos_recorded_not_fatal(self):
        graph = build_diamond(volumes=(10.0, 10.0, 10.0, 10.0))
        cluster = build_cluster([1.0], memories=[5.0])
        spec = ExperimentSpec(repetitions=3)
        result = run_experiment(graph, cluster, spec)
        assert result.rows == ()
        assert len(result.stats) == len(PARTITIONERS) * len(POLICIES)
        for stat in result.stats:
            assert stat.failures == 3
            assert math.isnan(stat.mean_makespan)
            assert math.isnan(stat.std_makespan)
        assert ",nan,nan,nan" in result.summary_csv()


class TestCsv:
    def test_headers(self):
        assert RUNS_HEADER == ("partitioner,scheduler,repetition,seed,"
                               "makespan,peak_memory_violations,"
                               "mean_utilization")
        assert SUMMARY_HEADER == ("partitioner,scheduler,repetitions,failures,"
                                  "mean_makespan,std_makespan,"
                                  "mean_utilization")

    def test_rerun_is_byte_identical(self, instance, small_result):
        graph, cluster = instance
        spec, first = small_result
        second = run_experiment(graph, cluster, spec)
        assert second.runs_csv() == first.runs_csv()
        assert second.summary_csv() == first.summary_csv()

    def test_csv_bodies_parse_back(self, small_result):
        _, result = small_result
        lines = result.runs_csv().splitlines()
        assert lines[0] == RUNS_HEADER
        assert len(lines) == 41
        cells = lines[1].split(",")
        assert cells[0] == "hash" and cells[1] == "fifo"
        assert float(cells[4]) == result.rows[0].makespan
        assert int(cells[5]) == result.rows[0].peak_memory_violations

    def test_write_creates_both_files(self, tmp_path, small_result):
        _, result = small_result
        runs_path, summary_path = result.write(tmp_path / "exp")
        assert runs_path == f"{tmp_path / 'exp'}_runs.csv"
        with open(runs_path) as handle:
            assert handle.read() == result.runs_csv()
        with open(summary_path) as handle:
            assert handle.read() == result.summary_csv()


class TestSpecValidation:
    def test_zero_repetitions(self):
        with pytest.raises(ValueError, match="repetitions"):
            ExperimentSpec(repetitions=0)

    def test_unknown_partitioner(self):
        with pytest.raises(ValueError, match="unknown partitioning"):
            ExperimentSpec(partitioners=("hash", "wat"))

    def test_unknown_scheduler(self):
        with pytest.raises(ValueError, match="unknown scheduling"):
            ExperimentSpec(schedulers=("lifo",))

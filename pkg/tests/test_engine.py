"""Backend selection and bit-parity between the pure and compiled lanes."""

import random

import pytest

from dagsched import engine, oracle, simulate
from dagsched.partition import make_partition
from dagsched.sched import POLICIES

from conftest import (
    build_cluster,
    build_diamond,
    random_cluster,
    random_dag,
    random_partition,
)

needs_compiled = pytest.mark.skipif(not engine.HAVE_COMPILED,
                                    reason="extension not built")


class TestResolveBackend:
    def test_explicit_pure(self):
        assert engine.resolve_backend("pure") == "pure"

    @needs_compiled
    def test_explicit_compiled(self):
        assert engine.resolve_backend("compiled") == "compiled"

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown engine backend"):
            engine.resolve_backend("turbo")

    def test_env_variable_read_per_call(self, monkeypatch):
        monkeypatch.setenv("DAGSCHED_BACKEND", "pure")
        assert engine.resolve_backend(None) == "pure"
        assert engine.backend_name() == "pure"
        monkeypatch.delenv("DAGSCHED_BACKEND")
        expected = "compiled" if engine.HAVE_COMPILED else "pure"
        assert engine.backend_name() == expected

    def test_env_garbage_rejected(self, monkeypatch):
        monkeypatch.setenv("DAGSCHED_BACKEND", "turbo")
        with pytest.raises(ValueError):
            engine.resolve_backend(None)

    def test_argument_beats_environment(self, monkeypatch):
        monkeypatch.setenv("DAGSCHED_BACKEND", "turbo")
        assert engine.resolve_backend("pure") == "pure"


@needs_compiled
class TestSimulationParity:
    def run_both(self, graph, cluster, partition, policy, seed):
        pure = simulate.run(graph, cluster, partition, policy, seed=seed,
                            backend="pure")
        compiled = simulate.run(graph, cluster, partition, policy, seed=seed,
                                backend="compiled")
        return pure, compiled

    def assert_identical(self, pure, compiled):
        ptrace, preport = pure
        ctrace, creport = compiled
        assert simulate.trace_lines(ptrace) == simulate.trace_lines(ctrace)
        assert preport.makespan == creport.makespan
        assert preport.utilization == creport.utilization
        assert preport.peak_memory == creport.peak_memory
        assert preport.memory_violations == creport.memory_violations
        assert preport.event_count == creport.event_count
        assert ptrace.vertex_times == ctrace.vertex_times
        assert ptrace.transfers == ctrace.transfers
        assert ptrace.device_order == ctrace.device_order
        assert ptrace.idle == ctrace.idle

    def test_diamond_all_policies(self):
        graph = build_diamond()
        cluster = build_cluster([2.0, 1.0])
        partition = make_partition("critical_path", graph, cluster)
        for policy in POLICIES:
            for seed in (0, 1, 7):
                self.assert_identical(*self.run_both(
                    graph, cluster, partition, policy, seed))

    def test_random_corpus(self):
        rng = random.Random(20240817)
        checked = 0
        for _ in range(60):
            graph = random_dag(rng, max_vertices=9, int_costs=False)
            cluster = random_cluster(rng)
            partition = random_partition(rng, graph, cluster)
            policy = rng.choice(POLICIES)
            seed = rng.randrange(1000)
            self.assert_identical(*self.run_both(
                graph, cluster, partition, policy, seed))
            checked += 1
        assert checked == 60

    def test_tight_memory_violations_match(self):
        rng = random.Random(99)
        for _ in range(20):
            graph = random_dag(rng, max_vertices=7, int_costs=False)
            cluster = random_cluster(rng, tight_memory=True)
            partition = random_partition(rng, graph, cluster)
            pure, compiled = self.run_both(graph, cluster, partition, "fifo",
                                           seed=3)
            self.assert_identical(pure, compiled)


@needs_compiled
class TestOracleParity:
    def test_optimal_matches_between_lanes(self, monkeypatch):
        rng = random.Random(5150)
        for _ in range(8):
            graph = random_dag(rng, max_vertices=5)
            cluster = random_cluster(rng, max_devices=2)
            monkeypatch.setenv("DAGSCHED_BACKEND", "pure")
            pure = oracle.optimal(graph, cluster)
            monkeypatch.setenv("DAGSCHED_BACKEND", "compiled")
            compiled = oracle.optimal(graph, cluster)
            assert pure.makespan == compiled.makespan
            assert pure.partition.assignment == compiled.partition.assignment
            assert pure.device_order == compiled.device_order
            assert pure.assignments_tried == compiled.assignments_tried
            assert pure.schedules_tried == compiled.schedules_tried


@needs_compiled
def test_forced_order_factory_parity():
    exec_t = [2.0, 3.0, 4.0, 1.0]
    in_ptr = [0, 0, 1, 2, 4]
    in_src = [0, 0, 1, 2]
    in_tt = [2.0, 2.0, 2.0, 2.0]
    pure_eval = engine.forced_order_factory("pure")(
        exec_t, in_ptr, in_src, in_tt, 4, 2)
    comp_eval = engine.forced_order_factory("compiled")(
        exec_t, in_ptr, in_src, in_tt, 4, 2)
    for sequences in ([[0, 1, 2, 3], []], [[0, 1], [2, 3]],
                      [[0, 2], [1, 3]], [[3, 2, 1, 0], []]):
        assert pure_eval(sequences) == comp_eval(sequences)


def test_simulate_backend_argument_validated(diamond, one_device):
    partition = make_partition("batch_split", diamond, one_device)
    with pytest.raises(ValueError, match="unknown engine backend"):
        simulate.run(diamond, one_device, partition, "fifo",
                     backend="turbo")

"""Synthetic layered instances: sizes, ranges, determinism, feasibility."""

import pytest

from dagsched.constraints import build_groups
from dagsched.generate import GeneratorParams, generate_instance
from dagsched.graph import validate_dag
from dagsched.partition import make_partition


def grouped_count(graph):
    groups = build_groups(graph)
    return sum(len(m) for m in groups.members.values() if len(m) > 1)


class TestScale:
    @pytest.mark.parametrize("vertices,degree,edges", [
        (347, 1.53, 531),
        (3069, 1.8, 5533),
        (5271, 1.75, 9214),
    ])
    def test_published_network_shapes(self, vertices, degree, edges):
        params = GeneratorParams(vertices=vertices, avg_degree=degree, seed=1)
        graph, _ = generate_instance(params)
        assert len(graph.vertices) == vertices
        assert abs(len(graph.edges) - edges) <= 0.05 * edges

    def test_single_vertex(self):
        params = GeneratorParams(vertices=1, avg_degree=0.0, devices=2,
                                 colocation_fraction=0.0, seed=0)
        graph, cluster = generate_instance(params)
        assert len(graph.vertices) == 1
        assert graph.edges == []
        assert len(cluster.devices) == 2


class TestDeterminism:
    def test_same_seed_identical(self):
        params = GeneratorParams(vertices=120, devices=6, seed=77)
        g1, c1 = generate_instance(params)
        g2, c2 = generate_instance(params)
        assert g1 == g2
        assert c1.devices == c2.devices
        assert c1.bandwidth == c2.bandwidth

    def test_different_seeds_differ(self):
        a, _ = generate_instance(GeneratorParams(vertices=120, seed=1))
        b, _ = generate_instance(GeneratorParams(vertices=120, seed=2))
        assert a != b


class TestRanges:
    def test_drawn_values_in_bounds(self):
        params = GeneratorParams(vertices=200, devices=12, seed=3,
                                 cost_range=(5.0, 9.0), volume_range=(2.0, 4.0),
                                 speed_range=(10.0, 20.0),
                                 bandwidth_range=(30.0, 40.0),
                                 memory_range=(1e4, 2e4))
        graph, cluster = generate_instance(params)
        assert all(5.0 <= v.cost <= 9.0 for v in graph.vertices)
        assert all(2.0 <= e.volume <= 4.0 for e in graph.edges)
        for d in cluster.devices:
            assert 10.0 <= d.speed <= 20.0
            assert 1e4 <= d.memory <= 2e4
        k = len(cluster.devices)
        for i in range(k):
            for j in range(k):
                if i == j:
                    assert cluster.bandwidth[i][j] == 0.0
                else:
                    assert 30.0 <= cluster.bandwidth[i][j] <= 40.0


class TestValidityAndFeasibility:
    def test_corpus_always_valid(self):
        for seed in range(15):
            params = GeneratorParams(vertices=80, devices=5, seed=seed)
            graph, cluster = generate_instance(params)
            assert validate_dag(graph) == []
            partition = make_partition("batch_split", graph, cluster)
            assert len(partition.assignment) == 80

    def test_collocation_fraction_met(self):
        params = GeneratorParams(vertices=347, colocation_fraction=0.3,
                                 devices=10, seed=4)
        graph, _ = generate_instance(params)
        assert abs(grouped_count(graph) - 104) <= 1

    def test_zero_fraction_keeps_singletons(self):
        params = GeneratorParams(vertices=60, colocation_fraction=0.0, seed=6)
        graph, _ = generate_instance(params)
        assert grouped_count(graph) == 0

    def test_groups_are_edge_adjacent(self):
        params = GeneratorParams(vertices=150, colocation_fraction=0.25,
                                 seed=8)
        graph, _ = generate_instance(params)
        adjacent = {frozenset((e.src, e.dst)) for e in graph.edges}
        groups = build_groups(graph)
        for members in groups.members.values():
            if len(members) == 2:
                assert frozenset(members) in adjacent
            assert len(members) <= 2


class TestErrors:
    def test_density_too_high(self):
        with pytest.raises(ValueError, match="density"):
            generate_instance(GeneratorParams(vertices=5, avg_degree=10.0,
                                              seed=0))

    def test_density_below_backbone(self):
        with pytest.raises(ValueError, match="density"):
            generate_instance(GeneratorParams(vertices=50, avg_degree=0.1,
                                              seed=0))

    @pytest.mark.parametrize("params", [
        GeneratorParams(vertices=10, cost_range=(5.0, 1.0)),
        GeneratorParams(vertices=0),
        GeneratorParams(vertices=10, speed_range=(0.0, 5.0)),
        GeneratorParams(vertices=10, colocation_fraction=1.5),
        GeneratorParams(vertices=10, devices=0),
    ])
    def test_bad_params_rejected(self, params):
        with pytest.raises(ValueError):
            generate_instance(params)

"""Shared fixtures: the diamond instance, tiny clusters, random corpora."""

import random

import pytest

from dagsched.cluster import DeviceCluster, DeviceRecord
from dagsched.graph import DataflowGraph, EdgeRecord, VertexRecord


def build_diamond(volumes=(10.0, 10.0, 10.0, 10.0), groups=(None,) * 4,
                  constraints=(None,) * 4) -> DataflowGraph:
    """v1 -> {v2, v3} -> v4 with costs (2, 3, 4, 1)."""
    costs = (2.0, 3.0, 4.0, 1.0)
    vertices = [
        VertexRecord(id=f"v{i + 1}", cost=costs[i], colocation_group=groups[i],
                     device_constraint=constraints[i])
        for i in range(4)
    ]
    edges = [
        EdgeRecord("v1", "v2", volumes[0]),
        EdgeRecord("v1", "v3", volumes[1]),
        EdgeRecord("v2", "v4", volumes[2]),
        EdgeRecord("v3", "v4", volumes[3]),
    ]
    return DataflowGraph(vertices, edges)


def build_cluster(speeds, memories=None, bandwidth=5.0) -> DeviceCluster:
    """Devices d1..dk with uniform pairwise bandwidth."""
    k = len(speeds)
    if memories is None:
        memories = [1e6] * k
    devices = [DeviceRecord(f"d{i + 1}", float(speeds[i]), float(memories[i]))
               for i in range(k)]
    matrix = [[0.0 if i == j else float(bandwidth) for j in range(k)]
              for i in range(k)]
    return DeviceCluster(devices, matrix)


@pytest.fixture
def diamond():
    return build_diamond()


@pytest.fixture
def one_device():
    return build_cluster([1.0])


@pytest.fixture
def two_devices():
    return build_cluster([1.0, 1.0])


@pytest.fixture
def fast_slow():
    return build_cluster([2.0, 1.0])


def random_dag(rng: random.Random, max_vertices=8, edge_prob=0.4,
               int_costs=True) -> DataflowGraph:
    """Random DAG over v01..vNN; edges only from lower to higher index."""
    n = rng.randint(1, max_vertices)
    vertices = [
        VertexRecord(f"v{i:02d}",
                     float(rng.randint(1, 10)) if int_costs
                     else rng.uniform(0.5, 10.0))
        for i in range(1, n + 1)
    ]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                edges.append(EdgeRecord(vertices[i].id, vertices[j].id,
                                        float(rng.randint(0, 20))))
    return DataflowGraph(vertices, edges)


def random_cluster(rng: random.Random, max_devices=3, tight_memory=False):
    k = rng.randint(1, max_devices)
    devices = [
        DeviceRecord(f"d{i}", float(rng.randint(1, 4)),
                     float(rng.randint(40, 120)) if tight_memory else 1e6)
        for i in range(1, k + 1)
    ]
    matrix = [[0.0 if i == j else float(rng.randint(1, 10)) for j in range(k)]
              for i in range(k)]
    return DeviceCluster(devices, matrix)


def random_constrained_instance(seed: int, max_vertices=7, max_devices=3):
    """Small instance with a mix of collocation and device constraints."""
    rng = random.Random(seed)
    cluster = random_cluster(rng, max_devices=max_devices)
    base = random_dag(rng, max_vertices=max_vertices)
    vertices = list(base.vertices)
    if len(vertices) >= 2 and rng.random() < 0.6:
        a, b = rng.sample(range(len(vertices)), 2)
        for idx in (a, b):
            v = vertices[idx]
            vertices[idx] = VertexRecord(v.id, v.cost, colocation_group="pair",
                                         device_constraint=v.device_constraint)
    if rng.random() < 0.5:
        idx = rng.randrange(len(vertices))
        v = vertices[idx]
        pinned = rng.choice(cluster.ids())
        vertices[idx] = VertexRecord(v.id, v.cost,
                                     colocation_group=v.colocation_group,
                                     device_constraint=pinned)
    graph = DataflowGraph(vertices, base.edges)
    return graph, cluster


def random_partition(rng: random.Random, graph, cluster):
    """Uniform group-respecting assignment, ignoring memory."""
    from dagsched.constraints import build_groups
    from dagsched.partition import Partition

    groups = build_groups(graph)
    assignment = {}
    for gid in groups.ids():
        pinned = groups.device_constraint.get(gid)
        device = pinned if pinned is not None else rng.choice(cluster.ids())
        for vid in groups.members[gid]:
            assignment[vid] = device
    return Partition(assignment=assignment, strategy="random")

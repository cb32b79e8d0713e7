"""Random layered instance generator.

Graphs mimic the shape of machine-learning dataflow programs: vertices sit in
narrow layers and edges only run from earlier to later layers, so instances
are deep with long expensive paths.  Every vertex outside the first layer gets
a backbone edge from the previous layer; additional forward edges are sampled
until the average out-degree target is met.  Clusters draw device speeds,
memories and link bandwidths uniformly from the configured ranges.

Generation is fully reproducible: equal parameters (including the seed) yield
the identical instance.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .cluster import DeviceCluster, DeviceRecord
from .constraints import build_groups
from .errors import InfeasibleInstanceError
from .graph import DataflowGraph, EdgeRecord, VertexRecord

_MAX_LAYER_WIDTH = 4


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs of the instance generator; defaults give mid-size clusters."""

    vertices: int = 100
    avg_degree: float = 1.65
    cost_range: tuple = (1.0, 100.0)
    volume_range: tuple = (1.0, 100.0)
    colocation_fraction: float = 0.2
    devices: int = 50
    speed_range: tuple = (10.0, 100.0)
    bandwidth_range: tuple = (10.0, 60.0)
    memory_range: tuple = (10_000.0, 50_000.0)
    seed: int = 0


def generate_instance(params: GeneratorParams):
    """Build a (graph, cluster) pair from the parameters.

    Raises:
        ValueError: on malformed parameters or an edge-density target the
            layer structure cannot meet.
        InfeasibleInstanceError: when the drawn memory capacities cannot hold
            the generated tensors even when spread over all devices.
    """
    _check_params(params)
    rng = random.Random(params.seed)
    n = params.vertices

    widths = []
    remaining = n
    while remaining > 0:
        width = min(rng.randint(1, _MAX_LAYER_WIDTH), remaining)
        widths.append(width)
        remaining -= width
    layer_of = []
    for layer, width in enumerate(widths):
        layer_of.extend([layer] * width)
    starts = [0]
    for width in widths:
        starts.append(starts[-1] + width)

    digits = len(str(n - 1)) if n > 1 else 1
    names = [f"v{i:0{digits}d}" for i in range(n)]
    costs = [rng.uniform(*params.cost_range) for _ in range(n)]

    pairs = []
    seen = set()
    for layer in range(1, len(widths)):
        for v in range(starts[layer], starts[layer + 1]):
            u = starts[layer - 1] + rng.randrange(widths[layer - 1])
            pairs.append((u, v))
            seen.add((u, v))

    target = int(round(n * params.avg_degree)) if n > 1 else 0
    if n > 1:
        possible = 0
        after = n
        for layer, width in enumerate(widths):
            after -= width
            possible += width * after
        if target > possible:
            raise ValueError(
                f"edge density infeasible for the layer structure: "
                f"{target} edges requested, {possible} possible")
        if target < len(pairs):
            raise ValueError(
                f"edge density infeasible for the layer structure: "
                f"{target} edges requested but {len(pairs)} backbone edges "
                f"are required")
        missing = target - len(pairs)
        head_pool = starts[len(widths) - 1]
        attempts = 0
        max_attempts = 50 * missing + 100
        while missing > 0 and attempts < max_attempts:
            attempts += 1
            u = rng.randrange(head_pool)
            tail = n - starts[layer_of[u] + 1]
            v = starts[layer_of[u] + 1] + rng.randrange(tail)
            if (u, v) in seen:
                continue
            seen.add((u, v))
            pairs.append((u, v))
            missing -= 1

    volumes = [rng.uniform(*params.volume_range) for _ in pairs]

    group_label = [None] * n
    wanted = int(round(params.colocation_fraction * n))
    if wanted >= 2 and pairs:
        shuffled = list(range(len(pairs)))
        rng.shuffle(shuffled)
        grouped = 0
        counter = 0
        for j in shuffled:
            if grouped >= wanted:
                break
            u, v = pairs[j]
            if group_label[u] is None and group_label[v] is None:
                label = f"g{counter:04d}"
                group_label[u] = label
                group_label[v] = label
                counter += 1
                grouped += 2

    vertices = [VertexRecord(id=names[i], cost=costs[i],
                             colocation_group=group_label[i])
                for i in range(n)]
    edges = [EdgeRecord(src=names[u], dst=names[v], volume=volumes[j])
             for j, (u, v) in enumerate(pairs)]
    graph = DataflowGraph(vertices, edges)

    k = params.devices
    device_digits = len(str(k - 1)) if k > 1 else 1
    devices = [DeviceRecord(id=f"d{i:0{device_digits}d}",
                            speed=rng.uniform(*params.speed_range),
                            memory=rng.uniform(*params.memory_range))
               for i in range(k)]
    bandwidth = [[0.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            if i != j:
                bandwidth[i][j] = rng.uniform(*params.bandwidth_range)
    cluster = DeviceCluster(devices, bandwidth)

    _check_capacity(graph, cluster)
    return graph, cluster


def _check_params(params: GeneratorParams):
    if params.vertices < 1:
        raise ValueError("vertices must be at least 1")
    if params.devices < 1:
        raise ValueError("devices must be at least 1")
    if params.avg_degree < 0:
        raise ValueError("avg_degree must be non-negative")
    if not 0 <= params.colocation_fraction <= 1:
        raise ValueError("colocation_fraction must be within [0, 1]")
    for name in ("cost_range", "volume_range", "speed_range",
                 "bandwidth_range", "memory_range"):
        low, high = getattr(params, name)
        if low > high:
            raise ValueError(f"{name}: lower bound exceeds upper bound")
        if low < 0:
            raise ValueError(f"{name}: bounds must be non-negative")
    for name in ("speed_range", "bandwidth_range", "memory_range"):
        if getattr(params, name)[0] <= 0:
            raise ValueError(f"{name}: bounds must be positive")


def _check_capacity(graph: DataflowGraph, cluster: DeviceCluster):
    """First-fit-decreasing check that some feasible partition exists."""
    groups = build_groups(graph)
    footprints = sorted((groups.footprint[gid] for gid in groups.ids()),
                        reverse=True)
    spare = sorted((d.memory for d in cluster.devices), reverse=True)
    for fp in footprints:
        placed = False
        for i in range(len(spare)):
            if spare[i] >= fp:
                spare[i] -= fp
                placed = True
                break
        if not placed:
            raise InfeasibleInstanceError(
                "generated instance cannot fit on the cluster; increase the "
                "memory range or device count")

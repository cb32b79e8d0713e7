"""Exhaustive optimal makespan solver for small instances.

Enumerates every constraint-respecting assignment of collocation groups to
devices and, for each assignment, every per-device execution order compatible
with the precedence relation, then evaluates each candidate under the
simulator's timing model (eager transfers, one vertex at a time per device).
Intended for cross-checking the heuristics; refuses instances beyond the size
limits because the search space grows factorially.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Optional

from . import engine
from .cluster import DeviceCluster
from .constraints import CollocationGroups, build_groups
from .errors import InfeasibleInstanceError, InstanceTooLargeError
from .graph import DataflowGraph
from .partition import Partition

INFINITY = float("inf")


@dataclass(frozen=True)
class OptimalSolution:
    """Best makespan found by exhaustive search, with the realizing plan."""

    makespan: float
    partition: Partition
    device_order: dict
    assignments_tried: int
    schedules_tried: int


def optimal(graph: DataflowGraph, cluster: DeviceCluster,
            groups: Optional[CollocationGroups] = None, limit: int = 8,
            device_limit: int = 3) -> OptimalSolution:
    """Minimum achievable makespan over all assignments and orders.

    Ties between assignments are resolved in favour of the one that
    enumerates first, which is the lexicographically smallest by group id and
    device id.

    Raises:
        InstanceTooLargeError: when the instance exceeds the size limits.
        InfeasibleInstanceError: when no assignment satisfies the constraints.
        ValueError: for an empty graph.
    """
    n = len(graph.vertices)
    k = len(cluster.devices)
    if n == 0:
        raise ValueError("optimal makespan of an empty graph is undefined")
    if n > limit or k > device_limit:
        raise InstanceTooLargeError(
            f"instance too large for exhaustive search: {n} vertices on {k} "
            f"devices (limits: {limit} vertices, {device_limit} devices)")
    graph.topological_order()
    if groups is None:
        groups = build_groups(graph)

    vertex_ids = sorted(graph.ids())
    index = {vid: i for i, vid in enumerate(vertex_ids)}
    cost = [graph.vertex(vid).cost for vid in vertex_ids]
    device_ids = sorted(cluster.ids())
    speed = [cluster.device(did).speed for did in device_ids]
    memory = [cluster.device(did).memory for did in device_ids]
    bandwidth = [[cluster.bandwidth_between(src, dst) for dst in device_ids]
                 for src in device_ids]

    in_ptr = [0]
    in_src = []
    in_vol = []
    for vid in vertex_ids:
        for e in graph.in_edges(vid):
            in_src.append(index[e.src])
            in_vol.append(e.volume)
        in_ptr.append(len(in_src))

    # ancestors[v] is the bitmask of all strict predecessors of v, used to
    # restrict per-device orders to the precedence relation.
    ancestors = [0] * n
    for vid in graph.topological_order():
        v = index[vid]
        mask = 0
        for pid in graph.predecessors(vid):
            p = index[pid]
            mask |= ancestors[p] | (1 << p)
        ancestors[v] = mask

    gids = groups.ids()
    member_idx = {gid: [index[vid] for vid in groups.members[gid]]
                  for gid in gids}
    footprint = groups.footprint
    constraint = groups.device_constraint

    extensions_cache = {}

    def linear_extensions(members):
        key = frozenset(members)
        cached = extensions_cache.get(key)
        if cached is not None:
            return cached
        inside = 0
        for v in members:
            inside |= 1 << v
        result = []
        prefix = []

        def extend(remaining):
            if not remaining:
                result.append(tuple(prefix))
                return
            probe = remaining
            while probe:
                bit = probe & -probe
                probe ^= bit
                v = bit.bit_length() - 1
                if ancestors[v] & remaining:
                    continue
                prefix.append(v)
                extend(remaining ^ bit)
                prefix.pop()

        extend(inside)
        extensions_cache[key] = result
        return result

    make_evaluator = engine.forced_order_factory()

    best_makespan = INFINITY
    best_devices = None
    best_sequences = None
    assignments_tried = 0
    schedules_tried = 0
    chosen = {}
    used = [0.0] * k

    def solve(position):
        nonlocal best_makespan, best_devices, best_sequences
        nonlocal assignments_tried, schedules_tried
        if position == len(gids):
            assignments_tried += 1
            device_of = [0] * n
            for gid, d in chosen.items():
                for v in member_idx[gid]:
                    device_of[v] = d
            exec_t = [cost[v] / speed[device_of[v]] for v in range(n)]
            in_tt = []
            for v in range(n):
                for j in range(in_ptr[v], in_ptr[v + 1]):
                    u = in_src[j]
                    if device_of[u] == device_of[v] or in_vol[j] == 0:
                        in_tt.append(0.0)
                    else:
                        rate = bandwidth[device_of[u]][device_of[v]]
                        in_tt.append(INFINITY if rate <= 0
                                     else in_vol[j] / rate)
            members_per_device = [[] for _ in range(k)]
            for v in range(n):
                members_per_device[device_of[v]].append(v)
            options = [linear_extensions(members_per_device[d])
                       for d in range(k)]
            evaluate = make_evaluator(exec_t, in_ptr, in_src, in_tt, n, k)
            for combo in product(*options):
                schedules_tried += 1
                makespan = evaluate(combo)
                if makespan < best_makespan:
                    best_makespan = makespan
                    best_devices = list(device_of)
                    best_sequences = combo
            return
        gid = gids[position]
        pinned = constraint[gid]
        for d in range(k):
            if pinned is not None and device_ids[d] != pinned:
                continue
            if memory[d] - used[d] < footprint[gid]:
                continue
            chosen[gid] = d
            used[d] += footprint[gid]
            solve(position + 1)
            used[d] -= footprint[gid]
            del chosen[gid]

    solve(0)
    if best_devices is None:
        raise InfeasibleInstanceError(
            "infeasible instance: no assignment satisfies the constraints")
    assignment = {vertex_ids[v]: device_ids[best_devices[v]]
                  for v in range(n)}
    device_order = {device_ids[d]: [vertex_ids[v] for v in best_sequences[d]]
                    for d in range(k)}
    return OptimalSolution(
        makespan=best_makespan,
        partition=Partition(assignment=assignment, strategy="oracle"),
        device_order=device_order,
        assignments_tried=assignments_tried,
        schedules_tried=schedules_tried)


def decision(graph: DataflowGraph, cluster: DeviceCluster, t_max: float,
             groups: Optional[CollocationGroups] = None, limit: int = 8,
             device_limit: int = 3) -> bool:
    """Whether some valid execution finishes strictly before ``t_max``."""
    solution = optimal(graph, cluster, groups=groups, limit=limit,
                       device_limit=device_limit)
    return solution.makespan < t_max


def forced_order_makespan_py(sequences, exec_t, in_ptr, in_src, in_tt, n, k):
    """Makespan when every device must follow its given vertex order.

    Devices start their next vertex as soon as it is ready (all inputs
    finished and transferred) and the device is free.  Returns infinity when
    the orders deadlock across devices.  Pure Python twin of the compiled
    kernel; :func:`dagsched.engine.forced_order_factory` picks between them.
    """
    position = [0] * k
    available = [0.0] * k
    finish = [None] * n
    placed = 0
    total = 0
    for d in range(k):
        total += len(sequences[d])
    while placed < total:
        progress = False
        for d in range(k):
            while position[d] < len(sequences[d]):
                v = sequences[d][position[d]]
                ready = 0.0
                startable = True
                for j in range(in_ptr[v], in_ptr[v + 1]):
                    done = finish[in_src[j]]
                    if done is None:
                        startable = False
                        break
                    arrival = done + in_tt[j]
                    if arrival > ready:
                        ready = arrival
                if not startable:
                    break
                start = available[d] if available[d] > ready else ready
                finish[v] = start + exec_t[v]
                available[d] = finish[v]
                position[d] += 1
                placed += 1
                progress = True
        if not progress:
            return INFINITY
    makespan = 0.0
    for value in finish:
        if value is not None and value > makespan:
            makespan = value
    return makespan

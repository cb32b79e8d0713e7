"""Partitioning strategies: map collocation groups to devices.

All strategies place whole collocation groups (never individual members),
honour device constraints, and keep the static memory bound: the sum of the
in-edge volumes of the vertices on a device never exceeds its capacity.

Canonical strategy names: hash, batch_split, critical_path, mite, dfs, heft.
"""

from __future__ import annotations

import bisect
import random
from dataclasses import dataclass
from typing import Optional

from .cluster import DeviceCluster, transfer_time
from .constraints import (AssignmentState, CollocationGroups, build_groups,
                          feasible_devices)
from .errors import InfeasibleInstanceError
from .graph import DataflowGraph, critical_path, total_rank

PARTITIONERS = ("hash", "batch_split", "critical_path", "mite", "dfs", "heft")

#: Additive smoothing applied to every score factor so that a single zero
#: factor cannot erase the others.
EPSILON = 1e-3


@dataclass(frozen=True)
class Partition:
    """A total assignment of vertices to devices."""

    assignment: dict
    strategy: str
    seed: Optional[int] = None


@dataclass(frozen=True)
class MiteScore:
    """The four scoring factors of the mite strategy and their product."""

    memory: float
    importance: float
    traffic: float
    execution: float
    product: float


def make_partition(strategy: str, graph: DataflowGraph, cluster: DeviceCluster,
                   groups: Optional[CollocationGroups] = None,
                   seed: int = 0) -> Partition:
    """Run one strategy by canonical name and verify its output."""
    if strategy not in PARTITIONERS:
        raise ValueError(f"unknown partitioning strategy '{strategy}'")
    if groups is None:
        groups = build_groups(graph)
    if strategy == "hash":
        part = hash_partition(graph, cluster, groups, seed)
    elif strategy == "batch_split":
        part = batch_split_partition(graph, cluster, groups)
    elif strategy == "critical_path":
        part = critical_path_partition(graph, cluster, groups)
    elif strategy == "mite":
        part = mite_partition(graph, cluster, groups)
    elif strategy == "dfs":
        part = dfs_partition(graph, cluster, groups)
    else:
        part = heft_partition(graph, cluster, groups)
    problems = partition_violations(graph, cluster, groups, part)
    if problems:
        raise RuntimeError(f"strategy {strategy} produced an invalid "
                           f"partition: {problems[0]}")
    return part


def partition_violations(graph: DataflowGraph, cluster: DeviceCluster,
                         groups: CollocationGroups, partition: Partition) -> list:
    """Check totality, collocation, device constraints and the static bound."""
    violations = []
    assignment = partition.assignment
    for vid in graph.ids():
        if vid not in assignment:
            violations.append(f"vertex {vid} is unassigned")
        elif not cluster.has_device(assignment[vid]):
            violations.append(f"vertex {vid} assigned to unknown device "
                              f"{assignment[vid]}")
    for gid in groups.ids():
        devices = sorted({assignment[vid] for vid in groups.members[gid]
                          if vid in assignment})
        if len(devices) > 1:
            violations.append(f"group {gid} split across {','.join(devices)}")
    for v in graph.vertices:
        if v.device_constraint is not None:
            actual = assignment.get(v.id)
            if actual is not None and actual != v.device_constraint:
                violations.append(f"vertex {v.id} pinned to "
                                  f"{v.device_constraint} but assigned {actual}")
    used = {did: 0.0 for did in cluster.ids()}
    for e in graph.edges:
        dev = assignment.get(e.dst)
        if dev in used:
            used[dev] += e.volume
    for did in sorted(used):
        if cluster.has_device(did) and used[did] > cluster.device(did).memory:
            violations.append(
                f"device {did} exceeds its static memory bound: "
                f"{used[did]!r} > {cluster.device(did).memory!r}")
    return violations


def _require(feasible, gid):
    if not feasible:
        raise InfeasibleInstanceError(
            f"infeasible instance: no feasible device for group {gid}")
    return feasible


def _groups_by_rank(groups: CollocationGroups, total: dict) -> list:
    """Group ids ordered by descending maximum member total rank."""
    rank = {gid: max(total[vid] for vid in groups.members[gid])
            for gid in groups.members}
    return sorted(groups.members, key=lambda gid: (-rank[gid], gid)), rank


def _devices_by_speed(cluster: DeviceCluster) -> list:
    return sorted(cluster.devices, key=lambda d: (-d.speed, d.id))


def hash_partition(graph: DataflowGraph, cluster: DeviceCluster,
                   groups: Optional[CollocationGroups] = None,
                   seed: int = 0) -> Partition:
    """Random baseline: draw a feasible device per group, weighted by memory.

    Groups are visited in id order; each draw picks among the currently
    feasible devices with probability proportional to their total memory
    capacity.
    """
    if groups is None:
        groups = build_groups(graph)
    rng = random.Random(seed)
    state = AssignmentState.empty(cluster)
    for gid in groups.ids():
        feasible = _require(feasible_devices(gid, groups, cluster, state), gid)
        weights = [cluster.device(did).memory for did in feasible]
        pick = rng.random() * sum(weights)
        chosen = feasible[-1]
        cumulative = 0.0
        for did, weight in zip(feasible, weights):
            cumulative += weight
            if pick < cumulative:
                chosen = did
                break
        state.assign_group(groups, gid, chosen)
    return Partition(assignment=dict(state.assignment), strategy="hash",
                     seed=seed)


def batch_split_partition(graph: DataflowGraph, cluster: DeviceCluster,
                          groups: Optional[CollocationGroups] = None) -> Partition:
    """Greedy: highest-ranked groups go to the fastest device that still fits.

    Groups are taken in descending total-rank order and placed one at a time
    on the fastest feasible device with remaining static capacity, so work
    spills over to slower devices only once the fast ones are full.
    """
    if groups is None:
        groups = build_groups(graph)
    total = total_rank(graph).total if graph.vertices else {}
    order, _ = _groups_by_rank(groups, total)
    by_speed = _devices_by_speed(cluster)
    state = AssignmentState.empty(cluster)
    for gid in order:
        feasible = set(_require(feasible_devices(gid, groups, cluster, state),
                                gid))
        chosen = next(d.id for d in by_speed if d.id in feasible)
        state.assign_group(groups, gid, chosen)
    return Partition(assignment=dict(state.assignment), strategy="batch_split")


def critical_path_partition(graph: DataflowGraph, cluster: DeviceCluster,
                            groups: Optional[CollocationGroups] = None) -> Partition:
    """Keep the most expensive source-to-sink path on the fastest device.

    The critical path (and every collocation group it touches) goes to the
    fastest device that can hold it; if no single device has the capacity,
    the path is split into contiguous segments filled onto devices in
    descending speed order.  Groups containing a device-constrained member go
    straight to their required device.  All remaining groups are placed, in
    descending rank order, on the feasible device that minimizes current load
    plus the group's own execution time.
    """
    if groups is None:
        groups = build_groups(graph)
    state = AssignmentState.empty(cluster)
    if not graph.vertices:
        return Partition(assignment={}, strategy="critical_path")
    total = total_rank(graph).total
    order, rank = _groups_by_rank(groups, total)
    by_speed = _devices_by_speed(cluster)

    path = critical_path(graph)
    path_gids = []
    for vid in path:
        gid = groups.member_of[vid]
        if gid not in path_gids:
            path_gids.append(gid)

    unconstrained = []
    for gid in path_gids:
        constraint = groups.device_constraint[gid]
        if constraint is None:
            unconstrained.append(gid)
        else:
            feasible = _require(feasible_devices(gid, groups, cluster, state),
                                gid)
            state.assign_group(groups, gid, feasible[0])

    if unconstrained:
        needed = sum(groups.footprint[gid] for gid in unconstrained)
        single = next((d.id for d in by_speed
                       if d.memory - state.used[d.id] >= needed), None)
        if single is not None:
            for gid in unconstrained:
                state.assign_group(groups, gid, single)
        else:
            position = 0
            for gid in unconstrained:
                while (position < len(by_speed)
                       and (by_speed[position].memory
                            - state.used[by_speed[position].id]
                            < groups.footprint[gid])):
                    position += 1
                if position == len(by_speed):
                    raise InfeasibleInstanceError(
                        "infeasible instance: the critical path does not fit "
                        "on the cluster")
                state.assign_group(groups, gid, by_speed[position].id)

    load = {did: 0.0 for did in cluster.ids()}
    for gid, did in state.group_device.items():
        load[did] += groups.group_cost[gid] / cluster.device(did).speed
    for gid in order:
        if gid in state.group_device:
            continue
        feasible = _require(feasible_devices(gid, groups, cluster, state), gid)
        chosen = min(feasible, key=lambda did: (
            load[did] + groups.group_cost[gid] / cluster.device(did).speed,
            did))
        state.assign_group(groups, gid, chosen)
        load[chosen] += groups.group_cost[gid] / cluster.device(chosen).speed
    return Partition(assignment=dict(state.assignment), strategy="critical_path")


def mite_score(gid: str, device_id: str, graph: DataflowGraph,
               cluster: DeviceCluster, groups: CollocationGroups,
               state: AssignmentState, feasible, group_rank: float,
               max_rank: float, max_speed: float) -> MiteScore:
    """Score one candidate device for a group (lower is better).

    memory: fraction of the device's capacity used after placing the group.
    importance: low when a high-ranked group meets a fast device.
    traffic: transfer time of the group's inputs from already-placed
    predecessors onto this device.
    execution: the group's execution time, normalized by the slowest feasible
    candidate.
    """
    device = cluster.device(device_id)
    memory = (state.used[device_id] + groups.footprint[gid]) / device.memory
    ratio = (group_rank / max_rank) if max_rank > 0 else 0.0
    importance = 1.0 - ratio * (device.speed / max_speed)
    traffic = _traffic(gid, device_id, graph, cluster, groups, state)
    execution = _exec_score(gid, device_id, cluster, groups, feasible)
    product = ((EPSILON + memory) * (EPSILON + importance)
               * (EPSILON + traffic) * (EPSILON + execution))
    return MiteScore(memory=memory, importance=importance, traffic=traffic,
                     execution=execution, product=product)


def _traffic(gid, device_id, graph, cluster, groups, state):
    """Transfer time of the group's in-edges from already-assigned vertices."""
    cost = 0.0
    for vid in groups.members[gid]:
        for e in graph.in_edges(vid):
            src_device = state.assignment.get(e.src)
            if src_device is None or src_device == device_id:
                continue
            cost += e.volume / cluster.bandwidth_between(src_device, device_id)
    return cost


def _exec_score(gid, device_id, cluster, groups, feasible):
    """Group execution time on the device, normalized over the candidates."""
    worst = max(groups.group_cost[gid] / cluster.device(did).speed
                for did in feasible)
    if worst == 0:
        return 0.0
    return (groups.group_cost[gid] / cluster.device(device_id).speed) / worst


def mite_partition(graph: DataflowGraph, cluster: DeviceCluster,
                   groups: Optional[CollocationGroups] = None) -> Partition:
    """Balance memory, importance, traffic and execution time per placement.

    Groups are placed in descending total-rank order; each goes to the
    feasible device with the smallest smoothed product of the four factors.
    """
    if groups is None:
        groups = build_groups(graph)
    total = total_rank(graph).total if graph.vertices else {}
    order, rank = _groups_by_rank(groups, total)
    max_rank = max(total.values()) if total else 0.0
    max_speed = max(d.speed for d in cluster.devices)
    state = AssignmentState.empty(cluster)
    for gid in order:
        feasible = _require(feasible_devices(gid, groups, cluster, state), gid)
        chosen = min(feasible, key=lambda did: (
            mite_score(gid, did, graph, cluster, groups, state, feasible,
                       rank[gid], max_rank, max_speed).product,
            did))
        state.assign_group(groups, gid, chosen)
    return Partition(assignment=dict(state.assignment), strategy="mite")


def dfs_partition(graph: DataflowGraph, cluster: DeviceCluster,
                  groups: Optional[CollocationGroups] = None) -> Partition:
    """Walk the graph depth first and keep neighbours together.

    The traversal starts from the highest-ranked source and explores
    successors in descending total-rank order, so it follows expensive paths
    first.  When it reaches a vertex of an unplaced group, the group goes to
    the feasible device minimizing the smoothed product of traffic and
    execution time, which favours the device of the already-placed neighbours.
    """
    if groups is None:
        groups = build_groups(graph)
    total = total_rank(graph).total if graph.vertices else {}
    state = AssignmentState.empty(cluster)
    visited = set()
    sources = sorted(graph.sources(), key=lambda vid: (-total[vid], vid))
    for source in sources:
        if source in visited:
            continue
        stack = [source]
        while stack:
            vid = stack.pop()
            if vid in visited:
                continue
            visited.add(vid)
            gid = groups.member_of[vid]
            if gid not in state.group_device:
                feasible = _require(
                    feasible_devices(gid, groups, cluster, state), gid)
                chosen = min(feasible, key=lambda did: (
                    (EPSILON + _traffic(gid, did, graph, cluster, groups, state))
                    * (EPSILON + _exec_score(gid, did, cluster, groups,
                                             feasible)),
                    did))
                state.assign_group(groups, gid, chosen)
            followers = sorted(graph.successors(vid),
                               key=lambda s: (-total[s], s))
            for succ in reversed(followers):
                if succ not in visited:
                    stack.append(succ)
    return Partition(assignment=dict(state.assignment), strategy="dfs")


def heft_partition(graph: DataflowGraph, cluster: DeviceCluster,
                   groups: Optional[CollocationGroups] = None) -> Partition:
    """List scheduling with earliest finish time; only the mapping is kept.

    Vertices are prioritized by upward rank computed with device-averaged
    execution and transfer times, then greedily placed on the feasible device
    giving the earliest finish time, allowing insertion into idle gaps.  The
    provisional schedule built along the way is discarded: the simulator's
    per-device policies decide the actual execution order.
    """
    if groups is None:
        groups = build_groups(graph)
    device_ids = sorted(cluster.ids())
    k = len(device_ids)
    mean_inverse_speed = sum(1.0 / cluster.device(did).speed
                             for did in device_ids) / k
    pair_factor = 0.0
    if k > 1:
        for src in device_ids:
            for dst in device_ids:
                if src != dst:
                    rate = cluster.bandwidth_between(src, dst)
                    if rate > 0:
                        pair_factor += 1.0 / rate
        pair_factor /= k * (k - 1)

    rank = {}
    for vid in reversed(graph.topological_order()):
        best = 0.0
        for e in graph.out_edges(vid):
            tail = e.volume * pair_factor + rank[e.dst]
            if tail > best:
                best = tail
        rank[vid] = graph.vertex(vid).cost * mean_inverse_speed + best

    state = AssignmentState.empty(cluster)
    timelines = {did: [] for did in device_ids}
    finish = {}
    for vid in sorted(rank, key=lambda v: (-rank[v], v)):
        gid = groups.member_of[vid]
        pinned = state.group_device.get(gid)
        if pinned is not None:
            candidates = [pinned]
        else:
            candidates = _require(
                feasible_devices(gid, groups, cluster, state), gid)
        cost = graph.vertex(vid).cost
        best_did = None
        best_eft = 0.0
        best_start = 0.0
        for did in candidates:
            ready = 0.0
            for e in graph.in_edges(vid):
                done = finish.get(e.src)
                if done is None:
                    continue
                arrival = done + transfer_time(e, state.assignment[e.src],
                                               did, cluster)
                if arrival > ready:
                    ready = arrival
            duration = cost / cluster.device(did).speed
            start = _find_slot(timelines[did], ready, duration)
            eft = start + duration
            if best_did is None or eft < best_eft or (eft == best_eft
                                                      and did < best_did):
                best_did, best_eft, best_start = did, eft, start
        if pinned is None:
            state.assign_group(groups, gid, best_did)
        bisect.insort(timelines[best_did], (best_start, best_eft))
        finish[vid] = best_eft
    return Partition(assignment=dict(state.assignment), strategy="heft")


def _find_slot(intervals, ready, duration):
    """Earliest start not before ``ready`` fitting in the busy list's gaps."""
    start = ready
    for begin, end in intervals:
        if begin >= start + duration:
            break
        if end > start:
            start = end
    return start

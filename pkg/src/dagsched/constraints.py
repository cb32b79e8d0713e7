"""Placement constraints: collocation groups, memory footprints, validation.

Collocation is modelled through group annotations on vertices; every vertex of
a group must run on the same device.  Device constraints pin a vertex (and by
extension its whole group) to one named device.  Memory is handled with a
conservative static bound at partitioning time: the sum of all in-edge volumes
of the vertices placed on a device must not exceed its capacity.  The exact,
time-varying memory check runs on simulation traces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .cluster import DeviceCluster
from .errors import InfeasibleInstanceError
from .graph import DataflowGraph


@dataclass(frozen=True)
class CollocationGroups:
    """Partition of the vertex set into collocation groups.

    Group ids are the smallest member vertex id, which makes orderings by
    group id reproducible regardless of annotation spelling.
    """

    members: dict
    member_of: dict
    device_constraint: dict
    footprint: dict
    group_cost: dict

    def ids(self) -> list:
        return sorted(self.members)


def build_groups(graph: DataflowGraph) -> CollocationGroups:
    """Group vertices by their collocation annotations.

    Vertices sharing a ``colocation_group`` label form one group; unlabeled
    vertices form singleton groups.  Device constraints of the members are
    merged; two different explicit constraints inside one group cannot be
    satisfied.

    Raises:
        InfeasibleInstanceError: on contradictory device constraints.
    """
    by_label = {}
    singles = []
    for v in graph.vertices:
        if v.colocation_group is None:
            singles.append([v.id])
        else:
            by_label.setdefault(v.colocation_group, []).append(v.id)
    members = {}
    for group in list(by_label.values()) + singles:
        group = sorted(group)
        members[group[0]] = group
    member_of = {}
    constraint = {}
    footprint = {}
    cost = {}
    for gid, group in members.items():
        pinned = {}
        total_cost = 0.0
        for vid in group:
            member_of[vid] = gid
            v = graph.vertex(vid)
            total_cost += v.cost
            if v.device_constraint is not None:
                pinned[vid] = v.device_constraint
        devices = sorted(set(pinned.values()))
        if len(devices) > 1:
            detail = ", ".join(f"{vid}->{d}" for vid, d in sorted(pinned.items()))
            raise InfeasibleInstanceError(
                f"contradictory device constraints in group {gid}: {detail}")
        constraint[gid] = devices[0] if devices else None
        footprint[gid] = static_footprint(group, graph)
        cost[gid] = total_cost
    return CollocationGroups(members=members, member_of=member_of,
                             device_constraint=constraint, footprint=footprint,
                             group_cost=cost)


def static_footprint(vertex_ids, graph: DataflowGraph) -> float:
    """Sum of the volumes of all in-edges of the given vertices.

    This upper-bounds the memory the vertices can ever occupy on their device,
    because input tensors are the only data the model keeps resident.
    """
    total = 0.0
    for vid in vertex_ids:
        for e in graph.in_edges(vid):
            total += e.volume
    return total


@dataclass
class AssignmentState:
    """Mutable partition-in-progress shared by the partitioning strategies."""

    assignment: dict = field(default_factory=dict)
    group_device: dict = field(default_factory=dict)
    used: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, cluster: DeviceCluster) -> "AssignmentState":
        return cls(assignment={}, group_device={},
                   used={did: 0.0 for did in cluster.ids()})

    def assign_group(self, groups: CollocationGroups, gid: str, device: str):
        """Place a whole group, charging its static footprint to the device."""
        for vid in groups.members[gid]:
            self.assignment[vid] = device
        self.group_device[gid] = device
        self.used[device] += groups.footprint[gid]


def feasible_devices(gid: str, groups: CollocationGroups, cluster: DeviceCluster,
                     state: AssignmentState) -> list:
    """Devices on which the group may still be placed, in id order.

    A device qualifies when it satisfies the group's merged device constraint
    and has enough spare static memory for the group's footprint.  If any
    member is already assigned the group is pinned and exactly that device is
    returned.
    """
    pinned = state.group_device.get(gid)
    if pinned is not None:
        return [pinned]
    constraint = groups.device_constraint.get(gid)
    result = []
    for d in cluster.devices:
        if constraint is not None and d.id != constraint:
            continue
        if d.memory - state.used[d.id] >= groups.footprint[gid]:
            result.append(d.id)
    result.sort()
    return result


def validate_solution(graph: DataflowGraph, cluster: DeviceCluster, partition,
                      trace) -> list:
    """Check a finished schedule against all placement and ordering rules.

    Returns a list of human-readable violations, empty when the solution is
    valid.  Checked rules: collocated vertices share a device, device
    constraints are honoured, per-device memory stays strictly below capacity
    at every event time, every vertex starts only after all of its input
    transfers have completed, vertices on one device never overlap in time,
    and every vertex is executed exactly once.
    """
    violations = []
    assignment = partition.assignment
    ids = set(graph.ids())

    for vid in sorted(ids):
        if vid not in assignment:
            violations.append(f"coverage: vertex {vid} has no assigned device")
        if vid not in trace.vertex_times:
            violations.append(f"coverage: vertex {vid} missing from trace")
    for vid in sorted(set(trace.vertex_times) - ids):
        violations.append(f"coverage: trace contains unknown vertex {vid}")
    counts = {}
    for order in trace.device_order.values():
        for vid in order:
            counts[vid] = counts.get(vid, 0) + 1
    for vid in sorted(counts):
        if counts[vid] > 1:
            violations.append(f"coverage: vertex {vid} executed {counts[vid]} times")

    groups = build_groups(graph)
    for gid in groups.ids():
        devices = sorted({assignment[vid] for vid in groups.members[gid]
                          if vid in assignment})
        if len(devices) > 1:
            violations.append(
                f"collocation: group {gid} split across {','.join(devices)}")
    for v in graph.vertices:
        if v.device_constraint is None:
            continue
        actual = assignment.get(v.id)
        if actual is not None and actual != v.device_constraint:
            violations.append(
                f"device constraint: {v.id} pinned to {v.device_constraint} "
                f"but assigned {actual}")

    for e in graph.edges:
        rec = trace.transfers.get((e.src, e.dst))
        if rec is None:
            if e.dst in trace.vertex_times:
                violations.append(f"precedence: no transfer recorded for edge "
                                  f"{e.src}->{e.dst}")
            continue
        times = trace.vertex_times.get(e.dst)
        if times is not None and times[0] < rec.end:
            violations.append(
                f"precedence: {e.dst} starts at {times[0]!r} before its input "
                f"{e.src}->{e.dst} arrives at {rec.end!r}")

    by_device = {}
    for vid, (start, finish) in trace.vertex_times.items():
        dev = assignment.get(vid)
        if dev is not None:
            by_device.setdefault(dev, []).append((start, finish, vid))
    for dev in sorted(by_device):
        intervals = sorted(by_device[dev])
        for (s1, f1, v1), (s2, f2, v2) in zip(intervals, intervals[1:]):
            if s2 < f1:
                violations.append(
                    f"exclusivity: {v1} and {v2} overlap on {dev} "
                    f"({s2!r} < {f1!r})")

    peaks = memory_peaks(graph, partition, trace)
    for did in cluster.ids():
        peak, at = peaks.get(did, (0.0, 0.0))
        capacity = cluster.device(did).memory
        if peak >= capacity:
            violations.append(
                f"memory: device {did} holds {peak!r} >= capacity "
                f"{capacity!r} at time {at!r}")
    return violations


def memory_peaks(graph: DataflowGraph, partition, trace) -> dict:
    """Peak resident tensor volume per device and the time it is reached.

    An edge's tensor occupies the destination device from the moment its
    transfer completes until its consumer finishes; the consumer still reads
    the input while it runs.  Peaks are exact maxima over these residency
    windows, which coincide with sampling at every event time.
    """
    events = {}
    for e in graph.edges:
        rec = trace.transfers.get((e.src, e.dst))
        times = trace.vertex_times.get(e.dst)
        dev = partition.assignment.get(e.dst)
        if rec is None or times is None or dev is None:
            continue
        arrival = rec.end
        released = times[1]
        if released <= arrival:
            continue
        # Removals sort before additions so that windows are half-open.
        events.setdefault(dev, []).append((arrival, 1, e.volume))
        events.setdefault(dev, []).append((released, 0, -e.volume))
    peaks = {}
    for dev, entries in events.items():
        entries.sort()
        current = 0.0
        peak = 0.0
        at = 0.0
        for time, _, delta in entries:
            current += delta
            if current > peak:
                peak = current
                at = time
        peaks[dev] = (peak, at)
    return peaks

"""Deterministic discrete-event simulation of a partitioned dataflow graph.

Execution model: every device runs one vertex at a time; a vertex becomes
executable once all of its input tensors are present on its device.  Tensors
start moving the instant their producer finishes (same-device moves are free,
cross-device moves take volume divided by link bandwidth, links do not
contend) so computation and communication overlap.  Ready vertices wait in a
per-device queue from which the configured policy picks.

Determinism: simultaneous events are processed transfers first, then vertex
completions, then by smallest id; devices take their initial scheduling turn
in id order.  Reruns with the same seed reproduce traces exactly.

Two engines produce bit-identical traces: a compiled kernel (used when the
extension built) and the pure Python reference below.  Select explicitly with
``backend=`` or the ``DAGSCHED_BACKEND`` environment variable.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Optional

from . import engine
from .cluster import DeviceCluster, exec_time, transfer_time
from .constraints import memory_peaks
from .graph import DataflowGraph
from .sched import (DEFAULT_MSR_WEIGHTS, MsrWeights, POLICIES, SchedulerState,
                    TieBreakRng, compute_pct, pick_next)


@dataclass(frozen=True)
class TransferRecord:
    """Movement of one edge's tensor; start is the producer's finish time."""

    start: float
    end: float
    src_device: str
    dst_device: str


@dataclass(frozen=True)
class ExecutionTrace:
    """Complete record of one simulated execution.

    ``vertex_times`` maps vertex id to (start, finish); ``transfers`` maps
    (src, dst) edge keys to :class:`TransferRecord`; ``device_order`` lists
    vertex ids per device in execution order; ``idle`` lists the gaps per
    device within the busy horizon.  Treated as immutable.
    """

    vertex_times: dict
    transfers: dict
    device_order: dict
    idle: dict
    event_count: int


@dataclass(frozen=True)
class MemoryViolation:
    device: str
    time: float
    peak: float
    capacity: float


@dataclass(frozen=True)
class SimReport:
    """Summary of one simulated execution."""

    makespan: float
    utilization: dict
    peak_memory: dict
    memory_violations: tuple
    event_count: int


def run(graph: DataflowGraph, cluster: DeviceCluster, partition, policy: str,
        policy_params: Optional[MsrWeights] = None, seed: int = 0,
        backend: Optional[str] = None):
    """Simulate the partitioned graph and return (trace, report).

    ``policy`` is one of fifo, pct or msr; ``policy_params`` carries the msr
    weights (ignored by the other policies).  ``seed`` feeds the fifo tie
    breaker only; pct and msr runs are seed independent.

    Raises:
        ValueError: on unknown policies or incomplete partitions.
        CycleError: if the graph is cyclic.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown scheduling policy '{policy}'")
    weights = policy_params if policy_params is not None else DEFAULT_MSR_WEIGHTS
    assignment = partition.assignment
    for vid in graph.ids():
        if vid not in assignment:
            raise ValueError(f"partition does not assign vertex {vid}")
        if not cluster.has_device(assignment[vid]):
            raise ValueError(
                f"partition assigns {vid} to unknown device {assignment[vid]}")
    graph.topological_order()
    pct = compute_pct(graph, cluster, partition) if policy == "pct" else None
    chosen = engine.resolve_backend(backend)
    if chosen == "compiled":
        trace = _run_compiled(graph, cluster, partition, policy, weights, seed,
                              pct)
    else:
        trace = _run_reference(graph, cluster, partition, policy, weights,
                               seed, pct)
    return trace, report(trace, graph, cluster, partition)


def report(trace: ExecutionTrace, graph: DataflowGraph, cluster: DeviceCluster,
           partition) -> SimReport:
    """Summarize a trace: makespan, utilization, memory peaks, violations."""
    makespan = 0.0
    for _, finish in trace.vertex_times.values():
        if finish > makespan:
            makespan = finish
    busy = {did: 0.0 for did in cluster.ids()}
    for vid in sorted(trace.vertex_times):
        start, finish = trace.vertex_times[vid]
        busy[partition.assignment[vid]] += finish - start
    utilization = {
        did: (busy[did] / makespan if makespan > 0 else 0.0)
        for did in cluster.ids()
    }
    peaks = memory_peaks(graph, partition, trace)
    peak_memory = {did: peaks.get(did, (0.0, 0.0))[0] for did in cluster.ids()}
    violations = []
    for did in cluster.ids():
        peak, at = peaks.get(did, (0.0, 0.0))
        capacity = cluster.device(did).memory
        if peak >= capacity:
            violations.append(MemoryViolation(device=did, time=at, peak=peak,
                                              capacity=capacity))
    return SimReport(makespan=makespan, utilization=utilization,
                     peak_memory=peak_memory, memory_violations=tuple(violations),
                     event_count=trace.event_count)


def active_edges(trace: ExecutionTrace, time: float, device: str) -> set:
    """Edges whose tensor occupies ``device`` at ``time``.

    A tensor is resident from the completion of its transfer until its
    consumer finishes; the consumer still reads the input while it runs.
    """
    result = set()
    for key, rec in trace.transfers.items():
        if rec.dst_device != device:
            continue
        finish = trace.vertex_times[key[1]][1]
        if rec.end <= time < finish:
            result.add(key)
    return result


def trace_lines(trace: ExecutionTrace) -> list:
    """Line records of all events: kind, time, vertex or edge id, device."""
    records = []
    device_of = {}
    for did, order in trace.device_order.items():
        for vid in order:
            device_of[vid] = did
    for vid, (start, finish) in trace.vertex_times.items():
        did = device_of.get(vid, "?")
        records.append((start, 1, f"start {start!r} {vid} {did}"))
        records.append((finish, 2, f"finish {finish!r} {vid} {did}"))
    for (src, dst), rec in trace.transfers.items():
        records.append((rec.start, 0,
                        f"transfer_start {rec.start!r} {src}:{dst} "
                        f"{rec.src_device}:{rec.dst_device}"))
        records.append((rec.end, 0,
                        f"transfer_end {rec.end!r} {src}:{dst} "
                        f"{rec.src_device}:{rec.dst_device}"))
    records.sort(key=lambda item: (item[0], item[1], item[2]))
    return [text for _, _, text in records]


def _run_reference(graph, cluster, partition, policy, weights, seed, pct):
    """Readable event-loop implementation; the ground truth for the kernel."""
    assignment = partition.assignment
    exec_t = {}
    for v in graph.vertices:
        exec_t[v.id] = exec_time(v, cluster.device(assignment[v.id]))
    trans_t = {}
    for e in graph.edges:
        trans_t[(e.src, e.dst)] = transfer_time(e, assignment[e.src],
                                                assignment[e.dst], cluster)
    pending = {vid: len(graph.predecessors(vid)) for vid in graph.ids()}
    state = SchedulerState(policy=policy, graph=graph, partition=partition,
                           queues={did: [] for did in cluster.ids()},
                           weights=weights, rng=TieBreakRng(seed),
                           idle=set(cluster.ids()))
    start = {}
    finish = {}
    transfers = {}
    device_order = {did: [] for did in cluster.ids()}
    heap = []
    events = 0

    def try_start(device, now):
        if device not in state.idle:
            return
        vid = pick_next(policy, device, state, pct)
        if vid is None:
            return
        queue = state.queues[device]
        for i, (qvid, _) in enumerate(queue):
            if qvid == vid:
                del queue[i]
                break
        state.idle.discard(device)
        start[vid] = now
        finish[vid] = now + exec_t[vid]
        device_order[device].append(vid)
        heapq.heappush(heap, (finish[vid], 1, vid))

    def deliver(vid, now):
        pending[vid] -= 1
        if pending[vid] == 0:
            state.queues[assignment[vid]].append((vid, now))

    for vid in sorted(graph.ids()):
        if pending[vid] == 0:
            state.queues[assignment[vid]].append((vid, 0.0))
    for did in sorted(cluster.ids()):
        try_start(did, 0.0)

    while heap:
        now, kind, key = heapq.heappop(heap)
        events += 1
        if kind == 0:
            deliver(key[1], now)
            affected = assignment[key[1]]
        else:
            vid = key
            affected = assignment[vid]
            state.idle.add(affected)
            for e in graph.out_edges(vid):
                tt = trans_t[(e.src, e.dst)]
                dst_device = assignment[e.dst]
                transfers[(e.src, e.dst)] = TransferRecord(
                    start=now, end=now + tt, src_device=affected,
                    dst_device=dst_device)
                if dst_device == affected:
                    deliver(e.dst, now)
                else:
                    heapq.heappush(heap, (now + tt, 0, (e.src, e.dst)))
        try_start(affected, now)

    if len(finish) != len(graph.vertices):
        raise RuntimeError("simulation stalled before completing all vertices")
    makespan = max(finish.values(), default=0.0)
    vertex_times = {vid: (start[vid], finish[vid]) for vid in start}
    idle = {did: _gaps(device_order[did], vertex_times, makespan)
            for did in cluster.ids()}
    return ExecutionTrace(vertex_times=vertex_times, transfers=transfers,
                          device_order=device_order, idle=idle,
                          event_count=events)


def _run_compiled(graph, cluster, partition, policy, weights, seed, pct):
    """Array marshalling for the compiled kernel; semantics match the
    reference loop exactly."""
    import numpy as np

    from .engine import _speedups
    from .engine.view import InstanceView

    view = InstanceView.build(graph, cluster)
    part = view.partition_array(partition)
    exec_t = view.exec_times(part)
    trans_t = view.transfer_times(part)
    if pct is not None:
        pct_arr = np.array([pct[vid] for vid in view.vertex_ids], dtype=np.float64)
    else:
        pct_arr = np.zeros(len(view.vertex_ids), dtype=np.float64)
    policy_code = POLICIES.index(policy)
    n = len(view.vertex_ids)
    m = len(view.edge_src)
    start = np.empty(n, dtype=np.float64)
    finish = np.empty(n, dtype=np.float64)
    tstart = np.empty(m, dtype=np.float64)
    tend = np.empty(m, dtype=np.float64)
    order = np.empty(n, dtype=np.int64)
    events = _speedups.simulate_kernel(
        view.edge_src, view.edge_dst, view.out_ptr, view.indegree, part,
        exec_t, trans_t, policy_code, pct_arr,
        weights.alpha, weights.beta, weights.gamma, weights.delta,
        seed & ((1 << 64) - 1), len(view.device_ids),
        start, finish, tstart, tend, order)
    if events < 0:
        raise RuntimeError("simulation stalled before completing all vertices")
    ids = view.vertex_ids
    devs = view.device_ids
    parts = part.tolist()
    starts = start.tolist()
    finishes = finish.tolist()
    vertex_times = {vid: (starts[i], finishes[i])
                    for i, vid in enumerate(ids)}
    tstarts = tstart.tolist()
    tends = tend.tolist()
    esrc = view.edge_src.tolist()
    edst = view.edge_dst.tolist()
    transfers = {}
    for j in range(m):
        s, d = esrc[j], edst[j]
        transfers[(ids[s], ids[d])] = TransferRecord(
            start=tstarts[j], end=tends[j],
            src_device=devs[parts[s]], dst_device=devs[parts[d]])
    device_order = {did: [] for did in devs}
    for v in order.tolist():
        device_order[devs[parts[v]]].append(ids[v])
    makespan = float(finish.max()) if n else 0.0
    idle = {did: _gaps(device_order[did], vertex_times, makespan)
            for did in view.device_ids}
    return ExecutionTrace(vertex_times=vertex_times, transfers=transfers,
                          device_order=device_order, idle=idle,
                          event_count=int(events))


def _gaps(order, vertex_times, makespan):
    """Idle intervals of one device inside [0, makespan]."""
    gaps = []
    cursor = 0.0
    for vid in order:
        start, finish = vertex_times[vid]
        if start > cursor:
            gaps.append((cursor, start))
        if finish > cursor:
            cursor = finish
    if makespan > cursor:
        gaps.append((cursor, makespan))
    return gaps

"""Per-device scheduling policies: fifo, pct and msr.

Each device runs one vertex at a time and picks the next one from its own
ready queue.  ``fifo`` takes the vertex that became executable first, ``pct``
the one with the largest projected completion time (length of the remaining
schedule-aware path to a sink), ``msr`` the one whose completion unlocks the
most follow-up work right now.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .cluster import DeviceCluster, exec_time, transfer_time
from .graph import DataflowGraph

POLICIES = ("fifo", "pct", "msr")

_MASK = (1 << 64) - 1


class TieBreakRng:
    """Deterministic 64-bit generator used for fifo tie breaking.

    Implements splitmix64 so that the compiled engine can reproduce the exact
    same draws with plain unsigned integer arithmetic.
    """

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next() % n


@dataclass(frozen=True)
class MsrWeights:
    """Weights of the msr score terms."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    delta: float = 5.0

    def as_tuple(self):
        return (self.alpha, self.beta, self.gamma, self.delta)


DEFAULT_MSR_WEIGHTS = MsrWeights()


@dataclass
class SchedulerState:
    """Dynamic scheduling state shared by the policies.

    ``queues`` maps each device to its ready queue, a list of
    ``(vertex id, ready timestamp)`` pairs.  ``idle`` is the set of devices
    not currently executing anything; during its own scheduling decision the
    deciding device is still a member.
    """

    policy: str
    graph: DataflowGraph
    partition: object
    queues: dict = field(default_factory=dict)
    weights: MsrWeights = DEFAULT_MSR_WEIGHTS
    rng: TieBreakRng = field(default_factory=lambda: TieBreakRng(0))
    idle: set = field(default_factory=set)


def compute_pct(graph: DataflowGraph, cluster: DeviceCluster, partition) -> dict:
    """Projected completion time of every vertex under a fixed partition.

    For a sink this is its execution time on its assigned device; otherwise it
    is the vertex's execution time plus the largest successor value after
    adding the transfer time of the connecting edge between the two assigned
    devices.  Computed in reverse topological order.
    """
    assignment = partition.assignment
    pct = {}
    for vid in reversed(graph.topological_order()):
        vertex = graph.vertex(vid)
        device = cluster.device(assignment[vid])
        own = exec_time(vertex, device)
        best = 0.0
        for e in graph.out_edges(vid):
            tail = pct[e.dst] + transfer_time(e, assignment[vid],
                                              assignment[e.dst], cluster)
            if tail > best:
                best = tail
        pct[vid] = best + own
    return pct


def msr_score(vertex_id: str, graph: DataflowGraph, partition, idle_devices,
              weights: MsrWeights = DEFAULT_MSR_WEIGHTS) -> float:
    """How much follow-up work finishing this vertex would unlock.

    Every successor contributes ``alpha``; ``beta`` more if it lives on a
    different device (its tensor starts moving early), ``gamma`` more if this
    vertex is its only input (it becomes executable immediately), ``delta``
    more if additionally the successor's device is idle right now (an idle
    device gets work).  Successors are visited in id order so the floating
    point sum is reproducible.
    """
    assignment = partition.assignment
    own_device = assignment[vertex_id]
    score = 0.0
    for succ in graph.successors(vertex_id):
        score += weights.alpha
        succ_device = assignment[succ]
        if succ_device != own_device:
            score += weights.beta
        if len(graph.predecessors(succ)) == 1:
            score += weights.gamma
            if succ_device in idle_devices:
                score += weights.delta
    return score


def pick_next(policy: str, device_id: str, state: SchedulerState,
              pct: Optional[dict] = None) -> Optional[str]:
    """Choose the next vertex for a device, or None when its queue is empty.

    fifo picks the earliest ready timestamp and resolves ties with a seeded
    random draw; pct picks the largest projected completion time and msr the
    largest msr score, both resolving ties with the smallest vertex id.
    """
    queue = state.queues[device_id]
    if not queue:
        return None
    if policy == "fifo":
        earliest = min(ready for _, ready in queue)
        tied = sorted(vid for vid, ready in queue if ready == earliest)
        if len(tied) == 1:
            return tied[0]
        return tied[state.rng.below(len(tied))]
    if policy == "pct":
        if pct is None:
            raise ValueError("pct policy requires a projected completion table")
        return min(queue, key=lambda item: (-pct[item[0]], item[0]))[0]
    if policy == "msr":
        scores = {vid: msr_score(vid, state.graph, state.partition, state.idle,
                                 state.weights)
                  for vid, _ in queue}
        return min(queue, key=lambda item: (-scores[item[0]], item[0]))[0]
    raise ValueError(f"unknown scheduling policy '{policy}'")

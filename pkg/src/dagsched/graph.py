"""Dataflow graph model and structural computations.

The graph is a weighted DAG: vertices carry a computational cost (operations),
edges carry the data volume they transport (bytes).  Vertices may additionally
be annotated with a collocation group (they must share a device with their
group peers) and a device constraint (they must run on one specific device).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import CycleError


@dataclass(frozen=True)
class VertexRecord:
    """One operation of the dataflow program."""

    id: str
    cost: float = 0.0
    colocation_group: Optional[str] = None
    device_constraint: Optional[str] = None


@dataclass(frozen=True)
class EdgeRecord:
    """Directed transport of ``volume`` bytes from ``src`` to ``dst``."""

    src: str
    dst: str
    volume: float = 0.0


@dataclass(frozen=True)
class RankTable:
    """Up, down and total ranks keyed by vertex id."""

    up: dict
    down: dict
    total: dict


class DataflowGraph:
    """A DAG with cached, deterministically ordered adjacency.

    The graph is treated as immutable after construction.  Construction never
    raises on structural problems; run :func:`validate_dag` to obtain the list
    of violations.  Operations that need a valid DAG (rank computations,
    critical path) raise :class:`CycleError` when a cycle is present.

    Adjacency lists are sorted by vertex id so that every traversal in the
    package visits neighbours in the same order.
    """

    def __init__(self, vertices: Iterable[VertexRecord], edges: Iterable[EdgeRecord]):
        self.vertices = list(vertices)
        self.edges = list(edges)
        self._vertex_by_id = {}
        for v in self.vertices:
            self._vertex_by_id.setdefault(v.id, v)
        self._succ = {v.id: [] for v in self.vertices}
        self._pred = {v.id: [] for v in self.vertices}
        self._in_edges = {v.id: [] for v in self.vertices}
        self._out_edges = {v.id: [] for v in self.vertices}
        for e in self.edges:
            if e.src in self._vertex_by_id and e.dst in self._vertex_by_id:
                self._succ[e.src].append(e.dst)
                self._pred[e.dst].append(e.src)
                self._out_edges[e.src].append(e)
                self._in_edges[e.dst].append(e)
        for vid in self._succ:
            self._succ[vid].sort()
            self._pred[vid].sort()
            self._out_edges[vid].sort(key=lambda e: e.dst)
            self._in_edges[vid].sort(key=lambda e: e.src)
        self._topo = None

    def __eq__(self, other):
        if not isinstance(other, DataflowGraph):
            return NotImplemented
        return self.vertices == other.vertices and self.edges == other.edges

    def __repr__(self):
        return f"DataflowGraph({len(self.vertices)} vertices, {len(self.edges)} edges)"

    def ids(self) -> list:
        return [v.id for v in self.vertices]

    def vertex(self, vid: str) -> VertexRecord:
        return self._vertex_by_id[vid]

    def has_vertex(self, vid: str) -> bool:
        return vid in self._vertex_by_id

    def successors(self, vid: str) -> list:
        return self._succ[vid]

    def predecessors(self, vid: str) -> list:
        return self._pred[vid]

    def in_edges(self, vid: str) -> list:
        return self._in_edges[vid]

    def out_edges(self, vid: str) -> list:
        return self._out_edges[vid]

    def sources(self) -> list:
        return sorted(vid for vid in self._pred if not self._pred[vid])

    def sinks(self) -> list:
        return sorted(vid for vid in self._succ if not self._succ[vid])

    def topological_order(self) -> list:
        """Vertex ids in a fixed topological order (Kahn), cached.

        Raises:
            CycleError: if the graph contains a cycle.
        """
        if self._topo is None:
            indeg = {vid: len(self._pred[vid]) for vid in self._pred}
            queue = [vid for vid in sorted(indeg) if indeg[vid] == 0]
            order = []
            head = 0
            while head < len(queue):
                vid = queue[head]
                head += 1
                order.append(vid)
                for w in self._succ[vid]:
                    indeg[w] -= 1
                    if indeg[w] == 0:
                        queue.append(w)
            if len(order) != len(self.vertices):
                raise CycleError("graph contains a cycle")
            self._topo = order
        return self._topo


def validate_dag(graph: DataflowGraph) -> list:
    """Check structural well-formedness.

    Returns a list of human-readable violations; an empty list means the graph
    is a well-formed DAG.  Reported problems: duplicate vertex ids, edges with
    unknown endpoints, self-loops, duplicate edges, negative costs or volumes,
    and cycles (naming the vertices on one offending cycle).
    """
    violations = []
    seen = set()
    for v in graph.vertices:
        if v.id in seen:
            violations.append(f"duplicate vertex id '{v.id}'")
        seen.add(v.id)
        if v.cost < 0:
            violations.append(f"vertex {v.id}: negative cost {v.cost!r}")
    edge_keys = set()
    for e in graph.edges:
        if e.src not in seen or e.dst not in seen:
            violations.append(f"edge {e.src}->{e.dst}: unknown endpoint")
            continue
        if e.src == e.dst:
            violations.append(f"edge {e.src}->{e.dst}: self-loop")
            continue
        if (e.src, e.dst) in edge_keys:
            violations.append(f"duplicate edge {e.src}->{e.dst}")
        edge_keys.add((e.src, e.dst))
        if e.volume < 0:
            violations.append(f"edge {e.src}->{e.dst}: negative volume {e.volume!r}")
    cycle = _find_cycle(graph)
    if cycle:
        violations.append("cycle {%s}" % ",".join(cycle))
    return violations


def _find_cycle(graph: DataflowGraph):
    """Return the sorted vertex ids of one cycle, or None."""
    indeg = {v.id: 0 for v in graph.vertices}
    for vid in indeg:
        indeg[vid] = len(graph.predecessors(vid))
    queue = [vid for vid in indeg if indeg[vid] == 0]
    remaining = set(indeg)
    head = 0
    while head < len(queue):
        vid = queue[head]
        head += 1
        remaining.discard(vid)
        for w in graph.successors(vid):
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    if not remaining:
        return None
    # Every remaining vertex has a predecessor in the remaining set, so
    # walking predecessors must revisit a vertex and close a cycle.
    start = min(remaining)
    seen = {}
    path = []
    cur = start
    while cur not in seen:
        seen[cur] = len(path)
        path.append(cur)
        cur = min(p for p in graph.predecessors(cur) if p in remaining)
    return sorted(path[seen[cur]:])


def add_virtual_sink(graph: DataflowGraph) -> DataflowGraph:
    """Return a copy with a zero-cost sink collecting all original sinks.

    The added vertex receives a zero-volume edge from every sink of the input
    graph, so ranks of pre-existing vertices are unchanged.  The input graph
    is not modified.

    Raises:
        ValueError: if the graph is empty.
    """
    if not graph.vertices:
        raise ValueError("cannot add a virtual sink to an empty graph")
    ids = set(graph.ids())
    sink_id = "__sink__"
    n = 2
    while sink_id in ids:
        sink_id = f"__sink__{n}"
        n += 1
    vertices = list(graph.vertices) + [VertexRecord(id=sink_id, cost=0.0)]
    edges = list(graph.edges)
    for vid in graph.sinks():
        edges.append(EdgeRecord(src=vid, dst=sink_id, volume=0.0))
    return DataflowGraph(vertices, edges)


def up_rank(graph: DataflowGraph) -> dict:
    """Longest-suffix cost of each vertex.

    ``up(v) = cost(v)`` for sinks, otherwise ``max over successors s of
    up(s), plus cost(v)``.  Equals the maximum total cost of any path from the
    vertex to a sink, counting the vertex itself.
    """
    up = {}
    for vid in reversed(graph.topological_order()):
        cost = graph.vertex(vid).cost
        succ = graph.successors(vid)
        if succ:
            up[vid] = max(up[s] for s in succ) + cost
        else:
            up[vid] = cost
    return up


def down_rank(graph: DataflowGraph) -> dict:
    """Longest-prefix cost of each vertex.

    ``down(v) = cost(v)`` for sources, otherwise ``max over predecessors p of
    down(p), plus cost(v)``.  Equals the maximum total cost of any path from a
    source to the vertex, counting the vertex itself.
    """
    down = {}
    for vid in graph.topological_order():
        cost = graph.vertex(vid).cost
        pred = graph.predecessors(vid)
        if pred:
            down[vid] = max(down[p] for p in pred) + cost
        else:
            down[vid] = cost
    return down


def total_rank(graph: DataflowGraph) -> RankTable:
    """Up, down and total ranks for every vertex.

    The total rank is the plain sum ``up + down``; because both ranks include
    the vertex's own cost, that cost is counted twice.  The sum is kept
    literal so that rank orderings used by the partitioners are reproducible.
    """
    up = up_rank(graph)
    down = down_rank(graph)
    total = {vid: up[vid] + down[vid] for vid in up}
    return RankTable(up=up, down=down, total=total)


def critical_path(graph: DataflowGraph) -> list:
    """The source-to-sink path with the largest total cost.

    The path is recovered from down ranks: start at the sink with the largest
    down rank and repeatedly step to the predecessor with the largest down
    rank.  Ties prefer the smallest vertex id, which makes the result unique.

    Raises:
        ValueError: if the graph is empty.
        CycleError: if the graph contains a cycle.
    """
    if not graph.vertices:
        raise ValueError("critical path of an empty graph is undefined")
    down = down_rank(graph)
    cur = min(graph.sinks(), key=lambda vid: (-down[vid], vid))
    path = [cur]
    while graph.predecessors(cur):
        cur = min(graph.predecessors(cur), key=lambda vid: (-down[vid], vid))
        path.append(cur)
    path.reverse()
    return path

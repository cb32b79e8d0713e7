"""Plain-text persistence for instances, assignments and traces.

An instance file is a single self-describing document with four sections:
devices (id, speed, memory), bandwidth (dense row-major matrix in device
order), vertices (id, cost, collocation group, device constraint) and edges
(src, dst, volume).  Optional fields use ``-``.  Floats are written with
``repr`` so loading restores them bit for bit.
"""

from __future__ import annotations

from .cluster import DeviceCluster, DeviceRecord
from .errors import InstanceFormatError
from .graph import DataflowGraph, EdgeRecord, VertexRecord, validate_dag
from .partition import Partition

_INSTANCE_HEADER = "# dagsched instance"
_ASSIGNMENT_HEADER = "# dagsched assignment"
_SECTIONS = ("devices", "bandwidth", "vertices", "edges")


def save_instance(graph: DataflowGraph, cluster: DeviceCluster, path):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(dumps_instance(graph, cluster))


def load_instance(path):
    with open(path, "r", encoding="utf-8") as handle:
        return loads_instance(handle.read(), source=str(path))


def dumps_instance(graph: DataflowGraph, cluster: DeviceCluster) -> str:
    lines = [_INSTANCE_HEADER, "version 1", ""]
    lines.append("[devices]")
    lines.append("# id speed memory")
    for d in cluster.devices:
        _check_token(d.id, "device id")
        lines.append(f"{d.id} {d.speed!r} {d.memory!r}")
    lines.append("")
    lines.append("[bandwidth]")
    lines.append("# one row per device, row-major; the diagonal is unused")
    for row in cluster.bandwidth:
        lines.append(" ".join(repr(value) for value in row))
    lines.append("")
    lines.append("[vertices]")
    lines.append("# id cost group device")
    for v in graph.vertices:
        _check_token(v.id, "vertex id")
        group = v.colocation_group if v.colocation_group is not None else "-"
        if group != "-":
            _check_token(group, "group label")
        device = v.device_constraint if v.device_constraint is not None else "-"
        lines.append(f"{v.id} {v.cost!r} {group} {device}")
    lines.append("")
    lines.append("[edges]")
    lines.append("# src dst volume")
    for e in graph.edges:
        lines.append(f"{e.src} {e.dst} {e.volume!r}")
    lines.append("")
    return "\n".join(lines)


def loads_instance(text: str, source: str = "<string>"):
    devices = []
    bandwidth_rows = []
    vertices = []
    edges = []
    section = None
    saw_header = False
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line == _INSTANCE_HEADER:
                saw_header = True
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            if section not in _SECTIONS:
                raise InstanceFormatError(
                    f"{source}:{number}: unknown section [{section}]")
            continue
        if section is None:
            if line.split() == ["version", "1"]:
                continue
            raise InstanceFormatError(
                f"{source}:{number}: content before the first section")
        tokens = line.split()
        if section == "devices":
            if len(tokens) != 3:
                raise InstanceFormatError(
                    f"{source}:{number}: device lines need id, speed, memory")
            devices.append((number, tokens[0], _number(tokens[1], source, number),
                            _number(tokens[2], source, number)))
        elif section == "bandwidth":
            bandwidth_rows.append(
                (number, [_number(tok, source, number) for tok in tokens]))
        elif section == "vertices":
            if len(tokens) != 4:
                raise InstanceFormatError(
                    f"{source}:{number}: vertex lines need id, cost, group, "
                    f"device")
            vertices.append(VertexRecord(
                id=tokens[0],
                cost=_number(tokens[1], source, number),
                colocation_group=None if tokens[2] == "-" else tokens[2],
                device_constraint=None if tokens[3] == "-" else tokens[3]))
        else:
            if len(tokens) != 3:
                raise InstanceFormatError(
                    f"{source}:{number}: edge lines need src, dst, volume")
            edges.append(EdgeRecord(src=tokens[0], dst=tokens[1],
                                    volume=_number(tokens[2], source, number)))
    if not saw_header:
        raise InstanceFormatError(f"{source}: missing '{_INSTANCE_HEADER}' header")

    k = len(devices)
    if len(bandwidth_rows) != k:
        raise InstanceFormatError(
            f"{source}: bandwidth matrix incomplete: {len(bandwidth_rows)} "
            f"rows for {k} devices")
    for number, row in bandwidth_rows:
        if len(row) != k:
            raise InstanceFormatError(
                f"{source}:{number}: bandwidth matrix incomplete: row has "
                f"{len(row)} entries for {k} devices")
    records = []
    for number, did, speed, memory in devices:
        try:
            records.append(DeviceRecord(id=did, speed=speed, memory=memory))
        except ValueError as exc:
            raise InstanceFormatError(f"{source}:{number}: {exc}") from exc
    try:
        cluster = DeviceCluster(records, [row for _, row in bandwidth_rows])
    except ValueError as exc:
        raise InstanceFormatError(f"{source}: {exc}") from exc

    graph = DataflowGraph(vertices, edges)
    problems = validate_dag(graph)
    for v in graph.vertices:
        if v.device_constraint is not None and not cluster.has_device(
                v.device_constraint):
            problems.append(f"vertex {v.id}: unknown device constraint "
                            f"{v.device_constraint}")
    if problems:
        raise InstanceFormatError(
            f"{source}: invalid instance: " + "; ".join(problems))
    return graph, cluster


def save_assignment(partition: Partition, path):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(dumps_assignment(partition))


def load_assignment(path) -> Partition:
    with open(path, "r", encoding="utf-8") as handle:
        return loads_assignment(handle.read(), source=str(path))


def dumps_assignment(partition: Partition) -> str:
    lines = [_ASSIGNMENT_HEADER]
    lines.append(f"strategy {partition.strategy}")
    seed = "-" if partition.seed is None else str(partition.seed)
    lines.append(f"seed {seed}")
    for vid in sorted(partition.assignment):
        _check_token(vid, "vertex id")
        lines.append(f"{vid} {partition.assignment[vid]}")
    lines.append("")
    return "\n".join(lines)


def loads_assignment(text: str, source: str = "<string>") -> Partition:
    assignment = {}
    strategy = "unknown"
    seed = None
    saw_header = False
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line == _ASSIGNMENT_HEADER:
                saw_header = True
            continue
        tokens = line.split()
        if tokens[0] == "strategy" and len(tokens) == 2:
            strategy = tokens[1]
            continue
        if tokens[0] == "seed" and len(tokens) == 2:
            seed = None if tokens[1] == "-" else int(tokens[1])
            continue
        if len(tokens) != 2:
            raise InstanceFormatError(
                f"{source}:{number}: assignment lines need vertex and device")
        if tokens[0] in assignment:
            raise InstanceFormatError(
                f"{source}:{number}: duplicate assignment for {tokens[0]}")
        assignment[tokens[0]] = tokens[1]
    if not saw_header:
        raise InstanceFormatError(
            f"{source}: missing '{_ASSIGNMENT_HEADER}' header")
    return Partition(assignment=assignment, strategy=strategy, seed=seed)


def write_trace(trace, path):
    from .simulate import trace_lines

    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for line in trace_lines(trace):
            handle.write(line + "\n")


def _number(token: str, source: str, number: int) -> float:
    try:
        return float(token)
    except ValueError as exc:
        raise InstanceFormatError(
            f"{source}:{number}: not a number: {token!r}") from exc


def _check_token(token: str, kind: str):
    if not token or token == "-" or any(ch.isspace() for ch in token):
        raise ValueError(f"{kind} {token!r} cannot be stored: tokens must be "
                         f"non-empty, without whitespace, and not '-'")

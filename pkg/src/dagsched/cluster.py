"""Device cluster model: speeds, memory capacities and link bandwidths."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import UnreachableLinkError
from .graph import EdgeRecord, VertexRecord


@dataclass(frozen=True)
class DeviceRecord:
    """One device: processing speed (ops per time unit) and memory (bytes)."""

    id: str
    speed: float
    memory: float

    def __post_init__(self):
        if self.speed <= 0:
            raise ValueError(f"device {self.id}: speed must be positive")
        if self.memory <= 0:
            raise ValueError(f"device {self.id}: memory must be positive")


class DeviceCluster:
    """A set of devices plus a dense bandwidth matrix.

    ``bandwidth[i][j]`` is the transfer rate (bytes per time unit) from the
    i-th to the j-th device of ``devices``; the matrix may be asymmetric and
    its diagonal is ignored because same-device transfers are free.
    """

    def __init__(self, devices: Iterable[DeviceRecord], bandwidth):
        self.devices = list(devices)
        self.bandwidth = [list(row) for row in bandwidth]
        ids = [d.id for d in self.devices]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate device ids")
        k = len(self.devices)
        if len(self.bandwidth) != k or any(len(row) != k for row in self.bandwidth):
            raise ValueError("bandwidth matrix must be square with one row per device")
        for row in self.bandwidth:
            for value in row:
                if value < 0:
                    raise ValueError("bandwidth must be non-negative")
        self._index = {d.id: i for i, d in enumerate(self.devices)}
        self._by_id = {d.id: d for d in self.devices}

    def __eq__(self, other):
        if not isinstance(other, DeviceCluster):
            return NotImplemented
        return self.devices == other.devices and self.bandwidth == other.bandwidth

    def __repr__(self):
        return f"DeviceCluster({len(self.devices)} devices)"

    def ids(self) -> list:
        return [d.id for d in self.devices]

    def device(self, did: str) -> DeviceRecord:
        return self._by_id[did]

    def has_device(self, did: str) -> bool:
        return did in self._by_id

    def index(self, did: str) -> int:
        return self._index[did]

    def bandwidth_between(self, src: str, dst: str) -> float:
        return self.bandwidth[self._index[src]][self._index[dst]]


def exec_time(vertex: VertexRecord, device: DeviceRecord) -> float:
    """Time to run ``vertex`` on ``device``: cost divided by speed."""
    return vertex.cost / device.speed


def transfer_time(edge: EdgeRecord, src_device: str, dst_device: str,
                  cluster: DeviceCluster) -> float:
    """Time to move the edge's tensor between the two devices.

    Same-device transfers take zero time.  Cross-device transfers take
    ``volume / bandwidth``; a zero-bandwidth link with positive volume is an
    error because the tensor could never arrive.
    """
    if src_device == dst_device:
        return 0.0
    if edge.volume == 0:
        return 0.0
    rate = cluster.bandwidth_between(src_device, dst_device)
    if rate <= 0:
        raise UnreachableLinkError(
            f"unreachable link {src_device}->{dst_device} for edge "
            f"{edge.src}->{edge.dst}")
    return edge.volume / rate

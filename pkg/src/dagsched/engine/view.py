"""Flat array projection of an instance for the compiled kernels.

Vertices and devices are indexed in sorted id order, edges in sorted
(src, dst) index order; all smallest-id tie breaking rules therefore map to
smallest-index rules on the arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UnreachableLinkError


@dataclass
class InstanceView:
    vertex_ids: list
    vertex_index: dict
    device_ids: list
    device_index: dict
    cost: np.ndarray
    speed: np.ndarray
    memory: np.ndarray
    bandwidth: np.ndarray
    edge_src: np.ndarray
    edge_dst: np.ndarray
    volume: np.ndarray
    out_ptr: np.ndarray
    in_ptr: np.ndarray
    in_edge: np.ndarray
    indegree: np.ndarray

    @classmethod
    def build(cls, graph, cluster) -> "InstanceView":
        vertex_ids = sorted(graph.ids())
        vertex_index = {vid: i for i, vid in enumerate(vertex_ids)}
        device_ids = sorted(cluster.ids())
        device_index = {did: i for i, did in enumerate(device_ids)}
        n = len(vertex_ids)
        k = len(device_ids)

        cost = np.array([graph.vertex(vid).cost for vid in vertex_ids],
                        dtype=np.float64)
        speed = np.array([cluster.device(did).speed for did in device_ids],
                         dtype=np.float64)
        memory = np.array([cluster.device(did).memory for did in device_ids],
                          dtype=np.float64)
        perm = np.array([cluster.index(did) for did in device_ids],
                        dtype=np.int64)
        bandwidth = np.array(cluster.bandwidth,
                             dtype=np.float64)[np.ix_(perm, perm)]

        keyed = sorted((vertex_index[e.src], vertex_index[e.dst], e.volume)
                       for e in graph.edges)
        m = len(keyed)
        edge_src = np.array([item[0] for item in keyed], dtype=np.int64)
        edge_dst = np.array([item[1] for item in keyed], dtype=np.int64)
        volume = np.array([item[2] for item in keyed], dtype=np.float64)

        out_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(edge_src, minlength=n), out=out_ptr[1:])

        indegree = np.bincount(edge_dst, minlength=n).astype(np.int64)
        in_ptr = np.zeros(n + 1, dtype=np.int64)
        in_ptr[1:] = np.cumsum(indegree)
        in_edge = (np.lexsort((edge_src, edge_dst)).astype(np.int64)
                   if m else np.zeros(0, dtype=np.int64))

        return cls(vertex_ids=vertex_ids, vertex_index=vertex_index,
                   device_ids=device_ids, device_index=device_index,
                   cost=cost, speed=speed, memory=memory, bandwidth=bandwidth,
                   edge_src=edge_src, edge_dst=edge_dst, volume=volume,
                   out_ptr=out_ptr, in_ptr=in_ptr, in_edge=in_edge,
                   indegree=indegree)

    def partition_array(self, partition) -> np.ndarray:
        assignment = partition.assignment
        return np.array([self.device_index[assignment[vid]]
                         for vid in self.vertex_ids], dtype=np.int64)

    def exec_times(self, part: np.ndarray) -> np.ndarray:
        return self.cost / self.speed[part]

    def transfer_times(self, part: np.ndarray) -> np.ndarray:
        """Per-edge durations; zero for same-device or empty transfers."""
        times = np.zeros(len(self.edge_src), dtype=np.float64)
        if not len(self.edge_src):
            return times
        src_dev = part[self.edge_src]
        dst_dev = part[self.edge_dst]
        rate = self.bandwidth[src_dev, dst_dev]
        cross = (src_dev != dst_dev) & (self.volume > 0)
        dead = cross & (rate <= 0)
        if np.any(dead):
            j = int(np.argmax(dead))
            raise UnreachableLinkError(
                f"unreachable link {self.device_ids[src_dev[j]]}->"
                f"{self.device_ids[dst_dev[j]]} for edge "
                f"{self.vertex_ids[self.edge_src[j]]}->"
                f"{self.vertex_ids[self.edge_dst[j]]}")
        times[cross] = self.volume[cross] / rate[cross]
        return times

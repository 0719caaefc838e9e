"""Roadside units: placement on the grid and hybrid vehicle+infrastructure
clustering.  All RSUs are interconnected over a fixed backbone, modeled as a
single virtual node adjacent to every vehicle within range of any RSU.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .connectivity import ClusterReport, ConnectivitySnapshot, UnionFind, build_graph
from .grid import RoadNetwork


class RsuPolicy(enum.Enum):
    AT_INTERSECTIONS = "intersections"
    MID_SEGMENT = "midsegment"
    CUSTOM = "custom"


@dataclass(frozen=True)
class RsuDeployment:
    positions: np.ndarray   # (m, 2) meters, on the road lines
    range: float            # meters; defaults to the vehicle range at call sites
    policy: RsuPolicy

    @property
    def count(self) -> int:
        return len(self.positions)


def place_rsus(net: RoadNetwork, policy: RsuPolicy, rsu_range: float,
               positions: np.ndarray | None = None) -> RsuDeployment:
    """Deploy RSUs: one per intersection, one per segment midpoint, or custom.

    Custom positions are validated to lie on the grid's road lines.
    """
    if rsu_range <= 0:
        raise ValueError(f"RSU range must be positive, got {rsu_range}")
    if policy is RsuPolicy.AT_INTERSECTIONS:
        pos = np.array([net.node_xy[("I", i, j)]
                        for i in range(net.n) for j in range(net.n)])
    elif policy is RsuPolicy.MID_SEGMENT:
        pos = np.array([_segment_midpoint(net, seg.id) for seg in net.segments])
    elif policy is RsuPolicy.CUSTOM:
        if positions is None:
            raise ValueError("custom policy requires explicit positions")
        pos = np.asarray(positions, dtype=float).reshape(-1, 2)
        for x, y in pos:
            if not net.is_on_roads(x, y, tol=1e-6):
                raise ValueError(f"RSU position ({x}, {y}) is off the road lines")
    else:  # pragma: no cover
        raise ValueError(f"unknown policy {policy}")
    return RsuDeployment(positions=pos, range=float(rsu_range), policy=policy)


def _segment_midpoint(net: RoadNetwork, seg_id: int) -> tuple[float, float]:
    seg = net.segments[seg_id]
    (xa, ya), (xb, yb) = net.node_xy[seg.node_a], net.node_xy[seg.node_b]
    return (xa + xb) / 2.0, (ya + yb) / 2.0


def hybrid_cluster(snap: ConnectivitySnapshot, dep: RsuDeployment,
                   edges: tuple[np.ndarray, np.ndarray] | None = None
                   ) -> ClusterReport | None:
    """Cluster metrics when vehicles in range of any RSU share the backbone.

    phi and theta keep vehicle-only denominators; the virtual backbone node is
    excluded from all counts.  A vehicle is isolated iff it has neither a
    vehicle neighbor nor an RSU in range.  With no vehicle in RSU range the
    report coincides with the pure V2V clustering.
    """
    k = snap.k
    if k == 0:
        return None
    u, v = edges if edges is not None else build_graph(snap)
    if dep.count:
        d2 = ((snap.xy[:, None, :] - dep.positions[None, :, :]) ** 2).sum(-1)
        near_rsu = (d2 <= dep.range * dep.range).any(axis=1)
    else:
        near_rsu = np.zeros(k, dtype=bool)

    backbone = k  # index of the single virtual backbone node
    uf = UnionFind(k + 1)
    for a, b in zip(u.tolist(), v.tolist()):
        uf.union(a, b)
    for i in np.flatnonzero(near_rsu).tolist():
        uf.union(i, backbone)

    roots = np.fromiter((uf.find(i) for i in range(k)), dtype=np.int64, count=k)
    _, labels = np.unique(roots, return_inverse=True)
    sizes = np.bincount(labels)  # vehicle-only component sizes

    degree = np.zeros(k, dtype=np.int64)
    if len(u):
        np.add.at(degree, u, 1)
        np.add.at(degree, v, 1)
    isolated = (degree == 0) & ~near_rsu
    phi = float(isolated.sum()) / k
    theta = float(sizes.max()) / k
    hist_sizes, hist_counts = np.unique(sizes, return_counts=True)
    histogram = {int(s): int(c) for s, c in zip(hist_sizes, hist_counts)}
    return ClusterReport(phi=phi, theta=theta, histogram=histogram,
                         labels=labels, sizes=sizes)

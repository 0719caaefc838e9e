"""Unit-disk connectivity over equipped vehicles: neighbor graph, cluster
metrics (isolated fraction phi, largest-cluster fraction theta) and the
critical range (bottleneck edge of the Euclidean minimum spanning tree).

Links use the closed-ball convention: nodes at distance exactly r are
connected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial import Delaunay, QhullError


@dataclass(frozen=True)
class ConnectivitySnapshot:
    """Equipped-vehicle positions at one sampled timestep."""

    time: float
    ids: np.ndarray        # (k,) int
    xy: np.ndarray         # (k, 2) float, meters
    r: float               # connectivity range, meters

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError(f"connectivity range must be positive, got {self.r}")
        if self.xy.size and not np.isfinite(self.xy).all():
            raise ValueError("snapshot contains non-finite coordinates")

    @property
    def k(self) -> int:
        return len(self.ids)


@dataclass
class ClusterReport:
    phi: float
    theta: float
    histogram: dict[int, int]          # cluster size -> count of clusters
    labels: np.ndarray = field(repr=False)  # (k,) component label per node
    sizes: np.ndarray = field(repr=False)   # component label -> size

    @property
    def largest(self) -> int:
        return int(self.sizes.max()) if self.sizes.size else 0


class UnionFind:
    """Array union-find with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


def build_graph(snap: ConnectivitySnapshot) -> tuple[np.ndarray, np.ndarray]:
    """Edge lists (u, v) with u < v for all pairs at distance <= r.

    Uses uniform grid bucketing with cell size r, so the cost is O(k + m)
    in expectation rather than all-pairs.
    """
    xy, r = snap.xy, snap.r
    k = len(xy)
    if k < 2:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    cells: dict[tuple[int, int], list[int]] = {}
    cx = np.floor(xy[:, 0] / r).astype(np.int64)
    cy = np.floor(xy[:, 1] / r).astype(np.int64)
    for i in range(k):
        cells.setdefault((int(cx[i]), int(cy[i])), []).append(i)

    us: list[np.ndarray] = []
    vs: list[np.ndarray] = []
    r2 = r * r
    # forward half-neighborhood so each unordered cell pair is visited once
    forward = ((1, -1), (1, 0), (1, 1), (0, 1))
    for cell, members in cells.items():
        a = np.asarray(members)
        pa = xy[a]
        if len(a) > 1:
            d2 = ((pa[:, None, :] - pa[None, :, :]) ** 2).sum(-1)
            iu, ju = np.triu_indices(len(a), k=1)
            keep = d2[iu, ju] <= r2
            us.append(a[iu[keep]])
            vs.append(a[ju[keep]])
        for dx, dy in forward:
            other = cells.get((cell[0] + dx, cell[1] + dy))
            if other is None:
                continue
            b = np.asarray(other)
            d2 = ((pa[:, None, :] - xy[b][None, :, :]) ** 2).sum(-1)
            ii, jj = np.nonzero(d2 <= r2)
            us.append(a[ii])
            vs.append(b[jj])
    if not us:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    u = np.concatenate(us)
    v = np.concatenate(vs)
    swap = u > v
    u[swap], v[swap] = v[swap].copy(), u[swap].copy()
    return u, v


def cluster(snap: ConnectivitySnapshot,
            edges: tuple[np.ndarray, np.ndarray] | None = None) -> ClusterReport | None:
    """Connected-component metrics via union-find; None on an empty snapshot.

    A single-node snapshot degenerately reports phi = theta = 1.
    """
    k = snap.k
    if k == 0:
        return None
    u, v = edges if edges is not None else build_graph(snap)
    uf = UnionFind(k)
    for a, b in zip(u.tolist(), v.tolist()):
        uf.union(a, b)
    roots = np.fromiter((uf.find(i) for i in range(k)), dtype=np.int64, count=k)
    _, labels = np.unique(roots, return_inverse=True)
    sizes = np.bincount(labels)
    degree = np.zeros(k, dtype=np.int64)
    if len(u):
        np.add.at(degree, u, 1)
        np.add.at(degree, v, 1)
    phi = float((degree == 0).sum()) / k
    theta = float(sizes.max()) / k
    hist_sizes, hist_counts = np.unique(sizes, return_counts=True)
    histogram = {int(s): int(c) for s, c in zip(hist_sizes, hist_counts)}
    return ClusterReport(phi=phi, theta=theta, histogram=histogram,
                         labels=labels, sizes=sizes)


def _mst_bottleneck_prim(xy: np.ndarray) -> float:
    """O(k^2) Prim fallback for degenerate point sets."""
    k = len(xy)
    in_tree = np.zeros(k, dtype=bool)
    in_tree[0] = True
    best = np.linalg.norm(xy - xy[0], axis=1)
    best[0] = np.inf
    bottleneck = 0.0
    for _ in range(k - 1):
        j = int(np.argmin(np.where(in_tree, np.inf, best)))
        bottleneck = max(bottleneck, float(best[j]))
        in_tree[j] = True
        best = np.minimum(best, np.linalg.norm(xy - xy[j], axis=1))
    return bottleneck


def critical_range(snap: ConnectivitySnapshot) -> float | None:
    """Longest edge of the Euclidean MST: the minimal r making the unit-disk
    graph connected.  None for fewer than two nodes."""
    if snap.k < 2:
        return None
    pts = np.unique(snap.xy, axis=0)
    if len(pts) == 1:
        return 0.0
    if len(pts) == 2:
        return float(np.linalg.norm(pts[0] - pts[1]))
    # EMST edges are a subset of the Delaunay triangulation; qhull rejects
    # degenerate (collinear) inputs, for which Prim on all pairs is cheap.
    try:
        tri = Delaunay(pts)
    except QhullError:
        return _mst_bottleneck_prim(pts)
    ii = tri.simplices[:, [0, 1, 2]].ravel()
    jj = tri.simplices[:, [1, 2, 0]].ravel()
    w = np.linalg.norm(pts[ii] - pts[jj], axis=1)
    g = coo_matrix((w, (ii, jj)), shape=(len(pts), len(pts)))
    tree = minimum_spanning_tree(g)
    return float(tree.data.max())


def thin_by_penetration(xy: np.ndarray, rho: float, rng: np.random.Generator) -> np.ndarray:
    """Bernoulli(rho) equipped mask over a point set; rho = 1 keeps everything.

    In the traffic simulation the equipped flag is drawn once at spawn time
    with this same rule; here it serves static point processes.
    """
    if not 0 < rho <= 1:
        raise ValueError(f"market penetration must be in (0, 1], got {rho}")
    k = len(xy)
    if rho == 1.0:
        return np.ones(k, dtype=bool)
    return rng.random(k) < rho


def snapshot_from_points(xy: np.ndarray, r: float, time: float = 0.0,
                         ids: np.ndarray | None = None) -> ConnectivitySnapshot:
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    if ids is None:
        ids = np.arange(len(xy))
    return ConnectivitySnapshot(time=time, ids=np.asarray(ids), xy=xy, r=float(r))

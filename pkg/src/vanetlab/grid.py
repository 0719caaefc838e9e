"""Hash-shaped urban grid: n horizontal and n vertical roads with entry/exit
endpoints one segment beyond the outermost intersections.

Node keys are tuples: ('I', col, row) for intersections, ('E', side, k) for
endpoints with side in {'W','E','S','N'} and k the road index.  Streets have
zero width, so both directed lanes of a road map onto the same geometric line.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

NodeKey = tuple

# heading -> heading of the approach arriving from the vehicle's right
RIGHT_OF = {"E": "N", "N": "W", "W": "S", "S": "E"}

_HEADING_VEC = {"E": (1.0, 0.0), "W": (-1.0, 0.0), "N": (0.0, 1.0), "S": (0.0, -1.0)}


class SegmentClass(enum.Enum):
    PERIPHERAL = "peripheral"
    CENTRAL = "central"


@dataclass(frozen=True)
class Lane:
    """One directed lane.  Geometry is start + offset * (ux, uy), offset in [0, L]."""

    id: int
    segment: int
    start: NodeKey
    end: NodeKey
    axis: str      # 'H' or 'V'
    heading: str   # 'E', 'W', 'N', 'S'
    x0: float
    y0: float
    ux: float
    uy: float


@dataclass(frozen=True)
class Segment:
    id: int
    node_a: NodeKey
    node_b: NodeKey
    axis: str
    peripheral: bool
    lanes: tuple  # (forward lane id, reverse lane id)


@dataclass(frozen=True)
class LanePosition:
    lane: int
    offset: float


class RoadNetwork:
    """Immutable grid topology with O(1) adjacency queries.

    Build with :func:`build_grid`.  For dimension n and segment length L the
    network has n*n intersections, 4n endpoints, 2n(n+1) undirected segments
    (4n peripheral) and twice as many directed lanes.
    """

    def __init__(self, n: int, segment_length: float):
        if n < 2:
            raise ValueError(f"grid dimension must be >= 2, got {n}")
        if not segment_length > 0:
            raise ValueError(f"segment length must be positive, got {segment_length}")
        self.n = n
        self.L = float(segment_length)

        self.node_xy: dict[NodeKey, tuple[float, float]] = {}
        self.lanes: list[Lane] = []
        self.segments: list[Segment] = []
        self.endpoints: list[NodeKey] = []
        self.entry_lane: dict[NodeKey, int] = {}   # endpoint -> lane leaving it
        self.exit_lane: dict[NodeKey, int] = {}    # endpoint -> lane arriving at it
        self.lanes_in: dict[NodeKey, list[int]] = {}
        self.lanes_out: dict[NodeKey, list[int]] = {}

        L = self.L
        for i in range(n):
            for j in range(n):
                self._add_node(("I", i, j), i * L, j * L)
        for j in range(n):  # horizontal road j: W and E endpoints
            self._add_node(("E", "W", j), -L, j * L)
            self._add_node(("E", "E", j), n * L, j * L)
        for i in range(n):  # vertical road i: S and N endpoints
            self._add_node(("E", "S", i), i * L, -L)
            self._add_node(("E", "N", i), i * L, n * L)
        self.endpoints = [("E", "W", j) for j in range(n)] + \
                         [("E", "E", j) for j in range(n)] + \
                         [("E", "S", i) for i in range(n)] + \
                         [("E", "N", i) for i in range(n)]

        for j in range(n):
            chain = [("E", "W", j)] + [("I", i, j) for i in range(n)] + [("E", "E", j)]
            self._add_road(chain, axis="H")
        for i in range(n):
            chain = [("E", "S", i)] + [("I", i, j) for j in range(n)] + [("E", "N", i)]
            self._add_road(chain, axis="V")

        self._build_adjacency()

    # -- construction helpers ------------------------------------------------

    def _add_node(self, key: NodeKey, x: float, y: float) -> None:
        self.node_xy[key] = (x, y)
        self.lanes_in[key] = []
        self.lanes_out[key] = []

    def _add_road(self, chain: list[NodeKey], axis: str) -> None:
        for a, b in zip(chain, chain[1:]):
            seg_id = len(self.segments)
            peripheral = a[0] == "E" or b[0] == "E"
            fwd = self._add_lane(seg_id, a, b, axis)
            rev = self._add_lane(seg_id, b, a, axis)
            self.segments.append(Segment(seg_id, a, b, axis, peripheral, (fwd, rev)))

    def _add_lane(self, seg_id: int, start: NodeKey, end: NodeKey, axis: str) -> int:
        x0, y0 = self.node_xy[start]
        x1, y1 = self.node_xy[end]
        ux, uy = (x1 - x0) / self.L, (y1 - y0) / self.L
        heading = {(1, 0): "E", (-1, 0): "W", (0, 1): "N", (0, -1): "S"}[(round(ux), round(uy))]
        lane = Lane(len(self.lanes), seg_id, start, end, axis, heading, x0, y0, ux, uy)
        self.lanes.append(lane)
        self.lanes_out[start].append(lane.id)
        self.lanes_in[end].append(lane.id)
        if start[0] == "E":
            self.entry_lane[start] = lane.id
        if end[0] == "E":
            self.exit_lane[end] = lane.id
        return lane.id

    def _build_adjacency(self) -> None:
        self.lane_reverse = [0] * len(self.lanes)
        for seg in self.segments:
            f, r = seg.lanes
            self.lane_reverse[f] = r
            self.lane_reverse[r] = f
        # successors exclude the reverse lane (no U-turns)
        self.lane_successors = [
            [s for s in self.lanes_out[lane.end] if s != self.lane_reverse[lane.id]]
            for lane in self.lanes
        ]
        # per intersection: heading -> id of the approach lane arriving with it
        self.approach_by_heading: dict[NodeKey, dict[str, int]] = {}
        for node in self.node_xy:
            if node[0] == "I":
                self.approach_by_heading[node] = {
                    self.lanes[lid].heading: lid for lid in self.lanes_in[node]
                }

    # -- queries ---------------------------------------------------------------

    def plane_coords(self, pos: LanePosition) -> tuple[float, float]:
        if not 0 <= pos.lane < len(self.lanes):
            raise KeyError(f"unknown lane id {pos.lane}")
        if not -1e-9 <= pos.offset <= self.L + 1e-9:
            raise ValueError(f"offset {pos.offset} outside [0, {self.L}]")
        lane = self.lanes[pos.lane]
        return lane.x0 + lane.ux * pos.offset, lane.y0 + lane.uy * pos.offset

    def classify_segment(self, seg_id: int) -> SegmentClass:
        if not 0 <= seg_id < len(self.segments):
            raise KeyError(f"unknown segment id {seg_id}")
        return SegmentClass.PERIPHERAL if self.segments[seg_id].peripheral else SegmentClass.CENTRAL

    def right_approach(self, lane_id: int) -> int | None:
        """Approach lane arriving at lane's end intersection from its right, if any."""
        lane = self.lanes[lane_id]
        if lane.end[0] != "I":
            return None
        return self.approach_by_heading[lane.end].get(RIGHT_OF[lane.heading])

    def opposite_endpoint(self, endpoint: NodeKey) -> NodeKey:
        """Endpoint on the same row/column at the other side of the grid."""
        _, side, k = endpoint
        return ("E", {"W": "E", "E": "W", "S": "N", "N": "S"}[side], k)

    def endpoints_on_opposite_side(self, endpoint: NodeKey) -> list[NodeKey]:
        _, side, _ = endpoint
        opp = {"W": "E", "E": "W", "S": "N", "N": "S"}[side]
        return [("E", opp, k) for k in range(self.n)]

    def is_on_roads(self, x: float, y: float, tol: float = 1e-6) -> bool:
        """True if (x, y) lies on some road line of the grid."""
        n, L = self.n, self.L
        if -L - tol <= x <= n * L + tol:
            for j in range(n):
                if abs(y - j * L) <= tol:
                    return True
        if -L - tol <= y <= n * L + tol:
            for i in range(n):
                if abs(x - i * L) <= tol:
                    return True
        return False

    @property
    def intersection_count(self) -> int:
        return self.n * self.n

    @property
    def peripheral_length_m(self) -> float:
        return 4 * self.n * self.L

    @property
    def central_length_m(self) -> float:
        return (len(self.segments) - 4 * self.n) * self.L

    def __repr__(self) -> str:  # pragma: no cover
        return f"RoadNetwork(n={self.n}, L={self.L})"


def build_grid(n: int, segment_length: float) -> RoadNetwork:
    """Build the n x n grid with the given segment length in meters."""
    return RoadNetwork(n, segment_length)

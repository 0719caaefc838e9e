"""Discrete-time microscopic traffic on the grid: Poisson arrivals at the 4n
endpoints, Krauss-style safe-speed car following, intersection control under
three regimes (yield-to-right, synchronized lights, green wave), dynamic
travel-time routing, and density/flow measurement.

A simulation run is strictly single threaded and bit-deterministic for a
given config and seed; independent runs parallelize at the process level.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .connectivity import ConnectivitySnapshot
from .grid import LanePosition, RoadNetwork


class Regime(enum.Enum):
    NL = "NL"   # no lights: yield to traffic from the right
    SL = "SL"   # synchronized lights, identical phase everywhere
    GW = "GW"   # green wave: phases offset along the main direction


class DestinationPolicy(enum.Enum):
    ANTI_DIAMETRIC = "anti"   # exit directly opposite the entry
    RANDOM = "random"         # uniform over the n endpoints on the opposite side


class SimulationError(RuntimeError):
    """Internal invariant breach (vehicle overlap, lost vehicles)."""


@dataclass(frozen=True)
class DriverParams:
    v_max: float = 13.9        # m/s (50 km/h urban)
    a_max: float = 2.6         # m/s^2
    b_max: float = 4.5         # m/s^2
    veh_len: float = 5.0       # m
    sigma: float = 0.5         # Krauss driver imperfection
    min_gap: float = 2.0       # m kept bumper-to-bumper when following
    turn_speed: float = 5.0    # m/s ceiling entering a turn
    yield_window: float = 2.0  # s: right-hand traffic closer than this blocks
    box_half: float = 6.0      # m: intersection box reach along each lane
    insert_gap: float = 2.0    # m clearance required to insert at an entry


@dataclass
class SignalPlan:
    """Per-intersection light program; offsets are zero for SL and derived
    from L / v_max along the horizontal (wave) direction for GW."""

    regime: Regime
    cycle: float = 60.0
    green_h: float = 30.0
    green_v: float = 30.0
    offsets: dict = field(default_factory=dict)   # intersection node -> seconds

    def __post_init__(self):
        if self.cycle <= 0:
            raise ValueError("cycle must be positive")
        if abs(self.green_h + self.green_v - self.cycle) > 1e-9:
            raise ValueError("green_h + green_v must equal the cycle")
        for off in self.offsets.values():
            if not 0 <= off < self.cycle:
                raise ValueError(f"offset {off} outside [0, cycle)")

    def green_axis(self, node, t: float) -> str:
        tau = (t - self.offsets.get(node, 0.0)) % self.cycle
        return "H" if tau < self.green_h else "V"


def make_signal_plan(regime: Regime, net: RoadNetwork, v_max: float = 13.9,
                     cycle: float = 60.0, green_h: float | None = None) -> SignalPlan:
    """Default light program for a regime.

    SL keeps every intersection in phase.  GW offsets successive columns by
    the free-flow hop time L / v_max so eastbound platoons ride one green, and
    holds a longer horizontal green so the wave direction keeps moving.
    """
    if regime is Regime.SL:
        gh = cycle / 2 if green_h is None else green_h
        return SignalPlan(regime, cycle, gh, cycle - gh)
    if regime is Regime.GW:
        gh = cycle * 2 / 3 if green_h is None else green_h
        hop = net.L / v_max
        offsets = {("I", i, j): (i * hop) % cycle
                   for i in range(net.n) for j in range(net.n)}
        return SignalPlan(regime, cycle, gh, cycle - gh, offsets)
    return SignalPlan(regime, cycle, cycle / 2, cycle / 2)


@dataclass(frozen=True)
class DensitySample:
    time: float
    lambda_central: float      # vehicles/km, both directions summed
    lambda_peripheral: float   # vehicles/km
    n_total: int


@dataclass
class SimConfig:
    net: RoadNetwork
    f: float                                  # vehicles/hour per entry lane
    regime: Regime = Regime.NL
    dest: DestinationPolicy = DestinationPolicy.ANTI_DIAMETRIC
    rho: float = 1.0
    dt: float = 1.0
    duration: float = 999.0
    warmup: float = 300.0
    seed: int = 0
    driver: DriverParams = field(default_factory=DriverParams)
    reroute_period: float = 60.0
    signal: SignalPlan | None = None

    def __post_init__(self):
        if self.f < 0:
            raise ValueError(f"arrival rate must be >= 0, got {self.f}")
        if not 0 < self.rho <= 1:
            raise ValueError(f"market penetration must be in (0, 1], got {self.rho}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not self.warmup < self.duration:
            raise ValueError("warmup must be below the duration")
        if self.driver.v_max * self.dt > self.net.L:
            raise ValueError("v_max * dt may not exceed the segment length")
        if self.signal is None:
            self.signal = make_signal_plan(self.regime, self.net, self.driver.v_max)
        if self.signal.regime is not self.regime:
            raise ValueError("signal plan regime does not match the config")


class Vehicle:
    __slots__ = ("id", "lane", "pos", "speed", "route", "route_idx", "equipped",
                 "entry_time", "committed", "commit_t", "next_reroute")

    def __init__(self, vid: int, lane: int, pos: float, speed: float,
                 route: list[int], equipped: bool, entry_time: float):
        self.id = vid
        self.lane = lane
        self.pos = pos          # front-bumper offset on the current lane
        self.speed = speed
        self.route = route
        self.route_idx = 0
        self.equipped = equipped
        self.entry_time = entry_time
        self.committed = False  # past the stop line, box claimed
        self.commit_t = -1.0
        self.next_reroute = entry_time

    def next_lane(self) -> int | None:
        i = self.route_idx + 1
        return self.route[i] if i < len(self.route) else None


class Simulation:
    """One seeded run.  step() advances time by cfg.dt."""

    EMA_ALPHA = 0.1
    EMA_PERIOD = 5.0       # s between speed-estimate updates
    SPEED_FLOOR = 0.25     # m/s floor for travel-time estimates

    def __init__(self, cfg: SimConfig, log_crossings: bool = True):
        self.cfg = cfg
        self.net = cfg.net
        self.rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
        self.t = 0.0
        self._step_no = 0
        self._next_vid = 0
        self.vehicles: dict[int, Vehicle] = {}
        self.lane_vehicles: list[list[Vehicle]] = [[] for _ in self.net.lanes]
        self.entry_queues: dict = {ep: [] for ep in self.net.endpoints}
        self.reservations: dict = {}   # intersection node -> vehicle id
        self.entered = 0
        self.inserted = 0
        self.exited = 0
        self.crossings: list[tuple] = [] if log_crossings else None
        self._arrival_rate = cfg.f / 3600.0 * cfg.dt   # per endpoint per step
        self._ema = np.full(len(self.net.lanes), cfg.driver.v_max)
        self._lane_time = None
        self._route_next: dict[int, list[int]] = {}
        self._lane_predecessors = [[] for _ in self.net.lanes]
        for lid, succs in enumerate(self.net.lane_successors):
            for s in succs:
                self._lane_predecessors[s].append(lid)
        self._peripheral_lane = np.array(
            [self.net.segments[ln.segment].peripheral for ln in self.net.lanes])
        self._rebuild_routing()

    # -- routing ---------------------------------------------------------------

    def _rebuild_routing(self) -> None:
        d = self.cfg.driver
        self._lane_time = self.net.L / np.maximum(self._ema, self.SPEED_FLOOR)
        self._route_next = {}
        for ep in self.net.endpoints:
            dest = self.net.exit_lane[ep]
            self._route_next[dest] = self._reverse_dijkstra(dest)

    def _reverse_dijkstra(self, dest: int) -> list[int]:
        """next-lane choice toward dest for every lane, -1 at dest/unreachable."""
        n_lanes = len(self.net.lanes)
        dist = [math.inf] * n_lanes
        nxt = [-1] * n_lanes
        dist[dest] = self._lane_time[dest]
        heap = [(dist[dest], dest)]
        while heap:
            du, u = heapq.heappop(heap)
            if du > dist[u]:
                continue
            for p in self._lane_predecessors[u]:
                alt = du + self._lane_time[p]
                if alt < dist[p]:
                    dist[p] = alt
                    nxt[p] = u
                    heapq.heappush(heap, (alt, p))
        return nxt

    def _route_from(self, lane: int, dest_lane: int) -> list[int]:
        nxt = self._route_next[dest_lane]
        route = [lane]
        guard = len(self.net.lanes) + 1
        while route[-1] != dest_lane and guard:
            step = nxt[route[-1]]
            if step < 0:
                raise SimulationError(f"no route from lane {lane} to {dest_lane}")
            route.append(step)
            guard -= 1
        return route

    # -- arrival process ---------------------------------------------------------

    def draw_arrival_counts(self) -> np.ndarray:
        """Poisson(f dt) arrivals per entry endpoint for the current step."""
        if self._arrival_rate == 0.0:
            return np.zeros(len(self.net.endpoints), dtype=np.int64)
        return self.rng.poisson(self._arrival_rate, size=len(self.net.endpoints))

    def _choose_destination(self, endpoint) -> int:
        if self.cfg.dest is DestinationPolicy.ANTI_DIAMETRIC:
            target = self.net.opposite_endpoint(endpoint)
        else:
            options = self.net.endpoints_on_opposite_side(endpoint)
            target = options[int(self.rng.integers(len(options)))]
        return self.net.exit_lane[target]

    def spawn_arrivals(self) -> int:
        """Generate this step's arrivals, then insert as many queued vehicles
        as the entry lanes accept.  Blocked arrivals wait in unbounded queues."""
        counts = self.draw_arrival_counts()
        for ep, k in zip(self.net.endpoints, counts.tolist()):
            for _ in range(k):
                dest = self._choose_destination(ep)
                equipped = bool(self.rng.random() < self.cfg.rho)
                self.entry_queues[ep].append((dest, equipped))
        self.entered += int(counts.sum())
        inserted = 0
        d = self.cfg.driver
        spawn_pos = d.veh_len
        for ep in self.net.endpoints:
            queue = self.entry_queues[ep]
            if not queue:
                continue
            lane = self.net.entry_lane[ep]
            occupants = self.lane_vehicles[lane]
            if occupants and occupants[0].pos - d.veh_len < spawn_pos + d.insert_gap:
                continue
            dest, equipped = queue.pop(0)
            if occupants:
                leader = occupants[0]
                gap = leader.pos - d.veh_len - spawn_pos - d.min_gap
                speed = min(d.v_max, self._vsafe(gap, leader.speed))
            else:
                speed = d.v_max
            veh = Vehicle(self._next_vid, lane, spawn_pos, max(0.0, speed),
                          self._route_from(lane, dest), equipped, self.t)
            self._next_vid += 1
            self.vehicles[veh.id] = veh
            occupants.insert(0, veh)
            inserted += 1
        self.inserted += inserted
        return inserted

    # -- car following -------------------------------------------------------------

    def _vsafe(self, gap: float, v_leader: float) -> float:
        """Largest speed from which the follower can always stop behind the
        leader.  The leader's minimum remaining travel assumes its worst
        per-step deceleration (braking plus the dawdle), with the exact
        discrete-time correction v tau / 2."""
        d = self.cfg.driver
        tau = self.cfg.dt
        b_worst = d.b_max + d.sigma * d.a_max
        budget = gap + v_leader * v_leader / (2.0 * b_worst) - 0.5 * v_leader * tau
        if budget <= 0.0:
            return 0.0
        bt = d.b_max * tau
        return -bt + math.sqrt(bt * bt + 2.0 * d.b_max * budget)

    def _leader_beyond(self, veh: Vehicle, lookahead: float):
        """(gap, leader_speed) to the nearest vehicle on downstream route lanes,
        or None if none within the lookahead.  Only called when the vehicle is
        the front of its own lane."""
        L = self.net.L
        dist = L - veh.pos
        i = veh.route_idx + 1
        while dist <= lookahead and i < len(veh.route):
            downstream = self.lane_vehicles[veh.route[i]]
            if downstream:
                leader = downstream[0]
                return dist + leader.pos - self.cfg.driver.veh_len, leader.speed
            dist += L
            i += 1
        return None

    # -- intersection control ----------------------------------------------------

    def _movement(self, veh: Vehicle) -> tuple[str, bool]:
        axis = self.net.lanes[veh.lane].axis
        nxt = veh.next_lane()
        turning = nxt is not None and self.net.lanes[nxt].axis != axis
        return axis, turning

    def _box_occupied(self, node, veh: Vehicle) -> bool:
        """Conflicting traffic in the intersection box.

        With zero street width, perpendicular straight-through streams cross
        at a point and cannot overlap on any lane, so straight movers are
        gated by priority (yield-to-right) and by turn reservations only.
        Turning movements are exclusive: they claim the box via a reservation
        and also wait for it to empty, which keeps two approaches from
        merging onto one exit lane at the same moment."""
        d = self.cfg.driver
        L = self.net.L
        _, my_turn = self._movement(veh)
        held = self.reservations.get(node)
        if held is not None and held[0] != veh.id and (my_turn or held[2]):
            return True
        if not my_turn:
            return False
        for lid in self.net.lanes_in[node]:
            if lid == veh.lane:
                continue
            occ = self.lane_vehicles[lid]
            if occ and occ[-1].pos > L - d.box_half:
                return True
        for lid in self.net.lanes_out[node]:
            occ = self.lane_vehicles[lid]
            if occ and occ[0].pos - d.veh_len < d.box_half:
                return True
        return False

    def _right_blocked(self, veh: Vehicle) -> bool:
        ra = self.net.right_approach(veh.lane)
        if ra is None:
            return False
        d = self.cfg.driver
        L = self.net.L
        horizon = d.yield_window * d.v_max
        for other in reversed(self.lane_vehicles[ra]):
            gap_to_box = L - d.box_half - other.pos
            if gap_to_box > horizon:
                break
            if other.speed > 0.5 and gap_to_box / other.speed <= d.yield_window:
                return True
        return False

    def gate_allows(self, veh: Vehicle) -> bool:
        """Go/Stop verdict at the upcoming intersection for an uncommitted vehicle.

        Lights gate by phase; the box-conflict check applies in every regime
        (lights do not serialize two approaches merging onto one exit lane)."""
        lane = self.net.lanes[veh.lane]
        node = lane.end
        if node[0] != "I":
            return True
        if self.cfg.regime is not Regime.NL and \
                self.cfg.signal.green_axis(node, self.t) != lane.axis:
            return False
        if self._box_occupied(node, veh):
            return False
        return self.cfg.regime is not Regime.NL or not self._right_blocked(veh)

    # -- stepping -----------------------------------------------------------------

    def step(self) -> None:
        cfg, d, L = self.cfg, self.cfg.driver, self.net.L
        dt = cfg.dt

        if self._step_no % max(1, int(round(self.EMA_PERIOD / dt))) == 0:
            self._update_speed_estimates()
        if self._step_no and self._step_no % max(1, int(round(cfg.reroute_period / dt))) == 0:
            self._rebuild_routing()

        order: list[tuple[Vehicle, Vehicle | None]] = []
        n_lanes = len(self.net.lanes)
        rot = self._step_no % n_lanes
        for li in range(n_lanes):
            lane_list = self.lane_vehicles[(li + rot) % n_lanes]
            for idx in range(len(lane_list) - 1, -1, -1):   # front decides first
                same_lane_leader = lane_list[idx + 1] if idx + 1 < len(lane_list) else None
                order.append((lane_list[idx], same_lane_leader))

        dawdle = self.rng.random(len(order)) * (d.sigma * d.a_max * dt)
        lookahead = max(100.0, d.v_max * dt + d.v_max ** 2 / (2 * d.b_max) + 3 * d.veh_len)
        clear_need = d.box_half + d.veh_len + d.min_gap
        new_speeds = np.empty(len(order))

        for i, (veh, same_lane_leader) in enumerate(order):
            if self.t >= veh.next_reroute:
                self._reroute(veh)
                veh.next_reroute += cfg.reroute_period
            v_cap = min(veh.speed + d.a_max * dt, d.v_max)
            if same_lane_leader is not None:
                lead = (same_lane_leader.pos - d.veh_len - veh.pos, same_lane_leader.speed)
            else:
                lead = self._leader_beyond(veh, lookahead)
            if lead is not None:
                v_cap = min(v_cap, self._vsafe(lead[0] - d.min_gap, lead[1]))
            dist_node = L - veh.pos
            nxt = veh.next_lane()
            turning = nxt is not None and self.net.lanes[nxt].axis != self.net.lanes[veh.lane].axis
            if turning:
                v_cap = min(v_cap, self._vsafe_target(dist_node, d.turn_speed))
            lane_end = self.net.lanes[veh.lane].end
            if lane_end[0] == "I" and not veh.committed:
                stop_line = L - d.box_half
                if veh.pos > stop_line - lookahead:
                    # room past the node matters only when the leader is past it
                    if lead is not None and lead[0] + d.veh_len > dist_node:
                        clearance_ok = lead[0] - dist_node >= clear_need
                    else:
                        clearance_ok = True
                    wall_cap = self._vsafe(stop_line - veh.pos, 0.0)
                    if clearance_ok and self.gate_allows(veh):
                        # commit on crossing, or once stopping at the line is no
                        # longer possible; uncommitted vehicles thus always can
                        # stop, so a later Stop verdict never forces a slam
                        if veh.pos + v_cap * dt > stop_line or v_cap > wall_cap:
                            veh.committed = True
                            veh.commit_t = self.t
                            axis, turning = self._movement(veh)
                            self.reservations[lane_end] = (veh.id, axis, turning)
                    else:
                        v_cap = min(v_cap, wall_cap)
            new_speeds[i] = max(0.0, v_cap - dawdle[i])

        for i, (veh, _) in enumerate(order):
            veh.speed = new_speeds[i]
            if veh.speed == 0.0:
                continue
            veh.pos += veh.speed * dt
            while veh.pos >= L:
                nxt = veh.next_lane()
                if nxt is None:
                    self._remove(veh)
                    break
                self._transfer(veh, nxt)

        self._release_reservations()
        self.spawn_arrivals()
        self._verify()
        self._step_no += 1
        self.t = self._step_no * dt

    def _vsafe_target(self, dist: float, v_target: float) -> float:
        d = self.cfg.driver
        bt = d.b_max * self.cfg.dt
        if dist <= 0.0:
            return v_target
        return -bt + math.sqrt(bt * bt + v_target * v_target + 2.0 * d.b_max * dist)

    def _transfer(self, veh: Vehicle, nxt: int) -> None:
        lane = self.net.lanes[veh.lane]
        occupants = self.lane_vehicles[veh.lane]
        if occupants[-1] is not veh:
            raise SimulationError("transfer out of lane order")
        occupants.pop()
        if self.crossings is not None and lane.end[0] == "I":
            self.crossings.append((self.t, veh.commit_t, veh.id, lane.end, lane.axis))
        veh.pos -= self.net.L
        veh.lane = nxt
        veh.route_idx += 1
        veh.committed = False
        self.lane_vehicles[nxt].insert(0, veh)

    def _remove(self, veh: Vehicle) -> None:
        occupants = self.lane_vehicles[veh.lane]
        if occupants[-1] is not veh:
            raise SimulationError("exit out of lane order")
        occupants.pop()
        del self.vehicles[veh.id]
        self.exited += 1

    def _release_reservations(self) -> None:
        if not self.reservations:
            return
        d = self.cfg.driver
        L = self.net.L
        done = []
        for node, (vid, _axis, _turning) in self.reservations.items():
            veh = self.vehicles.get(vid)
            if veh is None:
                done.append(node)
                continue
            lane = self.net.lanes[veh.lane]
            if lane.end == node:
                cleared = False          # still approaching or inside
            elif lane.start == node:
                cleared = veh.pos - d.veh_len > d.box_half
            else:
                cleared = True
            if cleared:
                done.append(node)
        for node in done:
            del self.reservations[node]

    def _reroute(self, veh: Vehicle) -> None:
        dest = veh.route[-1]
        if veh.lane == dest:
            return
        tail = self._route_from(veh.lane, dest)
        veh.route = veh.route[:veh.route_idx] + tail
        # route_idx now points at the current lane, the head of the new tail
        veh.route_idx = len(veh.route) - len(tail)

    def _update_speed_estimates(self) -> None:
        a = self.EMA_ALPHA
        v_free = self.cfg.driver.v_max
        for lid, occupants in enumerate(self.lane_vehicles):
            obs = (sum(v.speed for v in occupants) / len(occupants)) if occupants else v_free
            self._ema[lid] += a * (obs - self._ema[lid])

    def _verify(self) -> None:
        d = self.cfg.driver
        for occupants in self.lane_vehicles:
            for rear, front in zip(occupants, occupants[1:]):
                if front.pos - rear.pos < d.veh_len - 1e-6:
                    raise SimulationError(
                        f"overlap on lane {front.lane}: {rear.id} behind {front.id}")
        queued = sum(len(q) for q in self.entry_queues.values())
        if self.entered != len(self.vehicles) + self.exited + queued:
            raise SimulationError("vehicle conservation violated")

    def run(self, until: float) -> None:
        while self.t < until - 1e-9:
            self.step()

    # -- measurement ---------------------------------------------------------------

    @property
    def queued(self) -> int:
        return sum(len(q) for q in self.entry_queues.values())

    def connectivity_snapshot(self, r: float) -> ConnectivitySnapshot:
        """Positions of the equipped subset; flags were drawn at spawn time."""
        ids, xs, ys = [], [], []
        for veh in self.vehicles.values():
            if veh.equipped:
                x, y = self.net.plane_coords(LanePosition(veh.lane, min(veh.pos, self.net.L)))
                ids.append(veh.id)
                xs.append(x)
                ys.append(y)
        return ConnectivitySnapshot(
            time=self.t, ids=np.asarray(ids, dtype=np.int64),
            xy=np.column_stack([xs, ys]) if ids else np.empty((0, 2)), r=float(r))

    def snapshot_rows(self):
        """(time, id, x, y, speed, equipped) per vehicle, for the CSV export."""
        for vid in sorted(self.vehicles):
            veh = self.vehicles[vid]
            x, y = self.net.plane_coords(LanePosition(veh.lane, min(veh.pos, self.net.L)))
            yield (self.t, veh.id, x, y, veh.speed, int(veh.equipped))

    def add_vehicle(self, lane: int, pos: float, speed: float = 0.0,
                    equipped: bool = True, dest_lane: int | None = None) -> Vehicle:
        """Manual placement for tests and demos; keeps lane lists ordered."""
        if dest_lane is None:
            ln = self.net.lanes[lane]
            dest_lane = lane if ln.end[0] == "E" else \
                self.net.exit_lane[self._downstream_endpoint(lane)]
        veh = Vehicle(self._next_vid, lane, pos, speed,
                      self._route_from(lane, dest_lane), equipped, self.t)
        self._next_vid += 1
        self.vehicles[veh.id] = veh
        occupants = self.lane_vehicles[lane]
        at = sum(1 for o in occupants if o.pos < pos)
        occupants.insert(at, veh)
        self.entered += 1
        self.inserted += 1
        self._verify()
        return veh

    def _downstream_endpoint(self, lane: int):
        seen = set()
        lid = lane
        while self.net.lanes[lid].end[0] != "E":
            succs = self.net.lane_successors[lid]
            straight = [s for s in succs
                        if self.net.lanes[s].heading == self.net.lanes[lid].heading]
            lid = straight[0] if straight else succs[0]
            if lid in seen:
                raise SimulationError("no downstream endpoint")
            seen.add(lid)
        return self.net.lanes[lid].end


def measure_density(sim: Simulation) -> DensitySample:
    """Vehicles/km by segment class, both directions summed."""
    central = peripheral = 0
    for lid, occupants in enumerate(sim.lane_vehicles):
        if sim._peripheral_lane[lid]:
            peripheral += len(occupants)
        else:
            central += len(occupants)
    net = sim.net
    lam_c = central / (net.central_length_m / 1000.0) if net.central_length_m else 0.0
    lam_p = peripheral / (net.peripheral_length_m / 1000.0)
    return DensitySample(time=sim.t, lambda_central=lam_c,
                         lambda_peripheral=lam_p, n_total=len(sim.vehicles))


def mean_speed(sim: Simulation) -> float | None:
    """Arithmetic mean of current speeds; None for an empty network."""
    if not sim.vehicles:
        return None
    return sum(v.speed for v in sim.vehicles.values()) / len(sim.vehicles)

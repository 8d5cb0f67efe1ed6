"""Epoch-driven fleet simulation emitting the canonical event log.

Each epoch: snapshot taxi positions, inject the epoch's arrivals, match the
pending pool, re-validate and apply the assignment, advance every taxi by the
epoch length, then finalize requests whose pickup window can no longer be met.

Movement carries partial-edge progress across epochs, so a taxi on an edge
longer than the epoch can never stall. An epoch's advance consumes the
half-open second range [epoch_start, epoch_start + delta): a stop reached at
exactly the epoch boundary is passed through positionally and its event fires
at offset zero of the next epoch, carrying the boundary timestamp. The
deliberately broken ``snap_to_node`` movement mode (taxis only move when a
whole edge fits in one epoch) is kept as a regression fixture.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .demand import Request, RequestStream
from .errors import InputError, PolicyValidationError
from .matching import (DROPOFF, PICKUP, Assignment, Constraints, MatchPolicy, Stop,
                       StopPlan, make_policy)
from .road_network import RoadNetwork, ZonePartition
from .runlog import (Dropoff, Event, Matched, Pickup, Position, RequestArrived,
                     RunHeader, RunLog, RunLogWriter, UnmatchedFinal, sort_key)

MOVEMENT_MODES = ("continuous", "snap_to_node")


@dataclass(frozen=True)
class SimConfig:
    horizon_epochs: int = 1440
    n_taxis: int = 1000
    constraints: Constraints = Constraints()
    policy: str = "rpd"
    seed: int = 0
    initial_nodes: tuple[int, ...] | None = None  # None: uniform placement by seed
    movement_mode: str = "continuous"
    network_digest: str = ""
    zones_digest: str = ""

    def __post_init__(self):
        if self.horizon_epochs <= 0 or self.n_taxis <= 0:
            raise InputError("horizon_epochs and n_taxis must be positive")
        if self.movement_mode not in MOVEMENT_MODES:
            raise InputError(f"unknown movement_mode {self.movement_mode!r}")
        if self.initial_nodes is not None and len(self.initial_nodes) != self.n_taxis:
            raise InputError("initial_nodes must list one node per taxi")

    def header(self, policy_name: str) -> RunHeader:
        config = {
            "horizon_epochs": self.horizon_epochs,
            "epoch_length_s": self.constraints.epoch_length_s,
            "n_taxis": self.n_taxis,
            "placement": "uniform" if self.initial_nodes is None else "fixed",
            "movement_mode": self.movement_mode,
            "constraints": self.constraints.to_obj(),
        }
        if self.initial_nodes is not None:
            config["initial_nodes"] = list(self.initial_nodes)
        return RunHeader(
            config=config,
            network_digest=self.network_digest,
            zones_digest=self.zones_digest,
            policy=policy_name,
            seed=self.seed,
        )


@dataclass
class TaxiState:
    """One taxi: exact position, obligations, and the realized route ahead.

    ``node`` is the last node reached; ``node_reached_s`` when. While the
    route has nodes ahead the taxi is committed to the edge toward the next
    one, so re-planning starts from that edge's head.
    """

    taxi_id: int
    node: int
    clock_s: int = 0
    node_reached_s: int = 0
    progress_s: int = 0
    onboard: dict[int, int] = field(default_factory=dict)      # rid -> pickup ts
    assigned: set[int] = field(default_factory=set)
    requests: dict[int, Request] = field(default_factory=dict)
    pending_stops: list[tuple[int, Stop]] = field(default_factory=list)  # (abs ts, stop)
    route_nodes: list[tuple[int, int]] = field(default_factory=list)     # (abs ts, node)
    route_i: int = 0

    def effective_start(self) -> tuple[int, int]:
        """(node, seconds from now) where a new route can begin."""
        if self.route_i < len(self.route_nodes) and self.clock_s > self.node_reached_s:
            ts, head = self.route_nodes[self.route_i]
            return head, ts - self.clock_s
        return self.node, 0

    def planning_copy(self) -> "TaxiState":
        return TaxiState(
            taxi_id=self.taxi_id, node=self.node, clock_s=self.clock_s,
            node_reached_s=self.node_reached_s, progress_s=self.progress_s,
            onboard=dict(self.onboard), assigned=set(self.assigned),
            requests=dict(self.requests), pending_stops=list(self.pending_stops),
            route_nodes=self.route_nodes[self.route_i:self.route_i + 1], route_i=0)

    def apply_plan(self, plan: StopPlan, new_requests: dict[int, Request],
                   net: RoadNetwork | None = None) -> None:
        """Install a replacement plan; with a network, realize the full route."""
        start_node, start_offset = self.effective_start()
        if start_offset == 0:
            # departure is now: an idle spell must not count as edge progress
            self.node_reached_s = self.clock_s
        self.assigned |= set(new_requests)
        self.requests.update(new_requests)
        self.pending_stops = [(self.clock_s + eta, stop)
                              for eta, stop in zip(plan.etas, plan.stops)]
        route: list[tuple[int, int]] = []
        if start_offset > 0:
            route.append((self.clock_s + start_offset, start_node))
        if net is not None:
            t = self.clock_s + start_offset
            cur = start_node
            for stop in plan.stops:
                if stop.node == cur:
                    continue
                path = net.shortest_path(cur, stop.node)
                for a, b in zip(path, path[1:]):
                    t += net.edge_cost(a, b)
                    route.append((t, b))
                cur = stop.node
        self.route_nodes = route
        self.route_i = 0


def advance_taxi(taxi: TaxiState, delta_s: int, net: RoadNetwork,
                 mode: str = "continuous") -> list[Event]:
    """Consume delta_s seconds of the taxi's route, emitting stop events at
    their exact second offsets. Mutates the taxi; returns the events."""
    end = taxi.clock_s + delta_s
    events: list[Event] = []

    if mode == "continuous":
        while taxi.pending_stops and taxi.pending_stops[0][0] < end:
            ts, stop = taxi.pending_stops.pop(0)
            events.append(_execute_stop(taxi, stop, ts))
        while taxi.route_i < len(taxi.route_nodes) and taxi.route_nodes[taxi.route_i][0] <= end:
            ts, node = taxi.route_nodes[taxi.route_i]
            taxi.node = node
            taxi.node_reached_s = ts
            taxi.route_i += 1
        if taxi.route_i >= len(taxi.route_nodes):
            taxi.route_nodes = []
            taxi.route_i = 0
            taxi.progress_s = 0
        else:
            taxi.progress_s = end - taxi.node_reached_s
    else:
        # snap_to_node: the historical stuck-taxi bug, kept for regression tests.
        # An edge is traversed only when it fits whole in this epoch's budget,
        # so edges longer than the epoch freeze the taxi forever.
        while taxi.pending_stops and taxi.pending_stops[0][0] <= taxi.clock_s:
            _, stop = taxi.pending_stops.pop(0)
            events.append(_execute_stop(taxi, stop, taxi.clock_s))
        budget = delta_s
        while taxi.route_i < len(taxi.route_nodes):
            ts, node = taxi.route_nodes[taxi.route_i]
            cost = ts - taxi.node_reached_s
            if cost > budget:
                break
            budget -= cost
            taxi.node = node
            taxi.node_reached_s = ts
            taxi.route_i += 1
            while (taxi.pending_stops and taxi.pending_stops[0][0] <= ts
                   and taxi.pending_stops[0][0] < end):
                sched, stop = taxi.pending_stops.pop(0)
                events.append(_execute_stop(taxi, stop, sched))
        if taxi.route_i >= len(taxi.route_nodes):
            taxi.route_nodes = []
            taxi.route_i = 0
        else:
            # re-anchor the remaining schedule to the wall clock so the lag of
            # a frozen taxi never leaks into offsets or event timestamps
            lag = end - taxi.node_reached_s
            if lag > 0:
                taxi.route_nodes = [(ts + lag, n)
                                    for ts, n in taxi.route_nodes[taxi.route_i:]]
                taxi.route_i = 0
                taxi.pending_stops = [(ts + lag, s) for ts, s in taxi.pending_stops]
            taxi.node_reached_s = end
        taxi.progress_s = 0

    taxi.clock_s = end
    return events


def _execute_stop(taxi: TaxiState, stop: Stop, ts: int) -> Event:
    if stop.kind == PICKUP:
        taxi.onboard[stop.request_id] = ts
        taxi.assigned.discard(stop.request_id)
        return Pickup(stop.request_id, taxi.taxi_id, ts)
    taxi.onboard.pop(stop.request_id)
    taxi.requests.pop(stop.request_id)
    return Dropoff(stop.request_id, taxi.taxi_id, ts)


def _verify_assignment(assignment: Assignment, taxis_by_id: dict[int, TaxiState],
                       pending: dict[int, Request], constraints: Constraints,
                       net: RoadNetwork, epoch: int) -> dict[int, tuple[int, ...]]:
    """Re-derive every chosen plan's timing and bounds; the engine trusts no policy.

    Returns recomputed per-stop absolute ETAs (seconds from now) per taxi.
    Raises PolicyValidationError with diagnostics on any violation.
    """
    def fail(msg: str) -> None:
        raise PolicyValidationError(f"epoch {epoch}: {msg}")

    if set(assignment.plans) != set(assignment.groups):
        fail("assignment plans and groups cover different taxis")
    pair_set = {(rid, tid) for tid, group in assignment.groups.items() for rid in group}
    if set(assignment.matches) != pair_set:
        fail("assignment matches disagree with its groups")

    seen: set[int] = set()
    etas: dict[int, tuple[int, ...]] = {}
    for tid in sorted(assignment.plans):
        taxi = taxis_by_id.get(tid)
        if taxi is None:
            fail(f"unknown taxi {tid}")
        group = assignment.groups[tid]
        if not group:
            fail(f"taxi {tid}: empty group")
        for rid in group:
            if rid not in pending:
                fail(f"taxi {tid}: request {rid} is not in the pending pool")
            if rid in seen:
                fail(f"request {rid} matched to more than one taxi")
            seen.add(rid)

        plan = assignment.plans[tid]
        expected = {(DROPOFF, rid) for rid in taxi.onboard}
        for rid in set(taxi.assigned) | set(group):
            expected.add((PICKUP, rid))
            expected.add((DROPOFF, rid))
        actual = [(s.kind, s.request_id) for s in plan.stops]
        if sorted(actual) != sorted(expected):
            fail(f"taxi {tid}: plan stops {actual} do not cover obligations {sorted(expected)}")

        start_node, start_offset = taxi.effective_start()
        if (plan.start_node, plan.start_offset_s) != (start_node, start_offset):
            fail(f"taxi {tid}: plan anchored at {(plan.start_node, plan.start_offset_s)}, "
                 f"taxi is at {(start_node, start_offset)}")

        lookup = dict(taxi.requests)
        lookup.update({rid: pending[rid] for rid in group})
        now = taxi.clock_s
        t = start_offset
        cur = start_node
        onboard_n = len(taxi.onboard)
        picked: dict[int, int] = {}
        times = []
        for stop in plan.stops:
            req = lookup[stop.request_id]
            leg = 0 if stop.node == cur else net.travel_time(cur, stop.node)
            if leg is None:
                fail(f"taxi {tid}: stop {stop} unreachable from node {cur}")
            t += leg
            cur = stop.node
            times.append(t)
            if stop.kind == PICKUP:
                if stop.node != req.pickup:
                    fail(f"taxi {tid}: pickup stop at {stop.node}, request {stop.request_id} "
                         f"boards at {req.pickup}")
                onboard_n += 1
                if onboard_n > constraints.capacity:
                    fail(f"taxi {tid}: occupancy {onboard_n} exceeds capacity")
                if now + t > req.arrival_s(constraints.epoch_length_s) + constraints.max_pickup_delay_s:
                    fail(f"taxi {tid}: request {stop.request_id} picked up too late")
                picked[stop.request_id] = t
            else:
                if stop.node != req.dropoff:
                    fail(f"taxi {tid}: dropoff stop at {stop.node}, request {stop.request_id} "
                         f"alights at {req.dropoff}")
                onboard_n -= 1
                direct = net.travel_time(req.pickup, req.dropoff)
                if stop.request_id in taxi.onboard:
                    detour = (now + t) - taxi.onboard[stop.request_id] - direct
                elif stop.request_id in picked:
                    detour = t - picked[stop.request_id] - direct
                else:
                    fail(f"taxi {tid}: dropoff of {stop.request_id} precedes its pickup")
                if detour > constraints.max_detour_delay_s:
                    fail(f"taxi {tid}: request {stop.request_id} detour {detour}s exceeds bound")
        etas[tid] = tuple(times)
    return etas


def _simulate(config: SimConfig, net: RoadNetwork, partition: ZonePartition,
              demand: RequestStream, policy: MatchPolicy) -> Iterator[list[Event]]:
    """Yield one canonically sorted event block per epoch."""
    delta = config.constraints.epoch_length_s
    horizon = config.horizon_epochs
    for r in demand:
        if not (0 <= r.arrival_epoch < horizon):
            raise InputError(f"request {r.request_id} arrives at epoch {r.arrival_epoch}, "
                             f"outside horizon [0,{horizon})")
        if not (net.has_node(r.pickup) and net.has_node(r.dropoff)):
            raise InputError(f"request {r.request_id} references nodes missing from the network")

    node_ids = net.node_ids
    if config.initial_nodes is not None:
        for node in config.initial_nodes:
            if not net.has_node(node):
                raise InputError(f"initial taxi node {node} is not in the network")
        taxis = [TaxiState(taxi_id=i, node=node)
                 for i, node in enumerate(config.initial_nodes)]
    else:
        rng = np.random.default_rng(config.seed)
        taxis = [TaxiState(taxi_id=i, node=node_ids[int(rng.integers(len(node_ids)))])
                 for i in range(config.n_taxis)]
    taxis_by_id = {t.taxi_id: t for t in taxis}

    pending: dict[int, Request] = {}
    for epoch in range(horizon):
        block: list[Event] = []
        for taxi in taxis:
            block.append(Position(taxi.taxi_id, epoch, taxi.node, taxi.progress_s,
                                  len(taxi.onboard)))
        for r in demand.batch_at(epoch):
            block.append(RequestArrived(r.request_id, r.pickup, r.dropoff, r.arrival_epoch,
                                        r.fare, net.travel_time(r.pickup, r.dropoff)))
            pending[r.request_id] = r

        batch = sorted(pending.values(), key=lambda r: (r.arrival_epoch, r.request_id))
        assignment = policy.match(epoch, taxis, batch, config.constraints, net)
        etas = _verify_assignment(assignment, taxis_by_id, pending, config.constraints,
                                  net, epoch)
        for tid in sorted(assignment.plans):
            taxi = taxis_by_id[tid]
            plan = replace(assignment.plans[tid], etas=etas[tid])
            group = {rid: pending[rid] for rid in assignment.groups[tid]}
            taxi.apply_plan(plan, group, net)
            for rid in assignment.groups[tid]:
                del pending[rid]
                block.append(Matched(rid, tid, epoch))

        for taxi in taxis:
            block.extend(advance_taxi(taxi, delta, net, config.movement_mode))

        expired = [rid for rid, r in pending.items()
                   if (epoch + 1) * delta > r.arrival_s(delta) + config.constraints.max_pickup_delay_s]
        for rid in expired:
            block.append(UnmatchedFinal(rid, epoch))
            del pending[rid]

        block.sort(key=lambda e: sort_key(e, delta))
        yield block


def run(config: SimConfig, net: RoadNetwork, partition: ZonePartition,
        demand: RequestStream, policy: MatchPolicy | None = None) -> RunLog:
    """Run a full day in memory; deterministic for fixed inputs."""
    policy = policy or make_policy(config.policy)
    events: list[Event] = []
    for block in _simulate(config, net, partition, demand, policy):
        events.extend(block)
    return RunLog(config.header(policy.name), events)


def run_to_file(config: SimConfig, net: RoadNetwork, partition: ZonePartition,
                demand: RequestStream, path, policy: MatchPolicy | None = None) -> RunHeader:
    """Stream a run to disk epoch by epoch; memory stays O(epoch block)."""
    policy = policy or make_policy(config.policy)
    header = config.header(policy.name)
    with RunLogWriter(path, header) as writer:
        for block in _simulate(config, net, partition, demand, policy):
            writer.append_block(block)
    return header


# -- log validation -----------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    events_checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def by_kind(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for v in self.violations:
            out[v.kind] = out.get(v.kind, 0) + 1
        return out


def validate_runlog(log: RunLog, net: RoadNetwork | None = None,
                    constraints: Constraints | None = None) -> ValidationReport:
    """Replay a log and report every constraint or lifecycle violation.

    With a network the replay also checks logged direct times and position
    continuity (a taxi may never move farther per epoch than the epoch allows).
    """
    constraints = constraints or Constraints.from_obj(log.header.config["constraints"])
    delta = constraints.epoch_length_s
    report = ValidationReport()

    def flag(kind: str, message: str) -> None:
        report.violations.append(Violation(kind, message))

    requests: dict[int, dict] = {}
    onboard: dict[int, set[int]] = {}
    last_pos: dict[int, Position] = {}
    pos_count: dict[int, dict[int, int]] = {}
    last_key = None

    for event in log:
        report.events_checked += 1
        key = sort_key(event, delta)
        if last_key is not None and key < last_key:
            flag("event-order", f"{event} sorts before its predecessor")
        last_key = key

        if isinstance(event, RequestArrived):
            if event.request_id in requests:
                flag("duplicate-arrival", f"request {event.request_id} arrived twice")
                continue
            if not 0 <= event.arrival_epoch < log.header.horizon_epochs:
                flag("epoch-out-of-range",
                     f"request {event.request_id} arrives at epoch {event.arrival_epoch} "
                     f"outside the horizon")
                continue
            if net is not None:
                direct = net.travel_time(event.pickup, event.dropoff)
                if direct != event.direct_s:
                    flag("direct-mismatch",
                         f"request {event.request_id}: logged direct {event.direct_s}s, "
                         f"network says {direct}")
            requests[event.request_id] = {
                "arrival_epoch": event.arrival_epoch, "direct_s": event.direct_s,
                "state": "arrived", "taxi": None, "pickup_ts": None,
            }
        elif isinstance(event, Matched):
            rec = requests.get(event.request_id)
            if rec is None:
                flag("match-unknown-request", f"matched unknown request {event.request_id}")
                continue
            if rec["state"] != "arrived":
                flag("duplicate-match",
                     f"request {event.request_id} matched while {rec['state']}")
                continue
            rec["state"] = "matched"
            rec["taxi"] = event.taxi_id
        elif isinstance(event, Pickup):
            rec = requests.get(event.request_id)
            if rec is None or rec["state"] != "matched" or rec["taxi"] != event.taxi_id:
                flag("pickup-without-match",
                     f"pickup of request {event.request_id} by taxi {event.taxi_id} "
                     f"without a preceding match")
                continue
            rec["state"] = "picked"
            rec["pickup_ts"] = event.timestamp_s
            delay = event.timestamp_s - rec["arrival_epoch"] * delta
            if delay > constraints.max_pickup_delay_s:
                flag("pickup-delay",
                     f"request {event.request_id}: pickup delay {delay}s exceeds "
                     f"{constraints.max_pickup_delay_s}s")
            aboard = onboard.setdefault(event.taxi_id, set())
            aboard.add(event.request_id)
            if len(aboard) > constraints.capacity:
                flag("capacity",
                     f"taxi {event.taxi_id} carries {len(aboard)} passengers at "
                     f"t={event.timestamp_s}s (capacity {constraints.capacity})")
        elif isinstance(event, Dropoff):
            rec = requests.get(event.request_id)
            if rec is None or rec["state"] != "picked" or rec["taxi"] != event.taxi_id:
                flag("dropoff-without-pickup",
                     f"dropoff of request {event.request_id} by taxi {event.taxi_id} "
                     f"without a preceding pickup")
                continue
            rec["state"] = "completed"
            detour = event.timestamp_s - rec["pickup_ts"] - rec["direct_s"]
            if detour > constraints.max_detour_delay_s:
                flag("detour-delay",
                     f"request {event.request_id}: detour {detour}s exceeds "
                     f"{constraints.max_detour_delay_s}s")
            onboard.get(event.taxi_id, set()).discard(event.request_id)
        elif isinstance(event, UnmatchedFinal):
            rec = requests.get(event.request_id)
            if rec is None or rec["state"] != "arrived":
                flag("final-after-match",
                     f"request {event.request_id} finalized unmatched from a matched state")
                continue
            rec["state"] = "unmatched"
        elif isinstance(event, Position):
            if not 0 <= event.taxi_id < log.header.n_taxis:
                flag("unknown-taxi",
                     f"position event for taxi {event.taxi_id} outside the fleet "
                     f"of {log.header.n_taxis}")
                continue
            if not 0 <= event.epoch < log.header.horizon_epochs:
                flag("epoch-out-of-range",
                     f"position event at epoch {event.epoch} outside the horizon")
                continue
            counts = pos_count.setdefault(event.taxi_id, {})
            counts[event.epoch] = counts.get(event.epoch, 0) + 1
            expected_onboard = len(onboard.get(event.taxi_id, ()))
            if event.n_onboard != expected_onboard:
                flag("onboard-mismatch",
                     f"taxi {event.taxi_id} epoch {event.epoch}: position reports "
                     f"{event.n_onboard} onboard, replay says {expected_onboard}")
            prev = last_pos.get(event.taxi_id)
            if prev is not None and net is not None:
                if not _move_feasible(prev, event, delta, net):
                    flag("teleport",
                         f"taxi {event.taxi_id}: {prev.node_id}+{prev.progress_s}s -> "
                         f"{event.node_id}+{event.progress_s}s is impossible in {delta}s")
            last_pos[event.taxi_id] = event

    horizon = log.header.horizon_epochs
    for tid in range(log.header.n_taxis):
        counts = pos_count.get(tid, {})
        missing = [e for e in range(horizon) if counts.get(e, 0) != 1]
        if missing:
            flag("missing-position",
                 f"taxi {tid}: epochs without exactly one position event: {missing[:5]}")
    return report


def _move_feasible(prev: Position, cur: Position, delta: int, net: RoadNetwork) -> bool:
    """Could a taxi reach cur from prev in one epoch over the network?"""
    if cur.progress_s > 0 and not any(c > cur.progress_s for _, c in net.neighbors(cur.node_id)):
        return False
    budget = delta - cur.progress_s
    if prev.progress_s == 0:
        tt = net.travel_time(prev.node_id, cur.node_id)
        return tt is not None and tt <= budget
    for head, cost in net.neighbors(prev.node_id):
        if cost <= prev.progress_s:
            continue
        tt = net.travel_time(head, cur.node_id)
        if tt is not None and (cost - prev.progress_s) + tt <= budget:
            return True
    return False

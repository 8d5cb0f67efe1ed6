"""Batch request-to-taxi matching under capacity and delay constraints.

Two shipped policies:

- ``rpd``: generates every feasible request group per taxi, then solves an
  exact integer assignment (branch and bound) maximizing matched requests
  first and penalizing added detour second.
- ``greedy``: assigns requests one at a time to the taxi with the smallest
  detour increase, the fast-but-weaker sequential baseline.

All searches are deterministic: candidate and stop orders are fixed by ids,
ties break lexicographically, and the arithmetic is integer throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import TYPE_CHECKING, Iterable, Mapping, Protocol, Sequence

from .demand import Request
from .errors import InputError
from .road_network import RoadNetwork

if TYPE_CHECKING:
    from .simulator import TaxiState

PICKUP = "pickup"
DROPOFF = "dropoff"


@dataclass(frozen=True)
class Constraints:
    """Capacity and time bounds every plan must satisfy."""

    capacity: int = 4                 # max passengers sharing one taxi
    max_pickup_delay_s: int = 300     # arrival -> pickup bound
    max_detour_delay_s: int = 600     # extra ride time bound per request
    epoch_length_s: int = 60          # decision epoch duration

    def __post_init__(self):
        for name in ("capacity", "max_pickup_delay_s", "max_detour_delay_s", "epoch_length_s"):
            if getattr(self, name) <= 0:
                raise InputError(f"constraint {name} must be positive")

    def to_obj(self) -> dict:
        return {
            "capacity": self.capacity,
            "max_pickup_delay_s": self.max_pickup_delay_s,
            "max_detour_delay_s": self.max_detour_delay_s,
            "epoch_length_s": self.epoch_length_s,
        }

    @classmethod
    def from_obj(cls, obj: Mapping) -> "Constraints":
        return cls(capacity=int(obj["capacity"]),
                   max_pickup_delay_s=int(obj["max_pickup_delay_s"]),
                   max_detour_delay_s=int(obj["max_detour_delay_s"]),
                   epoch_length_s=int(obj["epoch_length_s"]))


@dataclass(frozen=True)
class Stop:
    node: int
    kind: str  # PICKUP or DROPOFF
    request_id: int


def stop_key(stop: Stop) -> tuple[int, int, int]:
    return (stop.node, 0 if stop.kind == PICKUP else 1, stop.request_id)


@dataclass(frozen=True)
class StopPlan:
    """An ordered stop sequence with per-stop ETAs in seconds from now.

    ETAs include the time to finish the taxi's in-flight edge, so the plan is
    realizable from the taxi's exact current position.
    """

    stops: tuple[Stop, ...]
    etas: tuple[int, ...]
    start_node: int
    start_offset_s: int


@dataclass(frozen=True)
class Candidate:
    candidate_id: int
    taxi_id: int
    group: tuple[int, ...]  # request ids, ascending
    plan: StopPlan
    added_detour_s: int


@dataclass(frozen=True)
class Assignment:
    """Chosen matches plus the full replacement plan for every affected taxi."""

    matches: tuple[tuple[int, int], ...] = ()        # (request_id, taxi_id), by request_id
    plans: dict[int, StopPlan] = field(default_factory=dict)
    groups: dict[int, tuple[int, ...]] = field(default_factory=dict)
    added_detours: dict[int, int] = field(default_factory=dict)

    def objective(self, weights: "Weights") -> int:
        matched = sum(len(g) for g in self.groups.values())
        detour = sum(self.added_detours.values())
        return weights.reward_per_match * matched - weights.detour_penalty * detour

    @property
    def n_matched(self) -> int:
        return len(self.matches)


@dataclass(frozen=True)
class Weights:
    """Assignment objective weights; integers keep the optimum exactly comparable."""

    reward_per_match: int
    detour_penalty: int = 1

    @classmethod
    def default_for(cls, constraints: Constraints) -> "Weights":
        # one extra match always beats any feasible detour saving
        return cls(reward_per_match=10 * constraints.max_detour_delay_s, detour_penalty=1)


def feasible_insertion(taxi: "TaxiState", new_requests: Iterable[Request],
                       constraints: Constraints, net: RoadNetwork
                       ) -> tuple[StopPlan, int] | None:
    """Best full re-sequencing of the taxi's obligations plus the new requests.

    Searches every stop ordering consistent with precedence (pickups before
    their dropoffs, onboard passengers have no pickup stop), pruning orderings
    that break occupancy or delay bounds. Since travel times satisfy the
    triangle inequality, a stop that misses its bound now misses it in every
    extension of the current prefix, so the whole prefix is abandoned at the
    first violation. Returns the minimum-added-detour plan (ties broken by
    lexicographic stop sequence) or None when no ordering is feasible.
    """
    new_list = sorted(new_requests, key=lambda r: r.request_id)
    if len(taxi.onboard) + len(taxi.assigned) + len(new_list) > constraints.capacity:
        return None

    lookup: dict[int, Request] = dict(taxi.requests)
    for r in new_list:
        lookup[r.request_id] = r

    stops: list[Stop] = []
    for rid in taxi.onboard:
        stops.append(Stop(lookup[rid].dropoff, DROPOFF, rid))
    for rid in taxi.assigned:
        stops.append(Stop(lookup[rid].pickup, PICKUP, rid))
        stops.append(Stop(lookup[rid].dropoff, DROPOFF, rid))
    for r in new_list:
        stops.append(Stop(r.pickup, PICKUP, r.request_id))
        stops.append(Stop(r.dropoff, DROPOFF, r.request_id))
    stops.sort(key=stop_key)

    start_node, start_offset = taxi.effective_start()
    now = taxi.clock_s
    cap = constraints.capacity
    max_pickup = constraints.max_pickup_delay_s
    max_detour = constraints.max_detour_delay_s
    epoch_len = constraints.epoch_length_s

    directs = {rid: net.travel_time(r.pickup, r.dropoff) for rid, r in lookup.items()}
    deadlines = {rid: r.arrival_s(epoch_len) + max_pickup for rid, r in lookup.items()}

    best_detour = [None]  # type: list
    best_seq: list[tuple[Stop, int]] = []

    n_stops = len(stops)
    seq: list[tuple[Stop, int]] = []

    # orderings revisit the same legs constantly; memoize per call
    leg_cache: dict[tuple[int, int], int | None] = {}

    def leg_time(u: int, v: int) -> int | None:
        if u == v:
            return 0
        key = (u, v)
        if key in leg_cache:
            return leg_cache[key]
        value = net.travel_time(u, v)
        leg_cache[key] = value
        return value

    def search(cur_node: int, t: int, onboard_n: int, picked: dict[int, int],
               used: int, detour_sum: int) -> None:
        if len(seq) == n_stops:
            if best_detour[0] is None or detour_sum < best_detour[0]:
                best_detour[0] = detour_sum
                best_seq[:] = seq
            return
        # detour increments are nonnegative, and the first-found optimum is the
        # lexicographically smallest, so matching the bound cannot improve
        if best_detour[0] is not None and detour_sum >= best_detour[0]:
            return
        for i, stop in enumerate(stops):
            if used & (1 << i):
                continue
            rid = stop.request_id
            if stop.kind == PICKUP:
                if onboard_n >= cap:
                    continue  # may unblock after a dropoff
            else:
                if rid not in picked and rid not in taxi.onboard:
                    continue  # pickup not placed yet
            leg = leg_time(cur_node, stop.node)
            if leg is None:
                return  # stays unreachable along any continuation
            t_stop = t + leg
            if stop.kind == PICKUP:
                if now + t_stop > deadlines[rid]:
                    return  # later placement is never earlier
                seq.append((stop, t_stop))
                picked[rid] = t_stop
                search(stop.node, t_stop, onboard_n + 1, picked, used | (1 << i), detour_sum)
                del picked[rid]
                seq.pop()
            else:
                if rid in taxi.onboard:
                    detour = (now + t_stop) - taxi.onboard[rid] - directs[rid]
                else:
                    detour = t_stop - picked[rid] - directs[rid]
                if detour > max_detour:
                    return  # detour only grows with time
                seq.append((stop, t_stop))
                search(stop.node, t_stop, onboard_n - 1, picked, used | (1 << i),
                       detour_sum + detour)
                seq.pop()

    search(start_node, start_offset, len(taxi.onboard), {}, 0, 0)
    if best_detour[0] is None:
        return None

    plan = StopPlan(stops=tuple(s for s, _ in best_seq),
                    etas=tuple(t for _, t in best_seq),
                    start_node=start_node, start_offset_s=start_offset)
    added = best_detour[0] - planned_detour_sum(taxi, net)
    return plan, added


def planned_detour_sum(taxi: "TaxiState", net: RoadNetwork) -> int:
    """Total planned detour of the taxi's current obligations under its current plan."""
    drop_ts = {}
    pick_ts = {}
    for ts, stop in taxi.pending_stops:
        if stop.kind == DROPOFF:
            drop_ts[stop.request_id] = ts
        else:
            pick_ts[stop.request_id] = ts
    total = 0
    for rid, ts in drop_ts.items():
        direct = net.travel_time(taxi.requests[rid].pickup, taxi.requests[rid].dropoff)
        pickup = taxi.onboard.get(rid, pick_ts.get(rid))
        total += ts - pickup - direct
    return total


def _pickup_budget_filter(taxi: "TaxiState", request: Request, constraints: Constraints,
                          reach: Mapping[int, int] | None) -> bool:
    """Cheap sound prefilter: can the taxi possibly reach the pickup in time?"""
    budget = request.arrival_s(constraints.epoch_length_s) + constraints.max_pickup_delay_s - taxi.clock_s
    if budget < 0:
        return False
    if reach is None:
        return True
    start_node, start_offset = taxi.effective_start()
    via = reach.get(start_node)
    return via is not None and start_offset + via <= budget


def generate_candidates(taxis: Sequence["TaxiState"], batch: Sequence[Request],
                        constraints: Constraints, net: RoadNetwork,
                        max_group_size: int = 3) -> list[Candidate]:
    """Every feasible (taxi, request group) pair up to the group-size cap.

    Groups grow incrementally: a size-k group is only attempted when all its
    size-(k-1) subsets were feasible for that taxi, which is exact because
    dropping requests from a feasible plan never breaks its bounds.
    """
    by_rid = {r.request_id: r for r in batch}
    reach: dict[int, dict[int, int]] = {}
    for r in batch:
        if r.pickup not in reach:
            reach[r.pickup] = net.nodes_reaching(r.pickup, constraints.max_pickup_delay_s)

    raw: list[tuple[int, tuple[int, ...], StopPlan, int]] = []
    for taxi in sorted(taxis, key=lambda t: t.taxi_id):
        room = constraints.capacity - len(taxi.onboard) - len(taxi.assigned)
        if room <= 0:
            continue
        singles: dict[int, tuple[StopPlan, int]] = {}
        for r in batch:
            if not _pickup_budget_filter(taxi, r, constraints, reach[r.pickup]):
                continue
            result = feasible_insertion(taxi, (r,), constraints, net)
            if result is not None:
                singles[r.request_id] = result
                raw.append((taxi.taxi_id, (r.request_id,), result[0], result[1]))
        level = {frozenset((rid,)) for rid in singles}
        rids = sorted(singles)
        for size in range(2, min(room, max_group_size) + 1):
            if not level:
                break
            next_level = set()
            for combo in combinations(rids, size):
                group = frozenset(combo)
                if any(group - {rid} not in level for rid in combo):
                    continue
                result = feasible_insertion(taxi, [by_rid[rid] for rid in combo],
                                            constraints, net)
                if result is not None:
                    next_level.add(group)
                    raw.append((taxi.taxi_id, combo, result[0], result[1]))
            level = next_level

    raw.sort(key=lambda item: (item[0], item[1]))
    return [Candidate(i, taxi_id, group, plan, detour)
            for i, (taxi_id, group, plan, detour) in enumerate(raw)]


def solve_batch_ilp(candidates: Sequence[Candidate], batch: Sequence[Request],
                    weights: Weights) -> Assignment:
    """Exact maximum of sum(reward * group size - penalty * added detour).

    Branch and bound over candidates in id order, at most one candidate per
    taxi and per request; returns the lexicographically smallest candidate-id
    set among the optima.

    Negative-value candidates can never sit in an optimum (the constraints
    are pure "at most one", so dropping one only helps) and are filtered out.
    When every remaining value is strictly positive — always true under the
    default weights — no optimum is a prefix of another, so include-first
    depth-first search visits tied optima in exactly lexicographic order: the
    first optimum found is the answer and whole tied subtrees prune away.
    With zero-value candidates (custom weights) the search falls back to
    strict-only pruning with explicit tie comparison, which stays exact but
    is only meant for desk-scale instances.
    """
    batch_ids = {r.request_id for r in batch}
    for c in candidates:
        unknown = set(c.group) - batch_ids
        if unknown:
            raise InputError(f"candidate {c.candidate_id} references requests outside the batch: {sorted(unknown)}")

    def value_of(c: Candidate) -> int:
        return weights.reward_per_match * len(c.group) - weights.detour_penalty * c.added_detour_s

    cands = sorted((c for c in candidates if value_of(c) >= 0),
                   key=lambda c: c.candidate_id)
    values = [value_of(c) for c in cands]
    all_positive = all(v > 0 for v in values)

    suffix = [0] * (len(cands) + 1)
    for i in range(len(cands) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + values[i]

    taxi_bit = {tid: 1 << i for i, tid in enumerate(sorted({c.taxi_id for c in cands}))}
    rid_bit = {rid: 1 << i for i, rid in enumerate(sorted(batch_ids))}
    group_masks = [0] * len(cands)
    for i, c in enumerate(cands):
        for rid in c.group:
            group_masks[i] |= rid_bit[rid]

    best_value = 0
    best_chosen: tuple[int, ...] = ()
    chosen: list[int] = []

    def dfs_first_wins(i: int, value: int, taxis_used: int, rids_used: int) -> None:
        nonlocal best_value, best_chosen
        if value + suffix[i] <= best_value:
            return  # ties in later subtrees are lexicographically larger
        if i == len(cands):
            if value > best_value:
                best_value, best_chosen = value, tuple(chosen)
            return
        c = cands[i]
        tbit = taxi_bit[c.taxi_id]
        if not (taxis_used & tbit) and not (rids_used & group_masks[i]):
            chosen.append(c.candidate_id)
            dfs_first_wins(i + 1, value + values[i], taxis_used | tbit,
                           rids_used | group_masks[i])
            chosen.pop()
        dfs_first_wins(i + 1, value, taxis_used, rids_used)

    def dfs_lex_ties(i: int, value: int, taxis_used: int, rids_used: int) -> None:
        nonlocal best_value, best_chosen
        if value + suffix[i] < best_value:
            return
        if i == len(cands):
            key = tuple(chosen)
            if value > best_value or (value == best_value and key < best_chosen):
                best_value, best_chosen = value, key
            return
        c = cands[i]
        tbit = taxi_bit[c.taxi_id]
        if not (taxis_used & tbit) and not (rids_used & group_masks[i]):
            chosen.append(c.candidate_id)
            dfs_lex_ties(i + 1, value + values[i], taxis_used | tbit,
                         rids_used | group_masks[i])
            chosen.pop()
        dfs_lex_ties(i + 1, value, taxis_used, rids_used)

    if all_positive:
        dfs_first_wins(0, 0, 0, 0)
    else:
        dfs_lex_ties(0, 0, 0, 0)

    by_id = {c.candidate_id: c for c in cands}
    picked = [by_id[cid] for cid in best_chosen]
    matches = sorted((rid, c.taxi_id) for c in picked for rid in c.group)
    return Assignment(matches=tuple(matches),
                      plans={c.taxi_id: c.plan for c in picked},
                      groups={c.taxi_id: c.group for c in picked},
                      added_detours={c.taxi_id: c.added_detour_s for c in picked})


def greedy_sequential_match(taxis: Sequence["TaxiState"], batch: Sequence[Request],
                            constraints: Constraints, net: RoadNetwork) -> Assignment:
    """Sequential baseline: each request goes to the feasible taxi with the
    smallest detour increase (taxi id breaks ties), committing immediately.

    Candidate taxis come from a bounded reverse search around each pickup,
    indexed by effective node (assignments never move a taxi within the
    epoch, so the index stays valid). Added detour is never negative, so a
    zero-detour taxi found in ascending id order is already the minimum.
    """
    order = sorted(batch, key=lambda r: (r.arrival_epoch, r.request_id))
    originals = {t.taxi_id: t for t in taxis}
    committed: dict[int, "TaxiState"] = {}  # copy-on-write shadows
    now = taxis[0].clock_s if taxis else 0

    at_node: dict[int, list[int]] = {}
    offsets: dict[int, int] = {}
    for tid in sorted(originals):
        node, offset = originals[tid].effective_start()
        at_node.setdefault(node, []).append(tid)
        offsets[tid] = offset

    matches: list[tuple[int, int]] = []
    groups: dict[int, list[int]] = {}
    detours: dict[int, int] = {}

    for r in order:
        budget = r.arrival_s(constraints.epoch_length_s) + constraints.max_pickup_delay_s - now
        if budget < 0:
            continue
        reach = net.nodes_reaching(r.pickup, min(budget, constraints.max_pickup_delay_s))
        candidate_ids = sorted(
            tid for node, dist in reach.items() for tid in at_node.get(node, ())
            if offsets[tid] + dist <= budget)
        best = None
        for tid in candidate_ids:
            taxi = committed.get(tid, originals[tid])
            if len(taxi.onboard) + len(taxi.assigned) >= constraints.capacity:
                continue
            result = feasible_insertion(taxi, (r,), constraints, net)
            if result is None:
                continue
            plan, added = result
            if added == 0:
                best = (tid, 0, plan)
                break
            if best is None or (added, tid) < (best[1], best[0]):
                best = (tid, added, plan)
        if best is None:
            continue
        tid, added, plan = best
        taxi = committed.get(tid)
        if taxi is None:
            taxi = originals[tid].planning_copy()
            committed[tid] = taxi
        taxi.apply_plan(plan, {r.request_id: r})
        matches.append((r.request_id, tid))
        groups.setdefault(tid, []).append(r.request_id)
        detours[tid] = detours.get(tid, 0) + added

    plans = {tid: _current_plan(committed[tid]) for tid in groups}
    return Assignment(matches=tuple(sorted(matches)),
                      plans=plans,
                      groups={tid: tuple(sorted(g)) for tid, g in groups.items()},
                      added_detours=detours)


def _current_plan(taxi: "TaxiState") -> StopPlan:
    start_node, start_offset = taxi.effective_start()
    return StopPlan(stops=tuple(s for _, s in taxi.pending_stops),
                    etas=tuple(ts - taxi.clock_s for ts, _ in taxi.pending_stops),
                    start_node=start_node, start_offset_s=start_offset)


class MatchPolicy(Protocol):
    """The seam where alternative matchers (e.g. learned value functions) plug in.

    Implementations must return only feasible assignments; the engine
    re-validates every plan and aborts the run on violation.
    """

    name: str

    def match(self, epoch: int, taxis: Sequence["TaxiState"], batch: Sequence[Request],
              constraints: Constraints, net: RoadNetwork) -> Assignment: ...


class RewardPlusDelayPolicy:
    """Exact batch matcher: most requests first, smallest added detour second."""

    name = "rpd"

    def __init__(self, weights: Weights | None = None, max_group_size: int = 3):
        self._weights = weights
        self._max_group_size = max_group_size

    def match(self, epoch, taxis, batch, constraints, net) -> Assignment:
        candidates = generate_candidates(taxis, batch, constraints, net,
                                         max_group_size=self._max_group_size)
        weights = self._weights or Weights.default_for(constraints)
        return solve_batch_ilp(candidates, batch, weights)


class GreedyPolicy:
    name = "greedy"

    def match(self, epoch, taxis, batch, constraints, net) -> Assignment:
        return greedy_sequential_match(taxis, batch, constraints, net)


POLICIES = {
    "rpd": RewardPlusDelayPolicy,
    "greedy": GreedyPolicy,
}


def make_policy(name: str) -> MatchPolicy:
    try:
        return POLICIES[name]()
    except KeyError:
        raise InputError(f"unknown policy {name!r}; available: {'|'.join(sorted(POLICIES))}") from None

"""Passenger requests: ingestion of request tables and a synthetic generator.

A request is the tuple (pickup, dropoff, arrival epoch, fare). Streams are
immutable once built and always sorted by (arrival_epoch, request_id).
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InputError
from .road_network import RoadNetwork, Source, ZonePartition, _open_rows, _parse_float, _parse_int

DEFAULT_FARE_BASE = 2.5
DEFAULT_FARE_PER_SECOND = 0.008


@dataclass(frozen=True)
class Request:
    request_id: int
    pickup: int
    dropoff: int
    arrival_epoch: int
    fare: float

    def arrival_s(self, epoch_length_s: int) -> int:
        return self.arrival_epoch * epoch_length_s


class RequestStream:
    """Requests sorted by (arrival_epoch, request_id); request ids unique."""

    def __init__(self, requests: Iterable[Request]):
        ordered = sorted(requests, key=lambda r: (r.arrival_epoch, r.request_id))
        ids = set()
        for r in ordered:
            if r.request_id in ids:
                raise InputError(f"duplicate request_id {r.request_id}")
            ids.add(r.request_id)
        self._requests = ordered
        self._epochs = [r.arrival_epoch for r in ordered]

    def __len__(self) -> int:
        return len(self._requests)

    def __iter__(self):
        return iter(self._requests)

    def __getitem__(self, i):
        return self._requests[i]

    def batch_at(self, epoch: int) -> list[Request]:
        """Requests arriving exactly at this epoch, in request_id order."""
        lo = bisect_left(self._epochs, epoch)
        hi = bisect_right(self._epochs, epoch)
        return self._requests[lo:hi]

    @property
    def max_epoch(self) -> int:
        return self._epochs[-1] if self._epochs else -1


def load_requests(source: Source, net: RoadNetwork) -> RequestStream:
    """Load `request_id,pickup_node,dropoff_node,arrival_epoch,fare` rows, validating
    each against the network (nodes exist, dropoff reachable, pickup != dropoff).

    Fractional arrival epochs are floored: matching works at epoch resolution and
    sub-epoch ordering carries no information for it.
    """
    fields = ("request_id", "pickup_node", "dropoff_node", "arrival_epoch", "fare")
    requests = []
    for row_no, row in _open_rows(source, fields, "requests"):
        rid = _parse_int(row["request_id"], "requests.request_id", row_no)
        pickup = _parse_int(row["pickup_node"], "requests.pickup_node", row_no)
        dropoff = _parse_int(row["dropoff_node"], "requests.dropoff_node", row_no)
        arrival = int(_parse_float(row["arrival_epoch"], "requests.arrival_epoch", row_no) // 1)
        fare = _parse_float(row["fare"], "requests.fare", row_no)
        if not net.has_node(pickup):
            raise InputError(f"requests: row {row_no}: unknown pickup node {pickup}")
        if not net.has_node(dropoff):
            raise InputError(f"requests: row {row_no}: unknown dropoff node {dropoff}")
        if pickup == dropoff:
            raise InputError(f"requests: row {row_no}: pickup equals dropoff ({pickup})")
        if arrival < 0:
            raise InputError(f"requests: row {row_no}: negative arrival epoch {arrival}")
        if fare < 0:
            raise InputError(f"requests: row {row_no}: negative fare {fare}")
        if net.travel_time(pickup, dropoff) is None:
            raise InputError(f"requests: row {row_no}: dropoff {dropoff} unreachable from {pickup}")
        requests.append(Request(rid, pickup, dropoff, arrival, fare))
    return RequestStream(requests)


def default_fare(direct_s: int) -> float:
    """Distance-proportional fare: base plus a per-second rate on the direct ride time."""
    return round(DEFAULT_FARE_BASE + DEFAULT_FARE_PER_SECOND * direct_s, 2)


def generate_synthetic(net: RoadNetwork,
                       partition: ZonePartition | None,
                       horizon_epochs: int,
                       rate_profile: Sequence[float],
                       fare_rule: Callable[[int], float] = default_fare,
                       seed: int = 0) -> RequestStream:
    """Poisson demand with uniformly sampled reachable origin/destination pairs.

    Per-epoch counts are Poisson with the profile's mean; pickup/dropoff pairs are
    drawn uniformly over ordered reachable pairs by rejection. Bit-reproducible for
    a fixed (seed, profile, network). `partition` is accepted for signature parity
    with hotspot-weighted generators but uniform sampling does not consult it.
    """
    if net.n_nodes == 0:
        raise InputError("cannot generate demand on an empty network")
    if len(rate_profile) != horizon_epochs:
        raise InputError(
            f"rate_profile length {len(rate_profile)} != horizon {horizon_epochs}")

    rng = np.random.default_rng(seed)
    counts = rng.poisson(lam=np.asarray(rate_profile, dtype=float))
    node_ids = net.node_ids
    n = len(node_ids)

    requests = []
    rid = 1
    for epoch in range(horizon_epochs):
        for _ in range(int(counts[epoch])):
            while True:
                pickup = node_ids[int(rng.integers(n))]
                dropoff = node_ids[int(rng.integers(n))]
                if pickup == dropoff:
                    continue
                direct = net.travel_time(pickup, dropoff)
                if direct is not None:
                    break
            requests.append(Request(rid, pickup, dropoff, epoch, fare_rule(direct)))
            rid += 1
    return RequestStream(requests)

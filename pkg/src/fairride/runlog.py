"""The persistent event-log format (`fairride-log/1`).

One JSON object per line, UTF-8, compact separators, keys sorted. The first
line is the header; every following line is an event. This is the normative
wire format: field names, the ordering rule, and the header schema are frozen
for version 1.

Events and their fields:

- ``request_arrived``: request_id, pickup, dropoff, arrival_epoch, fare,
  direct_s (direct shortest-path seconds pickup->dropoff, logged so metrics
  never need the network to compute detours).
- ``matched``: request_id, taxi_id, epoch.
- ``pickup`` / ``dropoff``: request_id, taxi_id, timestamp_s.
- ``unmatched_final``: request_id, epoch (last epoch the request was eligible).
- ``position``: taxi_id, epoch, node_id, progress_s, n_onboard — the taxi's
  state at the epoch's start instant, once per epoch per taxi.

Canonical order: events sort by (effective timestamp, kind rank, taxi_id,
request_id) where epoch-stamped events use epoch * epoch_length seconds as
their effective timestamp. Kind ranks: position 0, request_arrived 1,
unmatched_final 2, matched 3, dropoff 4, pickup 5. Dropoffs rank before
pickups so that capacity replay stays valid when a taxi drops one passenger
and picks up another at the same node in the same second; for any single
request the lifecycle order arrived < matched < pickup < dropoff still holds
because a ride's direct time is at least one second.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Union

from .errors import LogVersionError, OrderingError, RunLogError, TruncatedRecordError

FORMAT_VERSION = "fairride-log/1"

_KIND_RANK = {
    "position": 0,
    "request_arrived": 1,
    "unmatched_final": 2,
    "matched": 3,
    "dropoff": 4,
    "pickup": 5,
}


@dataclass(frozen=True)
class RequestArrived:
    request_id: int
    pickup: int
    dropoff: int
    arrival_epoch: int
    fare: float
    direct_s: int
    kind = "request_arrived"


@dataclass(frozen=True)
class Matched:
    request_id: int
    taxi_id: int
    epoch: int
    kind = "matched"


@dataclass(frozen=True)
class Pickup:
    request_id: int
    taxi_id: int
    timestamp_s: int
    kind = "pickup"


@dataclass(frozen=True)
class Dropoff:
    request_id: int
    taxi_id: int
    timestamp_s: int
    kind = "dropoff"


@dataclass(frozen=True)
class UnmatchedFinal:
    request_id: int
    epoch: int
    kind = "unmatched_final"


@dataclass(frozen=True)
class Position:
    taxi_id: int
    epoch: int
    node_id: int
    progress_s: int
    n_onboard: int
    kind = "position"


Event = Union[RequestArrived, Matched, Pickup, Dropoff, UnmatchedFinal, Position]

_EVENT_TYPES = {
    "request_arrived": RequestArrived,
    "matched": Matched,
    "pickup": Pickup,
    "dropoff": Dropoff,
    "unmatched_final": UnmatchedFinal,
    "position": Position,
}


def effective_ts(event: Event, epoch_length_s: int) -> int:
    """Second at which the event takes effect; epoch-stamped kinds map to epoch start."""
    if isinstance(event, (Pickup, Dropoff)):
        return event.timestamp_s
    if isinstance(event, RequestArrived):
        return event.arrival_epoch * epoch_length_s
    return event.epoch * epoch_length_s


def sort_key(event: Event, epoch_length_s: int) -> tuple[int, int, int, int]:
    taxi = getattr(event, "taxi_id", -1)
    rid = getattr(event, "request_id", -1)
    return (effective_ts(event, epoch_length_s), _KIND_RANK[event.kind], taxi, rid)


def _dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def event_to_obj(event: Event) -> dict:
    obj = {"kind": event.kind}
    obj.update(event.__dict__)
    return obj


def event_from_obj(obj: dict) -> Event:
    kind = obj.get("kind")
    cls = _EVENT_TYPES.get(kind)
    if cls is None:
        raise RunLogError(f"unknown event kind {kind!r}")
    fields = {k: v for k, v in obj.items() if k != "kind"}
    try:
        return cls(**fields)
    except TypeError as exc:
        raise RunLogError(f"bad {kind} event: {exc}") from None


def file_digest(path: Union[str, Path]) -> str:
    """SHA-256 hex digest of a file's raw bytes (identifies run inputs)."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass(frozen=True)
class RunHeader:
    config: dict
    network_digest: str
    zones_digest: str
    policy: str
    seed: int

    @property
    def epoch_length_s(self) -> int:
        return int(self.config["epoch_length_s"])

    @property
    def horizon_epochs(self) -> int:
        return int(self.config["horizon_epochs"])

    @property
    def n_taxis(self) -> int:
        return int(self.config["n_taxis"])

    def to_obj(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "config": self.config,
            "network_digest": self.network_digest,
            "zones_digest": self.zones_digest,
            "policy": self.policy,
            "seed": self.seed,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "RunHeader":
        version = obj.get("format")
        if version != FORMAT_VERSION:
            raise LogVersionError(f"unsupported log format {version!r}, expected {FORMAT_VERSION}")
        return cls(config=obj["config"], network_digest=obj["network_digest"],
                   zones_digest=obj["zones_digest"], policy=obj["policy"], seed=obj["seed"])


class RunLog:
    """A parsed log: header plus the full event list in canonical order."""

    def __init__(self, header: RunHeader, events: list[Event]):
        self.header = header
        self.events = events

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)


class RunLogWriter:
    """Single-writer append sink enforcing the canonical event order.

    Usable as a context manager; events become durable line by line so a
    long-running simulation can be tailed.
    """

    def __init__(self, path: Union[str, Path], header: RunHeader):
        self._epoch_length = header.epoch_length_s
        self._fh = open(path, "w", encoding="utf-8", newline="\n")
        self._fh.write(_dumps(header.to_obj()) + "\n")
        self._last_key: tuple | None = None

    def append(self, event: Event) -> None:
        key = sort_key(event, self._epoch_length)
        if self._last_key is not None and key < self._last_key:
            raise OrderingError(
                f"event {event_to_obj(event)} sorts before the previous event ({key} < {self._last_key})")
        self._last_key = key
        self._fh.write(_dumps(event_to_obj(event)) + "\n")

    def append_block(self, events: Iterable[Event]) -> None:
        """Append one epoch's events, canonicalizing their order first."""
        for event in sorted(events, key=lambda e: sort_key(e, self._epoch_length)):
            self.append(event)
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "RunLogWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_runlog(path: Union[str, Path], log: RunLog) -> None:
    with RunLogWriter(path, log.header) as writer:
        for event in log.events:
            writer.append(event)


def read_header(path: Union[str, Path]) -> RunHeader:
    with open(path, "rb") as fh:
        first = fh.readline()
    if not first:
        raise TruncatedRecordError("empty log file", 0)
    try:
        obj = json.loads(first.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise TruncatedRecordError("unparseable header line", 0) from None
    return RunHeader.from_obj(obj)


def iter_runlog(path: Union[str, Path]) -> Iterator[Event]:
    """Stream events lazily; raises TruncatedRecordError (with the byte offset of
    the bad line) after yielding every event before it."""
    with open(path, "rb") as fh:
        offset = 0
        line = fh.readline()
        if not line:
            raise TruncatedRecordError("empty log file", 0)
        offset += len(line)
        # header validity is checked eagerly so version errors surface first
        try:
            RunHeader.from_obj(json.loads(line.decode("utf-8")))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise TruncatedRecordError("unparseable header line", 0) from None
        while True:
            start = offset
            line = fh.readline()
            if not line:
                return
            offset += len(line)
            stripped = line.rstrip(b"\n")
            if not stripped or not line.endswith(b"\n"):
                raise TruncatedRecordError("truncated record", start)
            try:
                obj = json.loads(stripped.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError):
                raise TruncatedRecordError("unparseable record", start) from None
            yield event_from_obj(obj)


def read_runlog(path: Union[str, Path]) -> RunLog:
    """Parse a complete log into memory (header + events)."""
    header = read_header(path)
    return RunLog(header, list(iter_runlog(path)))


class StreamingRunLog:
    """A RunLog-shaped handle that re-reads the file on each iteration.

    Lets metrics make single passes over day-scale logs without holding a few
    million event objects in memory. Interchangeable with RunLog wherever only
    `.header` and iteration are used.
    """

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.header = read_header(path)

    def __iter__(self) -> Iterator[Event]:
        return iter_runlog(self.path)


def open_runlog(path: Union[str, Path]) -> StreamingRunLog:
    return StreamingRunLog(path)

"""Every metric the analytics views and the numeric report consume.

All operations are pure single-pass functions of the event log. Acceptance
cohorts are keyed by a request's arrival epoch, so matched <= incoming holds
per window by construction. "Matched" means a match event exists; delay
metrics require the ride to have completed. Undefined aggregates (empty
denominators) are explicit None/absent values, never zeros.

Quantiles use linear interpolation between closest ranks (the common
"type 7" rule): with n sorted values, q(p) sits at rank h = (n-1)*p and
interpolates between floor(h) and ceil(h).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .errors import InputError, RunLogError
from .road_network import ZonePartition
from .runlog import Dropoff, Matched, Pickup, RequestArrived, RunLog, UnmatchedFinal

REPORT_FORMAT = "fairride-report/1"


@dataclass(frozen=True)
class Window:
    """A trailing span of epochs (end_epoch - length, end_epoch]."""

    end_epoch: int
    length_epochs: int

    def __post_init__(self):
        if self.length_epochs < 1:
            raise InputError("window length must be >= 1")

    def contains(self, epoch: int) -> bool:
        return self.end_epoch - self.length_epochs < epoch <= self.end_epoch

    @classmethod
    def whole_day(cls, horizon_epochs: int) -> "Window":
        return cls(end_epoch=horizon_epochs - 1, length_epochs=horizon_epochs)


@dataclass
class RequestRecord:
    request_id: int
    pickup: int
    dropoff: int
    arrival_epoch: int
    fare: float
    direct_s: int
    matched_epoch: int | None = None
    taxi_id: int | None = None
    pickup_ts: int | None = None
    dropoff_ts: int | None = None
    unmatched_epoch: int | None = None

    @property
    def matched(self) -> bool:
        return self.matched_epoch is not None

    @property
    def completed(self) -> bool:
        return self.dropoff_ts is not None

    def pickup_delay_s(self, epoch_length_s: int) -> int:
        return self.pickup_ts - self.arrival_epoch * epoch_length_s

    @property
    def detour_s(self) -> int:
        return self.dropoff_ts - self.pickup_ts - self.direct_s


def build_request_table(log: RunLog) -> dict[int, RequestRecord]:
    """One record per request with its final disposition; single pass."""
    horizon = log.header.horizon_epochs
    table: dict[int, RequestRecord] = {}
    for event in log:
        if isinstance(event, RequestArrived):
            if not 0 <= event.arrival_epoch < horizon:
                raise RunLogError(
                    f"request {event.request_id} arrives at epoch {event.arrival_epoch}, "
                    f"outside the horizon [0,{horizon}); run the validator")
            table[event.request_id] = RequestRecord(
                event.request_id, event.pickup, event.dropoff, event.arrival_epoch,
                event.fare, event.direct_s)
        elif isinstance(event, Matched):
            rec = table[event.request_id]
            rec.matched_epoch = event.epoch
            rec.taxi_id = event.taxi_id
        elif isinstance(event, Pickup):
            table[event.request_id].pickup_ts = event.timestamp_s
        elif isinstance(event, Dropoff):
            table[event.request_id].dropoff_ts = event.timestamp_s
        elif isinstance(event, UnmatchedFinal):
            table[event.request_id].unmatched_epoch = event.epoch
    return table


@dataclass(frozen=True)
class DistributionSummary:
    count: int
    min: float | None = None
    p10: float | None = None
    p25: float | None = None
    median: float | None = None
    p75: float | None = None
    p90: float | None = None
    max: float | None = None
    mean: float | None = None

    @classmethod
    def from_values(cls, values: Iterable[float]) -> "DistributionSummary":
        data = sorted(values)
        if not data:
            return cls(count=0)
        return cls(
            count=len(data),
            min=float(data[0]),
            p10=_quantile(data, 0.10),
            p25=_quantile(data, 0.25),
            median=_quantile(data, 0.50),
            p75=_quantile(data, 0.75),
            p90=_quantile(data, 0.90),
            max=float(data[-1]),
            mean=sum(data) / len(data),
        )

    def to_obj(self) -> dict:
        if self.count == 0:
            return {"count": 0}
        return {"count": self.count, "min": self.min, "p10": self.p10, "p25": self.p25,
                "median": self.median, "p75": self.p75, "p90": self.p90,
                "max": self.max, "mean": self.mean}


def _quantile(sorted_values: list, p: float) -> float:
    h = (len(sorted_values) - 1) * p
    lo = math.floor(h)
    hi = min(lo + 1, len(sorted_values) - 1)
    frac = h - lo
    return float(sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac)


@dataclass
class ZonePairStats:
    incoming: int = 0
    matched: int = 0
    detour_sum_s: int = 0
    detour_count: int = 0

    @property
    def acceptance_ratio(self) -> float:
        return self.matched / self.incoming

    @property
    def acceptance_fraction(self) -> Fraction:
        return Fraction(self.matched, self.incoming)

    @property
    def mean_detour_s(self) -> float | None:
        if self.detour_count == 0:
            return None
        return self.detour_sum_s / self.detour_count


def zone_pair_stats(log: RunLog, partition: ZonePartition,
                    window: Window) -> dict[tuple[str, str], ZonePairStats]:
    """Incoming/matched counts and mean completed detour per ordered zone pair.

    A request belongs to the window of its arrival epoch; matched attribution
    follows the same cohort, and detour means include completions from any
    later epoch.
    """
    stats: dict[tuple[str, str], ZonePairStats] = {}
    for rec in build_request_table(log).values():
        if not window.contains(rec.arrival_epoch):
            continue
        pair = (partition.zone_of(rec.pickup), partition.zone_of(rec.dropoff))
        entry = stats.setdefault(pair, ZonePairStats())
        entry.incoming += 1
        if rec.matched:
            entry.matched += 1
        if rec.completed:
            entry.detour_sum_s += rec.detour_s
            entry.detour_count += 1
    return stats


def zonal_fairness(log: RunLog, partition: ZonePartition,
                   window: Window | None = None) -> float | None:
    """Minimum acceptance ratio over zone pairs with demand; the service rate
    of the most underserved pair. None when no pair saw any arrivals."""
    value = zonal_fairness_detail(log, partition, window)[0]
    return value


def zonal_fairness_detail(log: RunLog, partition: ZonePartition,
                          window: Window | None = None
                          ) -> tuple[float | None, tuple[str, str] | None]:
    if window is None:
        window = Window.whole_day(log.header.horizon_epochs)
    stats = zone_pair_stats(log, partition, window)
    worst: tuple[Fraction, tuple[str, str]] | None = None
    for pair in sorted(stats):
        entry = stats[pair]
        if entry.incoming == 0:
            continue
        ratio = entry.acceptance_fraction
        if worst is None or ratio < worst[0]:
            worst = (ratio, pair)
    if worst is None:
        return None, None
    return float(worst[0]), worst[1]


def zone_pickup_delay(log: RunLog, partition: ZonePartition,
                      window: Window) -> dict[str, float]:
    """Mean pickup delay per pickup zone over matched-and-picked-up requests
    arriving in the window; zones with no such requests are absent."""
    delta = log.header.epoch_length_s
    sums: dict[str, int] = {}
    counts: dict[str, int] = {}
    for rec in build_request_table(log).values():
        if rec.pickup_ts is None or not window.contains(rec.arrival_epoch):
            continue
        zone = partition.zone_of(rec.pickup)
        sums[zone] = sums.get(zone, 0) + rec.pickup_delay_s(delta)
        counts[zone] = counts.get(zone, 0) + 1
    return {zone: sums[zone] / counts[zone] for zone in sums}


def request_timeseries(log: RunLog) -> list[tuple[int, int, int]]:
    """Per arrival epoch: (total, matched, finally-unmatched) request counts.

    total - matched - unmatched = requests still pending at the horizon.
    """
    horizon = log.header.horizon_epochs
    series = [[0, 0, 0] for _ in range(horizon)]
    for rec in build_request_table(log).values():
        row = series[rec.arrival_epoch]
        row[0] += 1
        if rec.matched:
            row[1] += 1
        elif rec.unmatched_epoch is not None:
            row[2] += 1
    return [tuple(row) for row in series]


@dataclass(frozen=True)
class DelayTimeseries:
    points: dict[int, tuple[float, float]]  # arrival epoch -> (mean pickup, mean detour)
    day_mean_pickup_s: float | None
    day_mean_detour_s: float | None


def delay_timeseries(log: RunLog) -> DelayTimeseries:
    """Mean pickup/detour delay of completed requests grouped by arrival epoch.

    Epochs without completions are absent (a gap, not a zero); day means are
    request-weighted across all completed requests.
    """
    delta = log.header.epoch_length_s
    acc: dict[int, list[int]] = {}
    total_pickup = total_detour = total_n = 0
    for rec in build_request_table(log).values():
        if not rec.completed:
            continue
        cell = acc.setdefault(rec.arrival_epoch, [0, 0, 0])
        pd = rec.pickup_delay_s(delta)
        cell[0] += pd
        cell[1] += rec.detour_s
        cell[2] += 1
        total_pickup += pd
        total_detour += rec.detour_s
        total_n += 1
    points = {epoch: (cell[0] / cell[2], cell[1] / cell[2])
              for epoch, cell in sorted(acc.items())}
    if total_n == 0:
        return DelayTimeseries(points, None, None)
    return DelayTimeseries(points, total_pickup / total_n, total_detour / total_n)


def completed_boxplots(log: RunLog, bin: str = "hour") -> dict[int, DistributionSummary]:
    """Distribution over all taxis of completed-request counts per time bin.

    Taxis with zero completions in a bin count as 0. Binning is by dropoff
    timestamp; "day" is a single bin covering the run.
    """
    if bin not in ("hour", "day"):
        raise InputError(f"bin must be 'hour' or 'day', got {bin!r}")
    header = log.header
    day_s = header.horizon_epochs * header.epoch_length_s
    n_bins = 1 if bin == "day" else max(1, math.ceil(day_s / 3600))
    bin_len = day_s if bin == "day" else 3600

    counts = [[0] * header.n_taxis for _ in range(n_bins)]
    for event in log:
        if isinstance(event, Dropoff):
            b = min(event.timestamp_s // bin_len, n_bins - 1)
            counts[b][event.taxi_id] += 1
    return {b: DistributionSummary.from_values(counts[b]) for b in range(n_bins)}


def driver_revenue(log: RunLog) -> DistributionSummary:
    """Per-taxi sum of completed-request fares, summarized over the whole fleet."""
    fares: dict[int, float] = {}
    revenue = [0.0] * log.header.n_taxis
    for event in log:
        if isinstance(event, RequestArrived):
            fares[event.request_id] = event.fare
        elif isinstance(event, Dropoff):
            revenue[event.taxi_id] += fares[event.request_id]
    return DistributionSummary.from_values(revenue)


def numeric_dashboard(log: RunLog, partition: ZonePartition) -> dict:
    """The benchmark report (`fairride-report/1`): distribution of completed
    requests across drivers, total completions, per-epoch and inter-zone
    acceptance-ratio distributions, and pickup/detour delay distributions,
    plus driver revenue and the whole-day zonal fairness value."""
    header = log.header
    delta = header.epoch_length_s
    table = build_request_table(log)

    completed_per_taxi = [0] * header.n_taxis
    revenue_per_taxi = [0.0] * header.n_taxis
    per_epoch: dict[int, list[int]] = {}
    pair_stats: dict[tuple[str, str], ZonePairStats] = {}
    pickup_delays: list[int] = []
    detours: list[int] = []

    for rec in table.values():
        cell = per_epoch.setdefault(rec.arrival_epoch, [0, 0])
        cell[0] += 1
        pair = (partition.zone_of(rec.pickup), partition.zone_of(rec.dropoff))
        entry = pair_stats.setdefault(pair, ZonePairStats())
        entry.incoming += 1
        if rec.matched:
            cell[1] += 1
            entry.matched += 1
        if rec.completed:
            completed_per_taxi[rec.taxi_id] += 1
            revenue_per_taxi[rec.taxi_id] += rec.fare
            pickup_delays.append(rec.pickup_delay_s(delta))
            detours.append(rec.detour_s)

    epoch_ratios = [cell[1] / cell[0] for _, cell in sorted(per_epoch.items())]
    pair_ratios = [pair_stats[p].acceptance_ratio for p in sorted(pair_stats)]
    fairness = None
    if pair_stats:
        fairness = float(min(pair_stats[p].acceptance_fraction for p in sorted(pair_stats)))

    report = {
        "format": REPORT_FORMAT,
        "run": {
            "policy": header.policy,
            "seed": header.seed,
            "network_digest": header.network_digest,
            "zones_digest": header.zones_digest,
            "config": header.config,
        },
        "completed_per_driver": DistributionSummary.from_values(completed_per_taxi).to_obj(),
        "total_completed": sum(completed_per_taxi),
        "per_epoch_acceptance": DistributionSummary.from_values(epoch_ratios).to_obj(),
        "inter_zone_acceptance": DistributionSummary.from_values(pair_ratios).to_obj(),
        "pickup_delay_s": DistributionSummary.from_values(pickup_delays).to_obj(),
        "detour_delay_s": DistributionSummary.from_values(detours).to_obj(),
        "driver_revenue": DistributionSummary.from_values(revenue_per_taxi).to_obj(),
    }
    if fairness is not None:
        report["zonal_fairness_day"] = fairness
    return report


def render_report(report: dict) -> str:
    """Canonical serialization shared by the CLI and the dashboard endpoint."""
    return json.dumps(report, sort_keys=True, indent=2) + "\n"

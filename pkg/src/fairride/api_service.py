"""Read-only HTTP service exposing windowed aggregates from registered runs.

Everything a query can ask for is precomputed at registration into
bisect-friendly per-epoch indexes, so any windowed query composes in
microseconds per zone pair or taxi instead of rescanning the log. Responses
are pure functions of (run, query); the payloads carry
``"api_version": "fairride-api/1"`` and keep stable field names.

Window convention for the map views: a query at epoch E with window W
aggregates over the W epochs completed before the displayed instant,
[E-W, E-1]. At epoch 0 nothing has happened yet, so every windowed count
is zero there. The request layer shows the arrivals of epoch E itself.
"""

from __future__ import annotations

import threading
from array import array
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Response

from .errors import InputError
from .metrics import (DelayTimeseries, Window, build_request_table, completed_boxplots,
                      delay_timeseries, numeric_dashboard, render_report,
                      request_timeseries)
from .road_network import RoadNetwork, ZonePartition
from .runlog import Dropoff, Pickup, Position, RunHeader, open_runlog
from .simulator import validate_runlog

API_VERSION = "fairride-api/1"
PAGE_SIZE = 10_000


@dataclass
class _PairIndex:
    arrival_epochs: list[int] = field(default_factory=list)
    matched_epochs: list[int] = field(default_factory=list)       # arrival epochs of matched
    completed_epochs: list[int] = field(default_factory=list)     # arrival epochs of completed
    detour_prefix: list[int] = field(default_factory=list)        # aligned running detour sums


@dataclass
class _ZoneIndex:
    epochs: list[int] = field(default_factory=list)               # arrival epochs of picked-up
    delay_prefix: list[int] = field(default_factory=list)


def _window_count(epochs: list[int], window: Window) -> int:
    lo = bisect_right(epochs, window.end_epoch - window.length_epochs)
    hi = bisect_right(epochs, window.end_epoch)
    return hi - lo


def _window_sum(epochs: list[int], prefix: list[int], window: Window) -> tuple[int, int]:
    lo = bisect_right(epochs, window.end_epoch - window.length_epochs)
    hi = bisect_right(epochs, window.end_epoch)
    total = prefix[hi] - prefix[lo]
    return total, hi - lo


class RunData:
    """One registered run: header, request table, and per-epoch indexes."""

    def __init__(self, run_id: str, path: Path, net: RoadNetwork,
                 partition: ZonePartition, digest_mismatch: bool):
        self.run_id = run_id
        self.path = path
        self.digest_mismatch = digest_mismatch
        log = open_runlog(path)
        self.header: RunHeader = log.header
        horizon = self.header.horizon_epochs
        n_taxis = self.header.n_taxis

        self.requests = build_request_table(log)
        self.arrivals_by_epoch: list[list[int]] = [[] for _ in range(horizon)]
        self.pairs: dict[tuple[str, str], _PairIndex] = {}
        self.zones: dict[str, _ZoneIndex] = {}
        self.match_epochs_by_taxi: dict[int, list[int]] = {}
        delta = self.header.epoch_length_s

        for rid in sorted(self.requests):
            rec = self.requests[rid]
            self.arrivals_by_epoch[rec.arrival_epoch].append(rid)
            pair = (partition.zone_of(rec.pickup), partition.zone_of(rec.dropoff))
            idx = self.pairs.setdefault(pair, _PairIndex())
            idx.arrival_epochs.append(rec.arrival_epoch)
            if rec.matched:
                idx.matched_epochs.append(rec.arrival_epoch)
                self.match_epochs_by_taxi.setdefault(rec.taxi_id, []).append(rec.matched_epoch)
            if rec.completed:
                idx.completed_epochs.append(rec.arrival_epoch)
                idx.detour_prefix.append(rec.detour_s)
            if rec.pickup_ts is not None:
                zidx = self.zones.setdefault(partition.zone_of(rec.pickup), _ZoneIndex())
                zidx.epochs.append(rec.arrival_epoch)
                zidx.delay_prefix.append(rec.pickup_delay_s(delta))

        for idx in self.pairs.values():
            idx.arrival_epochs.sort()
            idx.matched_epochs.sort()
            order = sorted(range(len(idx.completed_epochs)),
                           key=lambda i: idx.completed_epochs[i])
            idx.completed_epochs = [idx.completed_epochs[i] for i in order]
            detours = [idx.detour_prefix[i] for i in order]
            prefix = [0]
            for d in detours:
                prefix.append(prefix[-1] + d)
            idx.detour_prefix = prefix
        for zidx in self.zones.values():
            order = sorted(range(len(zidx.epochs)), key=lambda i: zidx.epochs[i])
            zidx.epochs = [zidx.epochs[i] for i in order]
            delays = [zidx.delay_prefix[i] for i in order]
            prefix = [0]
            for d in delays:
                prefix.append(prefix[-1] + d)
            zidx.delay_prefix = prefix
        for eps in self.match_epochs_by_taxi.values():
            eps.sort()

        # positions as flat int arrays: horizon * n_taxis cells
        self.pos_node = array("i", [-1] * (horizon * n_taxis))
        self.pos_progress = array("i", [0] * (horizon * n_taxis))
        self.pos_onboard = array("i", [0] * (horizon * n_taxis))
        self.stops_by_taxi: dict[int, list[tuple[int, str, int]]] = {}
        for event in log:
            if isinstance(event, Position):
                cell = event.epoch * n_taxis + event.taxi_id
                self.pos_node[cell] = event.node_id
                self.pos_progress[cell] = event.progress_s
                self.pos_onboard[cell] = event.n_onboard
            elif isinstance(event, (Pickup, Dropoff)):
                kind = "pickup" if isinstance(event, Pickup) else "dropoff"
                self.stops_by_taxi.setdefault(event.taxi_id, []).append(
                    (event.timestamp_s, kind, event.request_id))
        for stops in self.stops_by_taxi.values():
            stops.sort()

        self.dashboard_body = render_report(numeric_dashboard(log, partition))
        self.request_series = request_timeseries(log)
        self.delay_series: DelayTimeseries = delay_timeseries(log)
        self.boxplots = {b: completed_boxplots(log, bin=b) for b in ("hour", "day")}

    def position(self, epoch: int, taxi_id: int) -> tuple[int, int, int]:
        cell = epoch * self.header.n_taxis + taxi_id
        return self.pos_node[cell], self.pos_progress[cell], self.pos_onboard[cell]


class RunRegistry:
    """run_id -> RunData over one shared network/zone context."""

    def __init__(self, net: RoadNetwork, partition: ZonePartition,
                 network_digest: str = "", zones_digest: str = ""):
        self.net = net
        self.partition = partition
        self.network_digest = network_digest
        self.zones_digest = zones_digest
        self._runs: dict[str, RunData] = {}
        self._lock = threading.Lock()

    def register(self, run_id: str, path) -> RunData:
        path = Path(path)
        with self._lock:
            if run_id in self._runs:
                raise InputError(f"run id {run_id!r} already registered")
            header = open_runlog(path).header
            mismatch = bool(
                (self.network_digest and header.network_digest != self.network_digest)
                or (self.zones_digest and header.zones_digest != self.zones_digest))
            report = validate_runlog(open_runlog(path), self.net)
            if not report.ok:
                first = report.violations[0]
                raise InputError(
                    f"log {path} failed validation ({len(report.violations)} violations, "
                    f"first: {first.kind}: {first.message})")
            data = RunData(run_id, path, self.net, self.partition, mismatch)
            self._runs[run_id] = data
            return data

    @property
    def run_ids(self) -> list[str]:
        return sorted(self._runs)

    def get(self, run_id: str) -> RunData | None:
        return self._runs.get(run_id)


def _mean_detour(idx: _PairIndex, window: Window) -> float | None:
    total, count = _window_sum(idx.completed_epochs, idx.detour_prefix, window)
    if count == 0:
        return None
    return total / count


def create_app(registry: RunRegistry, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="fairride analytics", docs_url=None, redoc_url=None)
    net = registry.net
    partition = registry.partition
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    def _run(run_id: str) -> RunData:
        data = registry.get(run_id)
        if data is None:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        return data

    def _window(data: RunData, epoch: int, window: int) -> Window:
        """Trailing window of completed epochs, [epoch-window, epoch-1]."""
        if not 0 <= epoch < data.header.horizon_epochs:
            raise HTTPException(status_code=400,
                                detail=f"epoch {epoch} outside [0,{data.header.horizon_epochs})")
        if window < 1:
            raise HTTPException(status_code=400, detail=f"window must be >= 1, got {window}")
        return Window(end_epoch=epoch - 1, length_epochs=window)

    @app.get("/runs")
    def list_runs():
        runs = []
        for run_id in registry.run_ids:
            data = registry.get(run_id)
            runs.append({
                "run_id": run_id,
                "policy": data.header.policy,
                "seed": data.header.seed,
                "config": data.header.config,
                "network_digest": data.header.network_digest,
                "zones_digest": data.header.zones_digest,
                "digest_mismatch": data.digest_mismatch,
            })
        return {"api_version": API_VERSION, "runs": runs}

    @app.get("/runs/{run_id}/network")
    def network(run_id: str):
        _run(run_id)  # 404 before serving shared geometry
        nodes = [{"node_id": n, "lat": net.coord(n)[0], "lon": net.coord(n)[1],
                  "zone_id": partition.zone_of(n)} for n in net.node_ids]
        zones = [{"zone_id": z.zone_id, "name": z.name,
                  "centroid": {"lat": z.centroid[0], "lon": z.centroid[1]},
                  "n_nodes": len(z.nodes)}
                 for z in (partition.zones[zid] for zid in partition.zone_ids)]
        return {"api_version": API_VERSION, "nodes": nodes, "zones": zones}

    @app.get("/runs/{run_id}/taxis")
    def taxis(run_id: str, epoch: int = Query(...), window: int = Query(1),
              taxi: int | None = Query(None)):
        data = _run(run_id)
        win = _window(data, epoch, window)
        records = []
        total_matches = 0
        for tid in range(data.header.n_taxis):
            node, progress, n_onboard = data.position(epoch, tid)
            matches = _window_count(data.match_epochs_by_taxi.get(tid, []), win)
            total_matches += matches
            lat, lon = net.coord(node)
            records.append({"taxi_id": tid, "node_id": node, "lat": lat, "lon": lon,
                            "progress_s": progress, "n_onboard": n_onboard,
                            "matches_in_window": matches})
        body = {"api_version": API_VERSION, "epoch": epoch, "window": window,
                "fleet_mean_matches": total_matches / data.header.n_taxis,
                "taxis": records}
        if taxi is not None:
            if not 0 <= taxi < data.header.n_taxis:
                raise HTTPException(status_code=400, detail=f"unknown taxi {taxi}")
            body["path"] = _taxi_path(data, taxi, epoch)
        return body

    def _taxi_path(data: RunData, taxi_id: int, epoch: int) -> dict:
        """Realized route from the taxi's position at the epoch through its
        remaining stops: per-epoch position waypoints merged with exact stop
        times, expanded along shortest paths."""
        delta = data.header.epoch_length_s
        now = epoch * delta
        stops = [(ts, kind, rid) for ts, kind, rid in data.stops_by_taxi.get(taxi_id, [])
                 if ts >= now]
        stop_objs = []
        for ts, kind, rid in stops:
            rec = data.requests[rid]
            node = rec.pickup if kind == "pickup" else rec.dropoff
            stop_objs.append({"timestamp_s": ts, "kind": kind, "request_id": rid,
                              "node_id": node})
        last_ts = stops[-1][0] if stops else now
        last_epoch = min(last_ts // delta + 1, data.header.horizon_epochs - 1)
        waypoints: list[tuple[int, int]] = []
        for e in range(epoch, last_epoch + 1):
            node, _, _ = data.position(e, taxi_id)
            waypoints.append((e * delta, node))
        merged = sorted(waypoints + [(s["timestamp_s"], s["node_id"]) for s in stop_objs])
        nodes: list[int] = []
        for _, node in merged:
            if nodes and nodes[-1] == node:
                continue
            if nodes:
                try:
                    segment = net.shortest_path(nodes[-1], node)
                except Exception:
                    segment = [node]
                nodes.extend(segment[1:])
            else:
                nodes.append(node)
        return {"taxi_id": taxi_id, "nodes": nodes, "stops": stop_objs}

    @app.get("/runs/{run_id}/requests")
    def requests(run_id: str, epoch: int = Query(...),
                 filter: str = Query("all"), cursor: int = Query(0)):
        data = _run(run_id)
        _window(data, epoch, 1)
        if filter not in ("all", "matched", "unmatched"):
            raise HTTPException(status_code=400,
                                detail="filter must be all|matched|unmatched")
        records = []
        for rid in data.arrivals_by_epoch[epoch]:
            rec = data.requests[rid]
            if filter == "matched" and not rec.matched:
                continue
            if filter == "unmatched" and rec.matched:
                continue
            p_lat, p_lon = net.coord(rec.pickup)
            d_lat, d_lon = net.coord(rec.dropoff)
            records.append({
                "request_id": rid, "pickup": rec.pickup, "dropoff": rec.dropoff,
                "pickup_lat": p_lat, "pickup_lon": p_lon,
                "dropoff_lat": d_lat, "dropoff_lon": d_lon,
                "matched": rec.matched, "fare": rec.fare,
            })
        body = {"api_version": API_VERSION, "epoch": epoch, "filter": filter}
        if cursor < 0 or (cursor and cursor >= len(records)):
            raise HTTPException(status_code=400, detail=f"bad cursor {cursor}")
        page = records[cursor:cursor + PAGE_SIZE]
        body["requests"] = page
        if cursor + PAGE_SIZE < len(records):
            body["next_cursor"] = cursor + PAGE_SIZE
        return body

    @app.get("/runs/{run_id}/zones/flows")
    def flows(run_id: str, epoch: int = Query(...), window: int = Query(1),
              metric: str = Query("acceptance")):
        data = _run(run_id)
        win = _window(data, epoch, window)
        if metric not in ("acceptance", "detour"):
            raise HTTPException(status_code=400, detail="metric must be acceptance|detour")
        pairs = []
        for pair in sorted(data.pairs):
            idx = data.pairs[pair]
            incoming = _window_count(idx.arrival_epochs, win)
            if incoming == 0:
                continue
            matched = _window_count(idx.matched_epochs, win)
            mean_detour = _mean_detour(idx, win)
            entry = {
                "from_zone": pair[0], "to_zone": pair[1],
                "incoming": incoming, "matched": matched,
                "acceptance_ratio": matched / incoming,
                "from_centroid": _centroid_obj(pair[0]),
                "to_centroid": _centroid_obj(pair[1]),
            }
            if mean_detour is not None:
                entry["mean_detour_s"] = mean_detour
            if metric == "acceptance":
                entry["metric_value"] = entry["acceptance_ratio"]
            elif mean_detour is not None:
                entry["metric_value"] = mean_detour
            pairs.append(entry)
        return {"api_version": API_VERSION, "epoch": epoch, "window": window,
                "metric": metric, "pairs": pairs}

    def _centroid_obj(zone_id: str) -> dict:
        lat, lon = partition.zones[zone_id].centroid
        return {"lat": lat, "lon": lon}

    @app.get("/runs/{run_id}/zones/choropleth")
    def choropleth(run_id: str, epoch: int = Query(...), window: int = Query(1)):
        data = _run(run_id)
        win = _window(data, epoch, window)
        zones = []
        for zone_id in sorted(data.zones):
            zidx = data.zones[zone_id]
            total, count = _window_sum(zidx.epochs, zidx.delay_prefix, win)
            if count == 0:
                continue
            zones.append({"zone_id": zone_id, "mean_pickup_delay_s": total / count,
                          "count": count})
        return {"api_version": API_VERSION, "epoch": epoch, "window": window,
                "zones": zones}

    @app.get("/runs/{run_id}/timeseries/requests")
    def series_requests(run_id: str):
        data = _run(run_id)
        epochs = [{"epoch": e, "total": row[0], "matched": row[1], "unmatched": row[2]}
                  for e, row in enumerate(data.request_series)]
        return {"api_version": API_VERSION, "epochs": epochs}

    @app.get("/runs/{run_id}/timeseries/delays")
    def series_delays(run_id: str):
        data = _run(run_id)
        points = [{"epoch": e, "mean_pickup_delay_s": p, "mean_detour_delay_s": d}
                  for e, (p, d) in sorted(data.delay_series.points.items())]
        body = {"api_version": API_VERSION, "points": points}
        if data.delay_series.day_mean_pickup_s is not None:
            body["day_mean_pickup_delay_s"] = data.delay_series.day_mean_pickup_s
            body["day_mean_detour_delay_s"] = data.delay_series.day_mean_detour_s
        return body

    @app.get("/runs/{run_id}/timeseries/boxplots")
    def series_boxplots(run_id: str, bin: str = Query("hour")):
        data = _run(run_id)
        if bin not in ("hour", "day"):
            raise HTTPException(status_code=400, detail="bin must be hour|day")
        bins = [{"bin_index": b, "summary": summary.to_obj()}
                for b, summary in sorted(data.boxplots[bin].items())]
        return {"api_version": API_VERSION, "bin": bin, "bins": bins}

    @app.get("/runs/{run_id}/fairness/zonal")
    def fairness(run_id: str, window: str = Query("day"), epoch: int | None = Query(None)):
        data = _run(run_id)
        horizon = data.header.horizon_epochs
        if window == "day":
            win = Window.whole_day(horizon)
            end = horizon
        else:
            try:
                length = int(window)
            except ValueError:
                raise HTTPException(status_code=400,
                                    detail="window must be 'day' or an epoch count") from None
            if length < 1:
                raise HTTPException(status_code=400,
                                    detail=f"window must be >= 1, got {length}")
            end = horizon if epoch is None else epoch
            if not 0 <= end <= horizon:
                raise HTTPException(status_code=400,
                                    detail=f"epoch {end} outside [0,{horizon}]")
            win = Window(end_epoch=end - 1, length_epochs=length)
        worst = None
        for pair in sorted(data.pairs):
            idx = data.pairs[pair]
            incoming = _window_count(idx.arrival_epochs, win)
            if incoming == 0:
                continue
            ratio = Fraction(_window_count(idx.matched_epochs, win), incoming)
            if worst is None or ratio < worst[0]:
                worst = (ratio, pair, incoming)
        body = {"api_version": API_VERSION, "window": window, "end_epoch": end}
        if worst is not None:
            body["zonal_fairness"] = float(worst[0])
            body["worst_pair"] = {"from_zone": worst[1][0], "to_zone": worst[1][1],
                                  "incoming": worst[2],
                                  "matched": int(worst[0] * worst[2])}
        return body

    @app.get("/runs/{run_id}/dashboard")
    def dashboard(run_id: str):
        data = _run(run_id)
        # same bytes as the CLI-written report for this run
        return Response(content=data.dashboard_body, media_type="application/json")

    return app


def serve(registry: RunRegistry, host: str = "127.0.0.1", port: int = 8000,
          ui_dir: str | None = None) -> None:
    """Run the service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(registry, ui_dir=ui_dir), host=host, port=port,
                log_level="warning")

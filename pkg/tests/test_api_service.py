from __future__ import annotations

import random

import pytest
from fastapi.testclient import TestClient

from fairride.api_service import RunRegistry, create_app
from fairride.demand import RequestStream
from fairride.errors import InputError
from fairride.matching import Constraints
from fairride.metrics import Window, zonal_fairness, zone_pair_stats, zone_pickup_delay
from fairride.runlog import Matched, Pickup, read_runlog
from fairride.simulator import SimConfig, run_to_file

from .conftest import grid_network, quadrant_partition, random_requests


@pytest.fixture(scope="module")
def served(tmp_path_factory):
    """Two runs (both policies) over the same inputs, registered and served."""
    tmp = tmp_path_factory.mktemp("api")
    net = grid_network(4, 4, cost=60)
    part = quadrant_partition(net)
    demand = RequestStream(random_requests(random.Random(77), net, 120, max_epoch=20))
    paths = {}
    for policy in ("rpd", "greedy"):
        config = SimConfig(horizon_epochs=30, n_taxis=4, policy=policy, seed=5,
                           constraints=Constraints())
        paths[policy] = tmp / f"{policy}.fairlog"
        run_to_file(config, net, part, demand, paths[policy])
    registry = RunRegistry(net, part)
    for policy, path in paths.items():
        registry.register(policy, path)
    client = TestClient(create_app(registry))
    return client, registry, paths, net, part


class TestRunListing:
    def test_runs_listed(self, served):
        client, *_ = served
        body = client.get("/runs").json()
        assert body["api_version"] == "fairride-api/1"
        assert [r["run_id"] for r in body["runs"]] == ["greedy", "rpd"]

    def test_unknown_run_404(self, served):
        client, *_ = served
        assert client.get("/runs/nope/dashboard").status_code == 404

    def test_identical_queries_byte_identical(self, served):
        client, *_ = served
        a = client.get("/runs/rpd/taxis", params={"epoch": 10, "window": 5})
        b = client.get("/runs/rpd/taxis", params={"epoch": 10, "window": 5})
        assert a.content == b.content


class TestTaxisEndpoint:
    def test_record_count_and_positions(self, served):
        client, registry, paths, net, part = served
        body = client.get("/runs/rpd/taxis", params={"epoch": 0, "window": 1}).json()
        assert len(body["taxis"]) == 4
        log = read_runlog(paths["rpd"])
        from fairride.runlog import Position

        seeded = {e.taxi_id: e.node_id for e in log if isinstance(e, Position)
                  and e.epoch == 0}
        for rec in body["taxis"]:
            assert rec["node_id"] == seeded[rec["taxi_id"]]
            assert rec["matches_in_window"] == 0  # window (−1,0]: matching at epoch 0
            assert rec["lat"] == net.coord(rec["node_id"])[0]

    def test_matches_in_window_counts_match_events(self, served):
        client, registry, paths, *_ = served
        epoch, window = 20, 21
        body = client.get("/runs/rpd/taxis",
                          params={"epoch": epoch, "window": window}).json()
        log = read_runlog(paths["rpd"])
        want: dict[int, int] = {}
        for e in log:
            # the window covers the epochs completed before the displayed instant
            if isinstance(e, Matched) and epoch - window <= e.epoch <= epoch - 1:
                want[e.taxi_id] = want.get(e.taxi_id, 0) + 1
        for rec in body["taxis"]:
            assert rec["matches_in_window"] == want.get(rec["taxi_id"], 0)
        assert body["fleet_mean_matches"] == sum(want.values()) / 4

    def test_taxi_path_overlay(self, served):
        client, registry, paths, net, _ = served
        log = read_runlog(paths["rpd"])
        pick = next(e for e in log if isinstance(e, Pickup))
        epoch = pick.timestamp_s // 60
        body = client.get("/runs/rpd/taxis",
                          params={"epoch": epoch, "window": 1,
                                  "taxi": pick.taxi_id}).json()
        path = body["path"]
        assert path["taxi_id"] == pick.taxi_id
        stop_nodes = {s["node_id"] for s in path["stops"]}
        assert stop_nodes <= set(path["nodes"])
        for a, b in zip(path["nodes"], path["nodes"][1:]):
            assert net.edge_cost(a, b) is not None  # consecutive nodes are edges

    def test_epoch_out_of_range_400(self, served):
        client, *_ = served
        assert client.get("/runs/rpd/taxis",
                          params={"epoch": 999, "window": 1}).status_code == 400
        assert client.get("/runs/rpd/taxis",
                          params={"epoch": 2, "window": 0}).status_code == 400


class TestRequestsEndpoint:
    def test_filter_partition(self, served):
        client, registry, paths, *_ = served
        for epoch in (0, 3, 7):
            all_ = client.get("/runs/greedy/requests",
                              params={"epoch": epoch, "filter": "all"}).json()
            matched = client.get("/runs/greedy/requests",
                                 params={"epoch": epoch, "filter": "matched"}).json()
            unmatched = client.get("/runs/greedy/requests",
                                   params={"epoch": epoch, "filter": "unmatched"}).json()
            assert len(all_["requests"]) == len(matched["requests"]) + len(unmatched["requests"])

    def test_bad_filter_400(self, served):
        client, *_ = served
        r = client.get("/runs/rpd/requests", params={"epoch": 0, "filter": "open"})
        assert r.status_code == 400

    def test_pagination_cursor(self, served, monkeypatch):
        import fairride.api_service as api_module

        client, registry, paths, *_ = served
        epoch = next(e for e in range(30)
                     if len(registry.get("rpd").arrivals_by_epoch[e]) >= 3)
        total = len(registry.get("rpd").arrivals_by_epoch[epoch])
        monkeypatch.setattr(api_module, "PAGE_SIZE", 2)
        first = client.get("/runs/rpd/requests",
                           params={"epoch": epoch, "filter": "all"}).json()
        assert len(first["requests"]) == 2
        assert first["next_cursor"] == 2
        rest = client.get("/runs/rpd/requests",
                          params={"epoch": epoch, "filter": "all",
                                  "cursor": first["next_cursor"]}).json()
        got = len(first["requests"]) + len(rest["requests"])
        if "next_cursor" not in rest:
            assert got == total
        assert client.get("/runs/rpd/requests",
                          params={"epoch": epoch, "cursor": -3}).status_code == 400


class TestZoneEndpoints:
    def test_flows_match_metrics_module(self, served):
        client, registry, paths, net, part = served
        epoch, window = 25, 26
        body = client.get("/runs/rpd/zones/flows",
                          params={"epoch": epoch, "window": window}).json()
        from fairride.runlog import open_runlog

        stats = zone_pair_stats(open_runlog(paths["rpd"]), part,
                                Window(epoch - 1, window))
        got = {(p["from_zone"], p["to_zone"]): (p["incoming"], p["matched"]) for p in body["pairs"]}
        want = {pair: (s.incoming, s.matched) for pair, s in stats.items() if s.incoming}
        assert got == want
        for p in body["pairs"]:
            pair = (p["from_zone"], p["to_zone"])
            assert p["acceptance_ratio"] == stats[pair].acceptance_ratio
            if stats[pair].mean_detour_s is not None:
                assert p["mean_detour_s"] == stats[pair].mean_detour_s
            assert p["from_centroid"]["lat"] == part.zones[pair[0]].centroid[0]

    def test_flows_detour_metric(self, served):
        client, *_ = served
        body = client.get("/runs/rpd/zones/flows",
                          params={"epoch": 25, "window": 26, "metric": "detour"}).json()
        for p in body["pairs"]:
            if "mean_detour_s" in p:
                assert p["metric_value"] == p["mean_detour_s"]

    def test_choropleth_matches_metrics_module(self, served):
        client, registry, paths, net, part = served
        from fairride.runlog import open_runlog

        epoch, window = 22, 10
        body = client.get("/runs/greedy/zones/choropleth",
                          params={"epoch": epoch, "window": window}).json()
        want = zone_pickup_delay(open_runlog(paths["greedy"]), part,
                                 Window(epoch - 1, window))
        got = {z["zone_id"]: z["mean_pickup_delay_s"] for z in body["zones"]}
        assert got == want

    def test_flows_empty_window(self, served):
        client, registry, paths, net, part = served
        body = client.get("/runs/rpd/zones/flows",
                          params={"epoch": 29, "window": 1}).json()
        stats = zone_pair_stats(read_runlog(paths["rpd"]), part, Window(28, 1))
        assert len(body["pairs"]) == sum(1 for s in stats.values() if s.incoming)


class TestSeriesAndDashboard:
    def test_request_series_identity(self, served):
        client, registry, paths, *_ = served
        from fairride.metrics import request_timeseries
        from fairride.runlog import open_runlog

        body = client.get("/runs/rpd/timeseries/requests").json()
        want = request_timeseries(open_runlog(paths["rpd"]))
        for row in body["epochs"]:
            t, m, u = want[row["epoch"]]
            assert (row["total"], row["matched"], row["unmatched"]) == (t, m, u)

    def test_boxplot_payload(self, served):
        client, *_ = served
        body = client.get("/runs/rpd/timeseries/boxplots", params={"bin": "day"}).json()
        assert len(body["bins"]) == 1
        summary = body["bins"][0]["summary"]
        assert set(summary) >= {"count", "min", "p10", "p25", "median", "p75", "p90", "max"}

    def test_dashboard_equals_cli_report(self, served, tmp_path):
        client, registry, paths, net, part = served
        from fairride.metrics import numeric_dashboard, render_report
        from fairride.runlog import open_runlog

        body = client.get("/runs/greedy/dashboard")
        want = render_report(numeric_dashboard(open_runlog(paths["greedy"]), part))
        assert body.content.decode() == want

    def test_fairness_endpoint(self, served):
        client, registry, paths, net, part = served
        from fairride.runlog import open_runlog

        body = client.get("/runs/rpd/fairness/zonal").json()
        want = zonal_fairness(open_runlog(paths["rpd"]), part)
        assert body.get("zonal_fairness") == want
        windowed = client.get("/runs/rpd/fairness/zonal",
                              params={"window": "10", "epoch": 20}).json()
        want_w = zonal_fairness(open_runlog(paths["rpd"]), part, Window(19, 10))
        assert windowed.get("zonal_fairness") == want_w


class TestRegistry:
    def test_duplicate_run_id_rejected(self, served):
        client, registry, paths, *_ = served
        with pytest.raises(InputError, match="already registered"):
            registry.register("rpd", paths["rpd"])

    def test_digest_mismatch_flagged(self, served, tmp_path):
        client, registry, paths, net, part = served
        other = RunRegistry(net, part, network_digest="deadbeef", zones_digest="")
        data = other.register("r", paths["rpd"])
        assert data.digest_mismatch

    def test_ui_static_mount(self, served, tmp_path):
        from fairride.api_service import create_app

        _, registry, *_ = served
        ui = tmp_path / "ui"
        ui.mkdir()
        (ui / "index.html").write_text("<html><body>explorer</body></html>")
        client = TestClient(create_app(registry, ui_dir=str(ui)))
        response = client.get("/ui/")
        assert response.status_code == 200
        assert "explorer" in response.text

    def test_invalid_log_rejected(self, tmp_path):
        net = grid_network(3, 3)
        part = quadrant_partition(net)
        bad = tmp_path / "bad.fairlog"
        from fairride.matching import Constraints as C
        from fairride.runlog import (Matched as M, Position as P, RequestArrived as RA,
                                     RunHeader, RunLog, write_runlog)

        header = RunHeader(
            config={"horizon_epochs": 1, "epoch_length_s": 60, "n_taxis": 1,
                    "placement": "fixed", "movement_mode": "continuous",
                    "constraints": C().to_obj()},
            network_digest="", zones_digest="", policy="x", seed=0)
        write_runlog(bad, RunLog(header, [P(0, 0, 1, 0, 0),
                                          RA(1, 1, 2, 0, 1.0, 60),
                                          M(1, 0, 0), M(1, 0, 0)]))
        registry = RunRegistry(net, part)
        with pytest.raises(InputError, match="failed validation"):
            registry.register("bad", bad)

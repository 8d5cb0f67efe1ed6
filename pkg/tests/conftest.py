from __future__ import annotations

import random

import pytest

from fairride.demand import Request, RequestStream
from fairride.matching import Constraints
from fairride.road_network import RoadNetwork, Zone, ZonePartition
from fairride.simulator import TaxiState


def grid_graph(rows: int, cols: int, cost: int = 60, origin: int = 1):
    """Bidirectional grid; node ids count row-major from `origin`."""
    nodes = []
    edges = []
    def nid(r, c):
        return origin + r * cols + c
    for r in range(rows):
        for c in range(cols):
            nodes.append((nid(r, c), float(r), float(c)))
            if c + 1 < cols:
                edges.append((nid(r, c), nid(r, c + 1), cost))
                edges.append((nid(r, c + 1), nid(r, c), cost))
            if r + 1 < rows:
                edges.append((nid(r, c), nid(r + 1, c), cost))
                edges.append((nid(r + 1, c), nid(r, c), cost))
    return nodes, edges


def grid_network(rows: int, cols: int, cost: int = 60) -> RoadNetwork:
    nodes, edges = grid_graph(rows, cols, cost)
    return RoadNetwork(nodes, edges)


def quadrant_partition(net: RoadNetwork) -> ZonePartition:
    """Split nodes into two zones by longitude median; enough for pair metrics."""
    coords = sorted(net.coord(n)[1] for n in net.node_ids)
    split = coords[len(coords) // 2]
    assignment = {}
    members = {"W": [], "E": []}
    for n in net.node_ids:
        zone = "W" if net.coord(n)[1] < split else "E"
        assignment[n] = zone
        members[zone].append(n)
    zones = {}
    for zid, nodes in members.items():
        if not nodes:
            continue
        lat = sum(net.coord(n)[0] for n in nodes) / len(nodes)
        lon = sum(net.coord(n)[1] for n in nodes) / len(nodes)
        zones[zid] = Zone(zid, f"zone {zid}", (lat, lon), tuple(sorted(nodes)))
    return ZonePartition(assignment=assignment, zones=zones)


def make_taxi(taxi_id: int, node: int, clock_s: int = 0) -> TaxiState:
    return TaxiState(taxi_id=taxi_id, node=node, clock_s=clock_s,
                     node_reached_s=clock_s)


def write_network_files(tmp_path, nodes, edges, assignment):
    """Emit the three CSV inputs and return their paths."""
    nodes_path = tmp_path / "nodes.csv"
    edges_path = tmp_path / "edges.csv"
    zones_path = tmp_path / "zones.csv"
    nodes_path.write_text(
        "node_id,lat,lon\n" + "".join(f"{n},{lat},{lon}\n" for n, lat, lon in nodes))
    edges_path.write_text(
        "from,to,cost_seconds\n" + "".join(f"{u},{v},{c}\n" for u, v, c in edges))
    zones_path.write_text(
        "node_id,zone_id,zone_name\n"
        + "".join(f"{n},{z},zone {z}\n" for n, z in sorted(assignment.items())))
    return nodes_path, edges_path, zones_path


def random_requests(rng: random.Random, net: RoadNetwork, n: int,
                    max_epoch: int = 0, fare: float = 5.0) -> list[Request]:
    node_ids = net.node_ids
    out = []
    for i in range(n):
        while True:
            p, d = rng.choice(node_ids), rng.choice(node_ids)
            if p != d and net.travel_time(p, d) is not None:
                break
        out.append(Request(i + 1, p, d, rng.randint(0, max_epoch), fare))
    return out


@pytest.fixture
def line_net() -> RoadNetwork:
    """1 -> 2 -> 3 with 60s and 120s edges (plus the reverse direction)."""
    return RoadNetwork(
        nodes=[(1, 0.0, 0.0), (2, 0.0, 1.0), (3, 0.0, 2.0)],
        edges=[(1, 2, 60), (2, 3, 120), (2, 1, 60), (3, 2, 120)])


@pytest.fixture
def one_way_line_net() -> RoadNetwork:
    return RoadNetwork(
        nodes=[(1, 0.0, 0.0), (2, 0.0, 1.0), (3, 0.0, 2.0)],
        edges=[(1, 2, 60), (2, 3, 120)])


@pytest.fixture
def diamond_net() -> RoadNetwork:
    """Two equal-cost 120s routes 1->4: via 2 and via 3."""
    return RoadNetwork(
        nodes=[(1, 0.0, 0.0), (2, 1.0, 1.0), (3, -1.0, 1.0), (4, 0.0, 2.0)],
        edges=[(1, 2, 60), (2, 4, 60), (1, 3, 60), (3, 4, 60)])


@pytest.fixture
def grid4() -> RoadNetwork:
    return grid_network(4, 4, cost=60)


@pytest.fixture
def default_constraints() -> Constraints:
    return Constraints()


def stream(requests) -> RequestStream:
    return RequestStream(requests)

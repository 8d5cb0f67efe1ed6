"""Directed road graph with integer travel-time edges, plus the zone partition.

Edge costs are integer seconds: the arithmetic stays exact and platform
independent, which the determinism contract depends on. Networks are immutable
after load; shortest-path results are memoized per source (forward) and per
target (reverse), so concurrent readers are safe (worst case a distance table
is computed twice and the second store wins).
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO, Union

from .errors import InputError, UnknownNodeError, UnreachableError

Source = Union[str, Path, TextIO]


def _open_rows(source: Source, expected_fields: tuple[str, ...], label: str):
    """Yield (row_number, dict) from a CSV source, checking the header."""
    if hasattr(source, "read"):
        handle = source
        close = False
    else:
        handle = open(source, "r", encoding="utf-8", newline="")
        close = True
    try:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise InputError(f"{label}: empty file, expected header {','.join(expected_fields)}")
        missing = set(expected_fields) - set(reader.fieldnames)
        if missing:
            raise InputError(f"{label}: header missing columns {sorted(missing)}")
        for row_no, row in enumerate(reader, start=2):
            yield row_no, row
    finally:
        if close:
            handle.close()


def _parse_int(value, label: str, row_no: int) -> int:
    try:
        return int(str(value).strip())
    except (TypeError, ValueError):
        raise InputError(f"{label}: row {row_no}: not an integer: {value!r}") from None


def _parse_float(value, label: str, row_no: int) -> float:
    try:
        out = float(str(value).strip())
    except (TypeError, ValueError):
        raise InputError(f"{label}: row {row_no}: not a number: {value!r}") from None
    if not math.isfinite(out):
        raise InputError(f"{label}: row {row_no}: not finite: {value!r}")
    return out


class RoadNetwork:
    """Immutable directed graph of city locations with positive integer edge costs."""

    def __init__(self, nodes: Iterable[tuple[int, float, float]],
                 edges: Iterable[tuple[int, int, int]]):
        coords: dict[int, tuple[float, float]] = {}
        for node_id, lat, lon in nodes:
            if node_id in coords:
                raise InputError(f"duplicate node_id {node_id}")
            coords[node_id] = (lat, lon)
        self._coords = coords
        self._ids = sorted(coords)
        self._index = {node_id: i for i, node_id in enumerate(self._ids)}

        n = len(self._ids)
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        radj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        seen: set[tuple[int, int]] = set()
        for u, v, cost in edges:
            if u not in self._index:
                raise InputError(f"edge ({u},{v}) references unknown node {u}")
            if v not in self._index:
                raise InputError(f"edge ({u},{v}) references unknown node {v}")
            if u == v:
                raise InputError(f"edge ({u},{v}) is a self-loop")
            if cost <= 0:
                raise InputError(f"edge ({u},{v}) has nonpositive cost {cost}")
            if (u, v) in seen:
                raise InputError(f"duplicate edge ({u},{v})")
            seen.add((u, v))
            adj[self._index[u]].append((self._index[v], cost))
            radj[self._index[v]].append((self._index[u], cost))
        # neighbor order fixed by node id so every traversal is reproducible
        key = lambda pair: self._ids[pair[0]]
        self._adj = [sorted(out, key=key) for out in adj]
        self._radj = [sorted(inc, key=key) for inc in radj]
        self._dist_cache: dict[int, list[float]] = {}
        self._rdist_cache: dict[int, list[float]] = {}

    # -- basic accessors -------------------------------------------------

    @property
    def node_ids(self) -> list[int]:
        return list(self._ids)

    @property
    def n_nodes(self) -> int:
        return len(self._ids)

    @property
    def n_edges(self) -> int:
        return sum(len(out) for out in self._adj)

    def has_node(self, node_id: int) -> bool:
        return node_id in self._index

    def coord(self, node_id: int) -> tuple[float, float]:
        try:
            return self._coords[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node {node_id}") from None

    def neighbors(self, node_id: int) -> list[tuple[int, int]]:
        """Outgoing (neighbor_id, cost) pairs in node-id order."""
        idx = self._require(node_id)
        return [(self._ids[j], c) for j, c in self._adj[idx]]

    def edge_cost(self, u: int, v: int) -> int | None:
        ui = self._require(u)
        vi = self._require(v)
        for j, c in self._adj[ui]:
            if j == vi:
                return c
        return None

    def _require(self, node_id: int) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node {node_id}") from None

    # -- shortest paths --------------------------------------------------

    def _dijkstra(self, start_idx: int, adj: list[list[tuple[int, int]]]) -> list[float]:
        dist = [math.inf] * len(self._ids)
        dist[start_idx] = 0
        heap = [(0, start_idx)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v, cost in adj[u]:
                nd = d + cost
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist

    def _dist_from(self, src_idx: int) -> list[float]:
        table = self._dist_cache.get(src_idx)
        if table is None:
            table = self._dijkstra(src_idx, self._adj)
            self._dist_cache[src_idx] = table
        return table

    def _dist_to(self, dst_idx: int) -> list[float]:
        table = self._rdist_cache.get(dst_idx)
        if table is None:
            table = self._dijkstra(dst_idx, self._radj)
            self._rdist_cache[dst_idx] = table
        return table

    def travel_time(self, origin: int, dest: int) -> int | None:
        """Minimum-cost directed travel time in seconds, or None when unreachable."""
        oi = self._require(origin)
        di = self._require(dest)
        d = self._dist_from(oi)[di]
        return None if math.isinf(d) else int(d)

    def shortest_path(self, origin: int, dest: int) -> list[int]:
        """Minimum-cost node sequence from origin to dest.

        Among equal-cost paths the lexicographically smallest node sequence is
        returned, so routes are reproducible across runs and platforms.
        Raises UnreachableError when no directed path exists.
        """
        oi = self._require(origin)
        di = self._require(dest)
        if oi == di:
            return [origin]
        dist_to = self._dist_to(di)
        if math.isinf(dist_to[oi]):
            raise UnreachableError(f"no path from {origin} to {dest}")
        path = [origin]
        cur = oi
        while cur != di:
            step = None
            for v, cost in self._adj[cur]:  # neighbors in node-id order
                if cost + dist_to[v] == dist_to[cur]:
                    step = v
                    break
            assert step is not None, "inconsistent distance table"
            path.append(self._ids[step])
            cur = step
        return path

    def nodes_reaching(self, target: int, max_seconds: int) -> dict[int, int]:
        """Travel time to target for every node that can reach it within the bound.

        Bounded reverse search used by dispatch to prefilter taxis against the
        pickup-delay budget; not cached (the bound varies per query).
        """
        ti = self._require(target)
        dist = {ti: 0}
        heap = [(0, ti)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist.get(u, math.inf):
                continue
            for v, cost in self._radj[u]:
                nd = d + cost
                if nd <= max_seconds and nd < dist.get(v, math.inf):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return {self._ids[i]: d for i, d in dist.items()}


@dataclass(frozen=True)
class Zone:
    zone_id: str
    name: str
    centroid: tuple[float, float]
    nodes: tuple[int, ...]


@dataclass(frozen=True)
class ZonePartition:
    """Total map node -> zone, with centroids recomputed from member nodes."""

    assignment: dict[int, str]
    zones: dict[str, Zone]

    def zone_of(self, node_id: int) -> str:
        try:
            return self.assignment[node_id]
        except KeyError:
            raise UnknownNodeError(f"node {node_id} has no zone assignment") from None

    @property
    def zone_ids(self) -> list[str]:
        return sorted(self.zones)


def load_network(nodes_source: Source, edges_source: Source) -> RoadNetwork:
    """Build a validated RoadNetwork from `node_id,lat,lon` and `from,to,cost_seconds` tables."""
    nodes = []
    seen_ids: set[int] = set()
    for row_no, row in _open_rows(nodes_source, ("node_id", "lat", "lon"), "nodes"):
        node_id = _parse_int(row["node_id"], "nodes.node_id", row_no)
        if node_id in seen_ids:
            raise InputError(f"nodes: row {row_no}: duplicate node_id {node_id}")
        seen_ids.add(node_id)
        lat = _parse_float(row["lat"], "nodes.lat", row_no)
        lon = _parse_float(row["lon"], "nodes.lon", row_no)
        nodes.append((node_id, lat, lon))

    edges = []
    seen_edges: set[tuple[int, int]] = set()
    for row_no, row in _open_rows(edges_source, ("from", "to", "cost_seconds"), "edges"):
        u = _parse_int(row["from"], "edges.from", row_no)
        v = _parse_int(row["to"], "edges.to", row_no)
        cost = _parse_int(row["cost_seconds"], "edges.cost_seconds", row_no)
        if u not in seen_ids or v not in seen_ids:
            missing = u if u not in seen_ids else v
            raise InputError(f"edges: row {row_no}: dangling edge reference, unknown node {missing}")
        if u == v:
            raise InputError(f"edges: row {row_no}: self-loop on node {u}")
        if cost <= 0:
            raise InputError(f"edges: row {row_no}: nonpositive cost {cost}")
        if (u, v) in seen_edges:
            raise InputError(f"edges: row {row_no}: duplicate edge ({u},{v})")
        seen_edges.add((u, v))
        edges.append((u, v, cost))

    return RoadNetwork(nodes, edges)


def load_zones(net: RoadNetwork, zone_source: Source) -> ZonePartition:
    """Load the `node_id,zone_id,zone_name` table covering every network node exactly once."""
    assignment: dict[int, str] = {}
    names: dict[str, str] = {}
    members: dict[str, list[int]] = {}
    for row_no, row in _open_rows(zone_source, ("node_id", "zone_id", "zone_name"), "zones"):
        node_id = _parse_int(row["node_id"], "zones.node_id", row_no)
        zone_id = str(row["zone_id"]).strip()
        name = str(row["zone_name"]).strip()
        if not zone_id:
            raise InputError(f"zones: row {row_no}: empty zone_id")
        if not net.has_node(node_id):
            raise InputError(f"zones: row {row_no}: unknown node {node_id}")
        if node_id in assignment:
            raise InputError(f"zones: row {row_no}: node {node_id} assigned twice")
        if zone_id in names and names[zone_id] != name:
            raise InputError(
                f"zones: row {row_no}: zone {zone_id} renamed {names[zone_id]!r} -> {name!r}")
        assignment[node_id] = zone_id
        names[zone_id] = name
        members.setdefault(zone_id, []).append(node_id)

    unassigned = [n for n in net.node_ids if n not in assignment]
    if unassigned:
        raise InputError(f"zones: nodes missing a zone assignment: {unassigned[:10]}")

    zones = {}
    for zone_id in sorted(members):
        node_list = sorted(members[zone_id])  # fixed order: centroid permutation-invariant
        lat = sum(net.coord(n)[0] for n in node_list) / len(node_list)
        lon = sum(net.coord(n)[1] for n in node_list) / len(node_list)
        zones[zone_id] = Zone(zone_id, names[zone_id], (lat, lon), tuple(node_list))
    return ZonePartition(assignment=assignment, zones=zones)

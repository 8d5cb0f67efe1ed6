/** The four stackable map layers. Each renders one payload into its own SVG
 * group and applies presentation scaling only: every number on screen is a
 * payload field passed through a function from scales.ts. Layers never touch
 * each other's groups, so stacking is composition, not mutation.
 */

import {
  convexHull, divergingColor, flowWidth, Projection, sequentialColor, taxiRadius,
} from "./scales.js";
import type {
  ChoroplethPayload, FlowsPayload, NetworkPayload, RequestsPayload, TaxisPayload,
} from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function clear(group: Element): void {
  while (group.firstChild) group.removeChild(group.firstChild);
}

function el(name: string, attrs: Record<string, string | number>): Element {
  const node = document.createElementNS(SVG_NS, name);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, String(v));
  }
  return node;
}

/** Taxi circles: radius tracks occupancy, fill diverges red-white-green
 * around the fleet-mean matches in the window; clicking selects the taxi and
 * overlays its realized path plus its active requests' stops. */
export class TaxiLayer {
  onSelect: (taxiId: number | null) => void = () => {};

  constructor(private group: Element, private proj: Projection) {}

  render(payload: TaxisPayload): void {
    clear(this.group);
    const matches = payload.taxis.map((t) => t.matches_in_window);
    const min = matches.length ? Math.min(...matches) : 0;
    const max = matches.length ? Math.max(...matches) : 0;
    const mean = payload.fleet_mean_matches;

    for (const taxi of payload.taxis) {
      const circle = el("circle", {
        cx: this.proj.x(taxi.lon),
        cy: this.proj.y(taxi.lat),
        r: taxiRadius(taxi.n_onboard),
        fill: divergingColor(taxi.matches_in_window, min, mean, max),
        stroke: "#333",
        "stroke-width": 0.5,
        "data-taxi-id": taxi.taxi_id,
        "data-onboard": taxi.n_onboard,
        "data-matches": taxi.matches_in_window,
        class: "taxi-circle",
      });
      circle.addEventListener("click", () => this.onSelect(taxi.taxi_id));
      this.group.appendChild(circle);
    }
  }

  /** Orange overlay for the selected taxi's realized path and its stops. */
  renderPath(payload: TaxisPayload, network: NetworkPayload): void {
    if (!payload.path) return;
    const coords = new Map(network.nodes.map((n) => [n.node_id, n]));
    const points = payload.path.nodes
      .map((id) => coords.get(id))
      .filter((n) => n !== undefined)
      .map((n) => `${this.proj.x(n!.lon)},${this.proj.y(n!.lat)}`)
      .join(" ");
    this.group.appendChild(el("polyline", {
      points,
      fill: "none",
      stroke: "orange",
      "stroke-width": 2.5,
      class: "taxi-path",
    }));
    for (const stop of payload.path.stops) {
      const node = coords.get(stop.node_id);
      if (!node) continue;
      this.group.appendChild(el("rect", {
        x: this.proj.x(node.lon) - 3,
        y: this.proj.y(node.lat) - 3,
        width: 6,
        height: 6,
        fill: stop.kind === "pickup" ? "green" : "red",
        class: `taxi-stop taxi-stop-${stop.kind}`,
        "data-request-id": stop.request_id,
      }));
    }
  }
}

/** Green pickup circles for the epoch's arrivals; red dropoffs toggleable. */
export class RequestLayer {
  constructor(private group: Element, private proj: Projection) {}

  render(payload: RequestsPayload, showDropoffs: boolean): void {
    clear(this.group);
    for (const request of payload.requests) {
      this.group.appendChild(el("circle", {
        cx: this.proj.x(request.pickup_lon),
        cy: this.proj.y(request.pickup_lat),
        r: 3,
        fill: "green",
        class: "request-pickup",
        "data-request-id": request.request_id,
        "data-matched": String(request.matched),
      }));
      if (showDropoffs) {
        this.group.appendChild(el("circle", {
          cx: this.proj.x(request.dropoff_lon),
          cy: this.proj.y(request.dropoff_lat),
          r: 3,
          fill: "red",
          class: "request-dropoff",
          "data-request-id": request.request_id,
        }));
      }
    }
  }
}

/** Directed zone-to-zone flow edges between centroids. Width follows the
 * square root of the matched count; color follows the selected metric.
 * Hovering a zone hides non-incident edges and shows the zone's boundary. */
export class InterzoneLayer {
  onHoverZone: (zoneId: string | null) => void = () => {};

  constructor(private group: Element, private proj: Projection) {}

  render(payload: FlowsPayload, network: NetworkPayload,
         hoveredZone: string | null): void {
    clear(this.group);
    const detours = payload.pairs
      .map((p) => p.mean_detour_s)
      .filter((d): d is number => d !== undefined);
    const dMin = detours.length ? Math.min(...detours) : 0;
    const dMax = detours.length ? Math.max(...detours) : 0;

    for (const pair of payload.pairs) {
      if (hoveredZone !== null
          && pair.from_zone !== hoveredZone && pair.to_zone !== hoveredZone) {
        continue;
      }
      let color: string;
      if (payload.metric === "acceptance") {
        color = acceptanceColor(pair.acceptance_ratio);
      } else if (pair.mean_detour_s !== undefined) {
        color = sequentialColor(pair.mean_detour_s, dMin, dMax);
      } else {
        continue;  // detour metric with no completed rides: nothing to encode
      }
      const line = el("line", {
        x1: this.proj.x(pair.from_centroid.lon),
        y1: this.proj.y(pair.from_centroid.lat),
        x2: this.proj.x(pair.to_centroid.lon),
        y2: this.proj.y(pair.to_centroid.lat),
        stroke: color,
        "stroke-width": flowWidth(pair.matched),
        class: "flow-edge",
        "data-from": pair.from_zone,
        "data-to": pair.to_zone,
        "data-matched": pair.matched,
      });
      this.group.appendChild(line);
    }

    for (const zone of network.zones) {
      const dot = el("circle", {
        cx: this.proj.x(zone.centroid.lon),
        cy: this.proj.y(zone.centroid.lat),
        r: 5,
        fill: "#555",
        class: "zone-node",
        "data-zone-id": zone.zone_id,
      });
      dot.addEventListener("mouseenter", () => this.onHoverZone(zone.zone_id));
      dot.addEventListener("mouseleave", () => this.onHoverZone(null));
      this.group.appendChild(dot);
    }

    if (hoveredZone !== null) {
      const members = network.nodes.filter((n) => n.zone_id === hoveredZone);
      if (members.length >= 3) {
        const hull = convexHull(members.map(
          (n) => [this.proj.x(n.lon), this.proj.y(n.lat)] as [number, number]));
        this.group.appendChild(el("polygon", {
          points: hull.map(([x, y]) => `${x},${y}`).join(" "),
          fill: "none",
          stroke: "#222",
          "stroke-dasharray": "4 2",
          class: "zone-boundary",
          "data-zone-id": hoveredZone,
        }));
      }
    }
  }
}

/** Acceptance-ratio color: the legend's endpoints are red at 0, green at 1. */
export function acceptanceColor(ratio: number): string {
  return divergingColor(ratio, 0, 0.5, 1);
}

/** Zones filled by mean pickup delay on a sequential scale; no data, no fill. */
export class ChoroplethLayer {
  constructor(private group: Element, private proj: Projection) {}

  render(payload: ChoroplethPayload, network: NetworkPayload): void {
    clear(this.group);
    const values = payload.zones.map((z) => z.mean_pickup_delay_s);
    const min = values.length ? Math.min(...values) : 0;
    const max = values.length ? Math.max(...values) : 0;
    const byZone = new Map(payload.zones.map((z) => [z.zone_id, z]));

    for (const zone of network.zones) {
      const members = network.nodes.filter((n) => n.zone_id === zone.zone_id);
      if (members.length < 3) continue;
      const hull = convexHull(members.map(
        (n) => [this.proj.x(n.lon), this.proj.y(n.lat)] as [number, number]));
      const data = byZone.get(zone.zone_id);
      this.group.appendChild(el("polygon", {
        points: hull.map(([x, y]) => `${x},${y}`).join(" "),
        fill: data ? sequentialColor(data.mean_pickup_delay_s, min, max) : "none",
        stroke: "#999",
        class: "choropleth-zone",
        "data-zone-id": zone.zone_id,
        "data-delay": data ? data.mean_pickup_delay_s : "",
      }));
    }
    // legend bounds equal the payload extremes
    this.group.appendChild(el("text", {
      x: 4, y: 12, class: "choropleth-legend",
      "data-legend-min": min, "data-legend-max": max,
    }));
  }
}

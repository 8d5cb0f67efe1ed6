/** The three graph-view chart families, each under a collapsible header:
 * request counts per epoch, delay series with day-mean reference lines, and
 * per-bin box plots of completed requests across drivers (min, p10, p25,
 * median, p75, p90, max). Glyph positions come straight from payload fields
 * through one linear scale per chart.
 */

import type { BoxplotsPayload, DelaySeriesPayload, RequestSeriesPayload } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 560;
const HEIGHT = 160;
const PAD = 24;

function el(name: string, attrs: Record<string, string | number>): Element {
  const node = document.createElementNS(SVG_NS, name);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, String(v));
  }
  return node;
}

function collapsible(root: Element, title: string): Element {
  const details = document.createElement("details");
  details.setAttribute("open", "");
  const summary = document.createElement("summary");
  summary.textContent = title;
  details.appendChild(summary);
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(WIDTH));
  svg.setAttribute("height", String(HEIGHT));
  details.appendChild(svg);
  root.appendChild(details);
  return svg;
}

class LinearScale {
  constructor(private d0: number, private d1: number,
              private r0: number, private r1: number) {}

  map(v: number): number {
    const t = this.d1 === this.d0 ? 0.5 : (v - this.d0) / (this.d1 - this.d0);
    return this.r0 + t * (this.r1 - this.r0);
  }
}

function polyline(svg: Element, xs: number[], ys: number[], color: string,
                  cls: string): void {
  if (!xs.length) return;
  svg.appendChild(el("polyline", {
    points: xs.map((x, i) => `${x},${ys[i]}`).join(" "),
    fill: "none",
    stroke: color,
    class: cls,
  }));
}

export function renderRequestCounts(root: Element, payload: RequestSeriesPayload): void {
  const svg = collapsible(root, "Incoming requests (total / matched / unmatched)");
  const rows = payload.epochs;
  if (!rows.length) return;
  const x = new LinearScale(0, Math.max(1, rows.length - 1), PAD, WIDTH - PAD);
  const top = Math.max(1, ...rows.map((r) => r.total));
  const y = new LinearScale(0, top, HEIGHT - PAD, PAD);
  const xs = rows.map((r) => x.map(r.epoch));
  polyline(svg, xs, rows.map((r) => y.map(r.total)), "#555", "series-total");
  polyline(svg, xs, rows.map((r) => y.map(r.matched)), "green", "series-matched");
  polyline(svg, xs, rows.map((r) => y.map(r.unmatched)), "red", "series-unmatched");
}

export function renderDelays(root: Element, payload: DelaySeriesPayload): void {
  const svg = collapsible(root, "Pickup and detour delays");
  const pts = payload.points;
  if (!pts.length) return;
  const epochs = pts.map((p) => p.epoch);
  const x = new LinearScale(Math.min(...epochs), Math.max(...epochs, 1),
                            PAD, WIDTH - PAD);
  const top = Math.max(1, ...pts.map((p) =>
    Math.max(p.mean_pickup_delay_s, p.mean_detour_delay_s)));
  const y = new LinearScale(0, top, HEIGHT - PAD, PAD);
  const xs = pts.map((p) => x.map(p.epoch));
  polyline(svg, xs, pts.map((p) => y.map(p.mean_pickup_delay_s)), "steelblue",
           "series-pickup-delay");
  polyline(svg, xs, pts.map((p) => y.map(p.mean_detour_delay_s)), "darkorange",
           "series-detour-delay");
  if (payload.day_mean_pickup_delay_s !== undefined) {
    svg.appendChild(el("line", {
      x1: PAD, x2: WIDTH - PAD,
      y1: y.map(payload.day_mean_pickup_delay_s),
      y2: y.map(payload.day_mean_pickup_delay_s),
      stroke: "steelblue", "stroke-dasharray": "5 3", class: "day-mean-pickup",
      "data-value": payload.day_mean_pickup_delay_s,
    }));
  }
  if (payload.day_mean_detour_delay_s !== undefined) {
    svg.appendChild(el("line", {
      x1: PAD, x2: WIDTH - PAD,
      y1: y.map(payload.day_mean_detour_delay_s),
      y2: y.map(payload.day_mean_detour_delay_s),
      stroke: "darkorange", "stroke-dasharray": "5 3", class: "day-mean-detour",
      "data-value": payload.day_mean_detour_delay_s,
    }));
  }
}

export function renderBoxplots(root: Element, payload: BoxplotsPayload): void {
  const svg = collapsible(
    root, payload.bin === "hour" ? "Completed requests per driver (hourly)"
                                 : "Completed requests per driver (whole day)");
  const bins = payload.bins.filter((b) => b.summary.count > 0);
  if (!bins.length) return;
  const top = Math.max(1, ...bins.map((b) => b.summary.max ?? 0));
  const y = new LinearScale(0, top, HEIGHT - PAD, PAD);
  const slot = (WIDTH - 2 * PAD) / Math.max(1, bins.length);
  const boxW = Math.min(24, slot * 0.6);

  bins.forEach((bin, i) => {
    const s = bin.summary;
    const cx = PAD + slot * (i + 0.5);
    const g = el("g", { class: "boxplot", "data-bin": bin.bin_index });
    // whisker spans the full range
    g.appendChild(el("line", {
      x1: cx, x2: cx, y1: y.map(s.min!), y2: y.map(s.max!),
      stroke: "#444", class: "box-whisker",
      "data-min": s.min!, "data-max": s.max!,
    }));
    // interquartile box
    g.appendChild(el("rect", {
      x: cx - boxW / 2, y: y.map(s.p75!),
      width: boxW, height: Math.max(0, y.map(s.p25!) - y.map(s.p75!)),
      fill: "orange", stroke: "#444", class: "box-iqr",
      "data-p25": s.p25!, "data-p75": s.p75!,
    }));
    // median line
    g.appendChild(el("line", {
      x1: cx - boxW / 2, x2: cx + boxW / 2,
      y1: y.map(s.median!), y2: y.map(s.median!),
      stroke: "#000", class: "box-median", "data-median": s.median!,
    }));
    // p10 / p90 ticks on the whisker
    for (const [cls, value] of [["box-p10", s.p10!], ["box-p90", s.p90!]] as const) {
      g.appendChild(el("line", {
        x1: cx - boxW / 4, x2: cx + boxW / 4,
        y1: y.map(value), y2: y.map(value),
        stroke: "#444", class: cls, "data-value": value,
      }));
    }
    svg.appendChild(g);
  });
  svg.setAttribute("data-scale-top", String(top));
}

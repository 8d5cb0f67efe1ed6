/** Pure presentation math: every rule a layer applies to a served number.
 *
 * Keeping these as plain functions makes the "UI does no aggregation"
 * property directly testable: layers only map payload fields through them.
 */

/** Circle radius strictly increasing in the number of onboard passengers. */
export function taxiRadius(nOnboard: number, base = 3, step = 1.5): number {
  return base + step * nOnboard;
}

/** Red-white-green diverging scale centered on the fleet mean.
 *  Values at the mean render white; the endpoints saturate at min/max. */
export function divergingColor(value: number, min: number, mean: number,
                               max: number): string {
  let t: number;
  if (value === mean) {
    t = 0;
  } else if (value < mean) {
    t = mean === min ? -1 : -(mean - value) / (mean - min);
  } else {
    t = max === mean ? 1 : (value - mean) / (max - mean);
  }
  t = Math.max(-1, Math.min(1, t));
  if (t < 0) {
    const s = 1 + t; // 0 at full red, 1 at white
    return rgb(255, Math.round(255 * s), Math.round(255 * s));
  }
  const s = 1 - t;
  return rgb(Math.round(255 * s), 255, Math.round(255 * s));
}

/** Sequential white-to-dark-blue scale for the pickup-delay choropleth:
 *  larger delays are strictly darker. */
export function sequentialColor(value: number, min: number, max: number): string {
  const t = max === min ? 1 : (value - min) / (max - min);
  const channel = Math.round(235 - 180 * t);
  return rgb(channel, channel, 255);
}

/** Flow edge width proportional to the square root of the matched count. */
export function flowWidth(matched: number, k = 2): number {
  return k * Math.sqrt(matched);
}

/** Relative luminance helper used by tests to check "strictly darker". */
export function luminance(color: string): number {
  const m = /^rgb\((\d+),(\d+),(\d+)\)$/.exec(color);
  if (!m) throw new Error(`not an rgb() color: ${color}`);
  const [r, g, b] = [Number(m[1]), Number(m[2]), Number(m[3])];
  return 0.2126 * r + 0.7152 * g + 0.0722 * b;
}

function rgb(r: number, g: number, b: number): string {
  return `rgb(${r},${g},${b})`;
}

export interface Extent {
  minLat: number;
  maxLat: number;
  minLon: number;
  maxLon: number;
}

/** Linear lat/lon -> pixel projection fitted to a viewport with padding. */
export class Projection {
  constructor(private extent: Extent, private width: number, private height: number,
              private pad = 16) {}

  x(lon: number): number {
    const { minLon, maxLon } = this.extent;
    const t = maxLon === minLon ? 0.5 : (lon - minLon) / (maxLon - minLon);
    return this.pad + t * (this.width - 2 * this.pad);
  }

  y(lat: number): number {
    const { minLat, maxLat } = this.extent;
    const t = maxLat === minLat ? 0.5 : (lat - minLat) / (maxLat - minLat);
    return this.height - this.pad - t * (this.height - 2 * this.pad);
  }
}

export function extentOf(points: { lat: number; lon: number }[]): Extent {
  const lats = points.map((p) => p.lat);
  const lons = points.map((p) => p.lon);
  return {
    minLat: Math.min(...lats),
    maxLat: Math.max(...lats),
    minLon: Math.min(...lons),
    maxLon: Math.max(...lons),
  };
}

/** Convex hull (Andrew's monotone chain) of zone member nodes; the zone
 *  boundary shown on hover is presentation geometry, not data. */
export function convexHull(points: [number, number][]): [number, number][] {
  const pts = [...points].sort((a, b) => a[0] - b[0] || a[1] - b[1]);
  if (pts.length <= 2) return pts;
  const cross = (o: [number, number], a: [number, number], b: [number, number]) =>
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  const lower: [number, number][] = [];
  for (const p of pts) {
    while (lower.length >= 2 && cross(lower[lower.length - 2], lower[lower.length - 1], p) <= 0)
      lower.pop();
    lower.push(p);
  }
  const upper: [number, number][] = [];
  for (const p of [...pts].reverse()) {
    while (upper.length >= 2 && cross(upper[upper.length - 2], upper[upper.length - 1], p) <= 0)
      upper.pop();
    upper.push(p);
  }
  return lower.slice(0, -1).concat(upper.slice(0, -1));
}

/** Pinned fixture payloads and a recording mock fetch. */

import type { FetchLike } from "../src/api.js";
import type {
  BoxplotsPayload, ChoroplethPayload, DelaySeriesPayload, FlowsPayload,
  NetworkPayload, RequestsPayload, RequestSeriesPayload, RunsPayload, TaxisPayload,
} from "../src/types.js";

export const network: NetworkPayload = {
  api_version: "fairride-api/1",
  nodes: [
    { node_id: 1, lat: 0, lon: 0, zone_id: "A" },
    { node_id: 2, lat: 1, lon: 0, zone_id: "A" },
    { node_id: 3, lat: 0, lon: 1, zone_id: "A" },
    { node_id: 4, lat: 1, lon: 1, zone_id: "A" },
    { node_id: 5, lat: 0, lon: 3, zone_id: "B" },
    { node_id: 6, lat: 1, lon: 3, zone_id: "B" },
    { node_id: 7, lat: 0, lon: 4, zone_id: "B" },
    { node_id: 8, lat: 1, lon: 4, zone_id: "B" },
  ],
  zones: [
    { zone_id: "A", name: "west", centroid: { lat: 0.5, lon: 0.5 }, n_nodes: 4 },
    { zone_id: "B", name: "east", centroid: { lat: 0.5, lon: 3.5 }, n_nodes: 4 },
  ],
};

export const taxis: TaxisPayload = {
  api_version: "fairride-api/1",
  epoch: 10,
  window: 5,
  fleet_mean_matches: 2,
  taxis: [
    { taxi_id: 0, node_id: 1, lat: 0, lon: 0, progress_s: 0, n_onboard: 0,
      matches_in_window: 0 },
    { taxi_id: 1, node_id: 4, lat: 1, lon: 1, progress_s: 30, n_onboard: 1,
      matches_in_window: 2 },
    { taxi_id: 2, node_id: 6, lat: 1, lon: 3, progress_s: 0, n_onboard: 3,
      matches_in_window: 4 },
  ],
};

export const taxisWithPath: TaxisPayload = {
  ...taxis,
  path: {
    taxi_id: 1,
    nodes: [4, 3, 1],
    stops: [
      { timestamp_s: 660, kind: "pickup", request_id: 9, node_id: 3 },
      { timestamp_s: 780, kind: "dropoff", request_id: 9, node_id: 1 },
    ],
  },
};

export const requests: RequestsPayload = {
  api_version: "fairride-api/1",
  epoch: 10,
  filter: "all",
  requests: [
    { request_id: 1, pickup: 1, dropoff: 5, pickup_lat: 0, pickup_lon: 0,
      dropoff_lat: 0, dropoff_lon: 3, matched: true, fare: 5 },
    { request_id: 2, pickup: 2, dropoff: 6, pickup_lat: 1, pickup_lon: 0,
      dropoff_lat: 1, dropoff_lon: 3, matched: true, fare: 5 },
    { request_id: 3, pickup: 5, dropoff: 1, pickup_lat: 0, pickup_lon: 3,
      dropoff_lat: 0, dropoff_lon: 0, matched: false, fare: 5 },
  ],
};

/** matched counts 1, 4, 9: flow widths must stand in ratio 1:2:3 */
export const flows: FlowsPayload = {
  api_version: "fairride-api/1",
  epoch: 10,
  window: 5,
  metric: "acceptance",
  pairs: [
    { from_zone: "A", to_zone: "B", incoming: 2, matched: 1, acceptance_ratio: 0.5,
      mean_detour_s: 60, from_centroid: { lat: 0.5, lon: 0.5 },
      to_centroid: { lat: 0.5, lon: 3.5 }, metric_value: 0.5 },
    { from_zone: "B", to_zone: "A", incoming: 4, matched: 4, acceptance_ratio: 1.0,
      mean_detour_s: 30, from_centroid: { lat: 0.5, lon: 3.5 },
      to_centroid: { lat: 0.5, lon: 0.5 }, metric_value: 1.0 },
    { from_zone: "A", to_zone: "A", incoming: 9, matched: 9, acceptance_ratio: 1.0,
      from_centroid: { lat: 0.5, lon: 0.5 },
      to_centroid: { lat: 0.5, lon: 0.5 }, metric_value: 1.0 },
  ],
};

export const choropleth: ChoroplethPayload = {
  api_version: "fairride-api/1",
  epoch: 10,
  window: 5,
  zones: [{ zone_id: "A", mean_pickup_delay_s: 30, count: 3 }],
  // zone B has no picked-up requests in the window: absent, must stay unfilled
};

export const requestSeries: RequestSeriesPayload = {
  api_version: "fairride-api/1",
  epochs: [
    { epoch: 0, total: 3, matched: 2, unmatched: 1 },
    { epoch: 1, total: 1, matched: 1, unmatched: 0 },
    { epoch: 2, total: 0, matched: 0, unmatched: 0 },
  ],
};

export const delaySeries: DelaySeriesPayload = {
  api_version: "fairride-api/1",
  points: [
    { epoch: 0, mean_pickup_delay_s: 30, mean_detour_delay_s: 10 },
    { epoch: 1, mean_pickup_delay_s: 90, mean_detour_delay_s: 0 },
  ],
  day_mean_pickup_delay_s: 45,
  day_mean_detour_delay_s: 7.5,
};

export const boxplots: BoxplotsPayload = {
  api_version: "fairride-api/1",
  bin: "day",
  bins: [{
    bin_index: 0,
    summary: { count: 10, min: 0, p10: 0.9, p25: 2.25, median: 4.5,
               p75: 6.75, p90: 8.1, max: 9, mean: 4.5 },
  }],
};

export const emptyBoxplots: BoxplotsPayload = {
  api_version: "fairride-api/1",
  bin: "hour",
  bins: [],
};

export const runs: RunsPayload = {
  api_version: "fairride-api/1",
  runs: [
    { run_id: "rpd", policy: "rpd", seed: 1, digest_mismatch: false,
      config: { horizon_epochs: 30, epoch_length_s: 60, n_taxis: 3 } },
    { run_id: "greedy", policy: "greedy", seed: 1, digest_mismatch: false,
      config: { horizon_epochs: 30, epoch_length_s: 60, n_taxis: 3 } },
  ],
};

export interface RecordedCall {
  url: string;
  path: string;
  params: URLSearchParams;
}

/** Serves the fixtures for any run id and records every call. */
export function mockFetch(): { fetchFn: FetchLike; calls: RecordedCall[] } {
  const calls: RecordedCall[] = [];
  const fetchFn: FetchLike = async (url: string) => {
    const parsed = new URL(url, "http://test");
    calls.push({ url, path: parsed.pathname, params: parsed.searchParams });
    const body = route(parsed.pathname, parsed.searchParams);
    return {
      ok: body !== undefined,
      status: body === undefined ? 404 : 200,
      json: async () => body,
    };
  };
  return { fetchFn, calls };
}

function route(path: string, params: URLSearchParams): unknown {
  if (path === "/runs") return runs;
  const m = /^\/runs\/([^/]+)\/(.+)$/.exec(path);
  if (!m) return undefined;
  const endpoint = m[2];
  switch (endpoint) {
    case "network": return network;
    case "taxis": return params.has("taxi") ? taxisWithPath : taxis;
    case "requests": return filteredRequests(params.get("filter") ?? "all");
    case "zones/flows": return { ...flows, metric: params.get("metric") ?? "acceptance" };
    case "zones/choropleth": return choropleth;
    case "timeseries/requests": return requestSeries;
    case "timeseries/delays": return delaySeries;
    case "timeseries/boxplots":
      return params.get("bin") === "day" ? boxplots : emptyBoxplots;
    default: return undefined;
  }
}

function filteredRequests(filter: string): RequestsPayload {
  const kept = requests.requests.filter((r) =>
    filter === "all" || (filter === "matched" ? r.matched : !r.matched));
  return { ...requests, filter: filter as RequestsPayload["filter"], requests: kept };
}

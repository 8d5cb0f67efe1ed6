/** Payload shapes of the fairride-api/1 endpoints the UI consumes. */

export interface RunInfo {
  run_id: string;
  policy: string;
  seed: number;
  config: { horizon_epochs: number; epoch_length_s: number; n_taxis: number };
  digest_mismatch: boolean;
}

export interface RunsPayload {
  api_version: string;
  runs: RunInfo[];
}

export interface NetworkNode {
  node_id: number;
  lat: number;
  lon: number;
  zone_id: string;
}

export interface ZoneInfo {
  zone_id: string;
  name: string;
  centroid: { lat: number; lon: number };
  n_nodes: number;
}

export interface NetworkPayload {
  api_version: string;
  nodes: NetworkNode[];
  zones: ZoneInfo[];
}

export interface TaxiRecord {
  taxi_id: number;
  node_id: number;
  lat: number;
  lon: number;
  progress_s: number;
  n_onboard: number;
  matches_in_window: number;
}

export interface TaxiPath {
  taxi_id: number;
  nodes: number[];
  stops: { timestamp_s: number; kind: "pickup" | "dropoff"; request_id: number; node_id: number }[];
}

export interface TaxisPayload {
  api_version: string;
  epoch: number;
  window: number;
  fleet_mean_matches: number;
  taxis: TaxiRecord[];
  path?: TaxiPath;
}

export interface RequestRecord {
  request_id: number;
  pickup: number;
  dropoff: number;
  pickup_lat: number;
  pickup_lon: number;
  dropoff_lat: number;
  dropoff_lon: number;
  matched: boolean;
  fare: number;
}

export interface RequestsPayload {
  api_version: string;
  epoch: number;
  filter: RequestFilter;
  requests: RequestRecord[];
  next_cursor?: number;
}

export interface FlowPair {
  from_zone: string;
  to_zone: string;
  incoming: number;
  matched: number;
  acceptance_ratio: number;
  mean_detour_s?: number;
  metric_value?: number;
  from_centroid: { lat: number; lon: number };
  to_centroid: { lat: number; lon: number };
}

export interface FlowsPayload {
  api_version: string;
  epoch: number;
  window: number;
  metric: InterZoneMetric;
  pairs: FlowPair[];
}

export interface ChoroplethZone {
  zone_id: string;
  mean_pickup_delay_s: number;
  count: number;
}

export interface ChoroplethPayload {
  api_version: string;
  epoch: number;
  window: number;
  zones: ChoroplethZone[];
}

export interface RequestSeriesPoint {
  epoch: number;
  total: number;
  matched: number;
  unmatched: number;
}

export interface RequestSeriesPayload {
  api_version: string;
  epochs: RequestSeriesPoint[];
}

export interface DelaySeriesPoint {
  epoch: number;
  mean_pickup_delay_s: number;
  mean_detour_delay_s: number;
}

export interface DelaySeriesPayload {
  api_version: string;
  points: DelaySeriesPoint[];
  day_mean_pickup_delay_s?: number;
  day_mean_detour_delay_s?: number;
}

export interface SummaryObj {
  count: number;
  min?: number;
  p10?: number;
  p25?: number;
  median?: number;
  p75?: number;
  p90?: number;
  max?: number;
  mean?: number;
}

export interface BoxplotsPayload {
  api_version: string;
  bin: "hour" | "day";
  bins: { bin_index: number; summary: SummaryObj }[];
}

export type RequestFilter = "all" | "matched" | "unmatched";
export type InterZoneMetric = "acceptance" | "detour";
export type LayerName = "taxi" | "request" | "interzone" | "zone";

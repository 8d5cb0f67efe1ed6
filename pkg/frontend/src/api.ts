/** Thin typed client for fairride-api/1 with latest-wins cancellation.
 *
 * The fetch function is injectable so tests drive the UI from pinned
 * fixtures without a server.
 */

import type {
  BoxplotsPayload, ChoroplethPayload, DelaySeriesPayload, FlowsPayload,
  InterZoneMetric, NetworkPayload, RequestFilter, RequestSeriesPayload,
  RequestsPayload, RunsPayload, TaxisPayload,
} from "./types.js";

export type FetchLike = (url: string, init?: { signal?: AbortSignal }) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export class ApiClient {
  private controllers = new Map<string, AbortController>();

  constructor(private baseUrl: string = "", private fetchFn: FetchLike = fetch) {}

  /** GET returning JSON; a second call with the same channel aborts the first. */
  private async get<T>(path: string, params: Record<string, string | number> = {},
                       channel?: string): Promise<T> {
    const query = Object.entries(params)
      .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`)
      .join("&");
    const url = `${this.baseUrl}${path}${query ? "?" + query : ""}`;
    let signal: AbortSignal | undefined;
    if (channel !== undefined && typeof AbortController !== "undefined") {
      this.controllers.get(channel)?.abort();
      const controller = new AbortController();
      this.controllers.set(channel, controller);
      signal = controller.signal;
    }
    const response = await this.fetchFn(url, { signal });
    if (!response.ok) {
      throw new Error(`${path}: HTTP ${response.status}`);
    }
    return (await response.json()) as T;
  }

  runs(): Promise<RunsPayload> {
    return this.get("/runs");
  }

  network(runId: string): Promise<NetworkPayload> {
    return this.get(`/runs/${runId}/network`);
  }

  taxis(runId: string, epoch: number, window: number, taxi?: number): Promise<TaxisPayload> {
    const params: Record<string, string | number> = { epoch, window };
    if (taxi !== undefined) params.taxi = taxi;
    return this.get(`/runs/${runId}/taxis`, params, `taxis:${runId}`);
  }

  requests(runId: string, epoch: number, filter: RequestFilter): Promise<RequestsPayload> {
    return this.get(`/runs/${runId}/requests`, { epoch, filter }, `requests:${runId}`);
  }

  flows(runId: string, epoch: number, window: number,
        metric: InterZoneMetric): Promise<FlowsPayload> {
    return this.get(`/runs/${runId}/zones/flows`, { epoch, window, metric },
                    `flows:${runId}`);
  }

  choropleth(runId: string, epoch: number, window: number): Promise<ChoroplethPayload> {
    return this.get(`/runs/${runId}/zones/choropleth`, { epoch, window },
                    `choropleth:${runId}`);
  }

  requestSeries(runId: string): Promise<RequestSeriesPayload> {
    return this.get(`/runs/${runId}/timeseries/requests`);
  }

  delaySeries(runId: string): Promise<DelaySeriesPayload> {
    return this.get(`/runs/${runId}/timeseries/delays`);
  }

  boxplots(runId: string, bin: "hour" | "day"): Promise<BoxplotsPayload> {
    return this.get(`/runs/${runId}/timeseries/boxplots`, { bin });
  }
}

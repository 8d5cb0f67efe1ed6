/** One run's pane: the stacked map layers plus the graph view, refreshed
 * from the API whenever the shared view state changes. Fetches are
 * latest-wins per endpoint (the client aborts superseded ones), so a stale
 * response can never paint over a newer one.
 */

import { ApiClient } from "./api.js";
import { renderBoxplots, renderDelays, renderRequestCounts } from "./charts.js";
import { ChoroplethLayer, InterzoneLayer, RequestLayer, TaxiLayer } from "./layers.js";
import { extentOf, Projection } from "./scales.js";
import type { ViewState, ViewStateStore } from "./state.js";
import type { NetworkPayload } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const MAP_W = 560;
const MAP_H = 480;

export class RunPane {
  readonly root: HTMLElement;
  private title: HTMLElement;
  private graphRoot: HTMLElement;
  private taxiLayer!: TaxiLayer;
  private requestLayer!: RequestLayer;
  private interzoneLayer!: InterzoneLayer;
  private choroplethLayer!: ChoroplethLayer;
  private groups: Record<string, Element> = {};
  private network!: NetworkPayload;
  private proj!: Projection;

  constructor(private api: ApiClient, private store: ViewStateStore,
              public runId: string) {
    this.root = document.createElement("section");
    this.root.className = "run-pane";
    this.root.dataset.runId = runId;
    this.title = document.createElement("h2");
    this.title.textContent = runId;
    this.root.appendChild(this.title);

    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("width", String(MAP_W));
    svg.setAttribute("height", String(MAP_H));
    svg.setAttribute("class", "map-view");
    // bottom to top: choropleth, flows, requests, taxis
    for (const name of ["zone", "interzone", "request", "taxi"]) {
      const g = document.createElementNS(SVG_NS, "g");
      g.setAttribute("class", `layer-${name}`);
      svg.appendChild(g);
      this.groups[name] = g;
    }
    this.root.appendChild(svg);

    this.graphRoot = document.createElement("div");
    this.graphRoot.className = "graph-view";
    this.root.appendChild(this.graphRoot);
  }

  /** Must resolve before the first render. */
  async init(): Promise<void> {
    this.network = await this.api.network(this.runId);
    this.proj = new Projection(extentOf(this.network.nodes), MAP_W, MAP_H);
    this.taxiLayer = new TaxiLayer(this.groups.taxi, this.proj);
    this.requestLayer = new RequestLayer(this.groups.request, this.proj);
    this.interzoneLayer = new InterzoneLayer(this.groups.interzone, this.proj);
    this.choroplethLayer = new ChoroplethLayer(this.groups.zone, this.proj);
    this.taxiLayer.onSelect = (taxiId) => this.store.update({ selectedTaxi: taxiId });
    this.interzoneLayer.onHoverZone = (zone) => this.store.update({ hoveredZone: zone });
    await this.renderGraphs();
  }

  /** Point this pane at a different run (split-screen swap). */
  async setRun(runId: string): Promise<void> {
    this.runId = runId;
    this.root.dataset.runId = runId;
    this.title.textContent = runId;
    await this.renderGraphs();
  }

  async render(state: ViewState): Promise<void> {
    const jobs: Promise<void>[] = [];
    if (state.layers.has("taxi")) {
      jobs.push(this.renderTaxis(state));
    } else {
      this.clearGroup("taxi");
    }
    if (state.layers.has("request")) {
      jobs.push(this.renderRequests(state));
    } else {
      this.clearGroup("request");
    }
    if (state.layers.has("interzone")) {
      jobs.push(this.renderFlows(state));
    } else {
      this.clearGroup("interzone");
    }
    if (state.layers.has("zone")) {
      jobs.push(this.renderChoropleth(state));
    } else {
      this.clearGroup("zone");
    }
    await Promise.all(jobs);
  }

  private clearGroup(name: string): void {
    const g = this.groups[name];
    while (g.firstChild) g.removeChild(g.firstChild);
  }

  private async renderTaxis(state: ViewState): Promise<void> {
    const payload = await this.api.taxis(
      this.runId, state.epoch, state.window,
      state.selectedTaxi === null ? undefined : state.selectedTaxi);
    this.taxiLayer.render(payload);
    if (payload.path) {
      this.taxiLayer.renderPath(payload, this.network);
    }
  }

  private async renderRequests(state: ViewState): Promise<void> {
    const payload = await this.api.requests(this.runId, state.epoch, state.filter);
    this.requestLayer.render(payload, state.showDropoffs);
  }

  private async renderFlows(state: ViewState): Promise<void> {
    const payload = await this.api.flows(this.runId, state.epoch, state.window,
                                         state.metric);
    this.interzoneLayer.render(payload, this.network, state.hoveredZone);
  }

  private async renderChoropleth(state: ViewState): Promise<void> {
    const payload = await this.api.choropleth(this.runId, state.epoch, state.window);
    this.choroplethLayer.render(payload, this.network);
  }

  private async renderGraphs(): Promise<void> {
    this.graphRoot.textContent = "";
    const [requests, delays, hourly, daily] = await Promise.all([
      this.api.requestSeries(this.runId),
      this.api.delaySeries(this.runId),
      this.api.boxplots(this.runId, "hour"),
      this.api.boxplots(this.runId, "day"),
    ]);
    renderRequestCounts(this.graphRoot, requests);
    renderDelays(this.graphRoot, delays);
    renderBoxplots(this.graphRoot, hourly);
    renderBoxplots(this.graphRoot, daily);
  }
}

/** The exploration app: sidebar controls, the time slider, and one or two
 * synchronized run panes. In split screen both panes share the same epoch
 * and window by construction; the swap control exchanges which run each
 * pane shows and nothing else.
 */

import { ApiClient } from "./api.js";
import { RunPane } from "./pane.js";
import { ViewStateStore } from "./state.js";
import type { LayerName } from "./types.js";

const LAYERS: { name: LayerName; label: string }[] = [
  { name: "taxi", label: "Taxis" },
  { name: "request", label: "Requests" },
  { name: "interzone", label: "Inter-zone flows" },
  { name: "zone", label: "Zone pickup delay" },
];

export class App {
  readonly root: HTMLElement;
  readonly store: ViewStateStore;
  readonly panes: RunPane[] = [];

  constructor(private api: ApiClient, runIds: string[], horizon: number) {
    this.store = new ViewStateStore(runIds, horizon);
    this.root = document.createElement("div");
    this.root.className = "fairride-app";
    this.root.appendChild(this.buildSidebar(horizon));
    const paneHost = document.createElement("div");
    paneHost.className = "panes";
    this.root.appendChild(paneHost);
    for (const runId of runIds) {
      const pane = new RunPane(api, this.store, runId);
      this.panes.push(pane);
      paneHost.appendChild(pane.root);
    }
  }

  async init(): Promise<void> {
    await Promise.all(this.panes.map((p) => p.init()));
    this.store.subscribe((state) => {
      // both panes always receive the identical (epoch, window) pair
      for (const pane of this.panes) {
        void pane.render(state);
      }
    });
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const state = this.store.get();
    await Promise.all(this.panes.map((p) => p.render(state)));
  }

  /** Exchange pane contents in split screen; the view state is untouched
   * apart from the run order. */
  async swap(): Promise<void> {
    if (this.panes.length !== 2) return;
    this.store.swapRuns();
    const [a, b] = this.store.get().runIds;
    await this.panes[0].setRun(a);
    await this.panes[1].setRun(b);
    await this.refresh();
  }

  private buildSidebar(horizon: number): HTMLElement {
    const aside = document.createElement("aside");
    aside.className = "sidebar";

    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "0";
    slider.max = String(horizon - 1);
    slider.value = "0";
    slider.className = "epoch-slider";
    slider.addEventListener("input", () => {
      this.store.update({ epoch: Number(slider.value) });
    });
    aside.appendChild(label("Epoch", slider));

    const windowInput = document.createElement("input");
    windowInput.type = "number";
    windowInput.min = "1";
    windowInput.value = String(this.store.get().window);
    windowInput.className = "window-input";
    windowInput.addEventListener("change", () => {
      this.store.update({ window: Number(windowInput.value) });
    });
    aside.appendChild(label("Window (epochs)", windowInput));

    for (const { name, label: text } of LAYERS) {
      const box = document.createElement("input");
      box.type = "checkbox";
      box.checked = this.store.get().layers.has(name);
      box.className = `layer-toggle layer-toggle-${name}`;
      box.addEventListener("change", () => this.store.toggleLayer(name));
      aside.appendChild(label(text, box));
    }

    const metric = document.createElement("select");
    metric.className = "metric-select";
    for (const value of ["acceptance", "detour"]) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = value;
      metric.appendChild(option);
    }
    metric.addEventListener("change", () => {
      this.store.update({ metric: metric.value as "acceptance" | "detour" });
    });
    aside.appendChild(label("Inter-zone metric", metric));

    const filter = document.createElement("select");
    filter.className = "filter-select";
    for (const value of ["all", "matched", "unmatched"]) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = value;
      filter.appendChild(option);
    }
    filter.addEventListener("change", () => {
      this.store.update({ filter: filter.value as "all" | "matched" | "unmatched" });
    });
    aside.appendChild(label("Requests", filter));

    const dropoffs = document.createElement("input");
    dropoffs.type = "checkbox";
    dropoffs.className = "dropoff-toggle";
    dropoffs.addEventListener("change", () => {
      this.store.update({ showDropoffs: dropoffs.checked });
    });
    aside.appendChild(label("Show dropoffs", dropoffs));

    if (this.store.get().runIds.length === 2) {
      const swap = document.createElement("button");
      swap.textContent = "Swap runs";
      swap.className = "swap-button";
      swap.addEventListener("click", () => void this.swap());
      aside.appendChild(swap);
    }
    return aside;
  }
}

function label(text: string, control: HTMLElement): HTMLElement {
  const wrapper = document.createElement("label");
  wrapper.textContent = text + " ";
  wrapper.appendChild(control);
  return wrapper;
}

/** Boot against a live service: show every registered run (up to two). */
export async function boot(host: HTMLElement, baseUrl = ""): Promise<App> {
  const api = new ApiClient(baseUrl);
  const runsPayload = await api.runs();
  const runIds = runsPayload.runs.slice(0, 2).map((r) => r.run_id);
  if (!runIds.length) {
    throw new Error("no runs registered");
  }
  const horizon = runsPayload.runs[0].config.horizon_epochs;
  const app = new App(api, runIds, horizon);
  host.appendChild(app.root);
  await app.init();
  return app;
}

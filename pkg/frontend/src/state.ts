/** Shared view state: one or two active runs, the time cursor, the layer
 * stack, and the selectors. In split screen the epoch and window are a
 * single value shared by both panes by construction.
 */

import type { InterZoneMetric, LayerName, RequestFilter } from "./types.js";

export interface ViewState {
  runIds: string[];          // 1 or 2 active runs, pane order
  epoch: number;
  window: number;
  horizon: number;
  layers: Set<LayerName>;
  metric: InterZoneMetric;
  filter: RequestFilter;
  showDropoffs: boolean;
  hoveredZone: string | null;
  selectedTaxi: number | null;
}

export type Listener = (state: ViewState) => void;

export class ViewStateStore {
  private state: ViewState;
  private listeners: Listener[] = [];

  constructor(runIds: string[], horizon: number) {
    if (runIds.length < 1 || runIds.length > 2) {
      throw new Error("between one and two runs can be active");
    }
    this.state = {
      runIds: [...runIds],
      epoch: 0,
      window: 15,
      horizon,
      layers: new Set<LayerName>(["taxi"]),
      metric: "acceptance",
      filter: "all",
      showDropoffs: false,
      hoveredZone: null,
      selectedTaxi: null,
    };
  }

  get(): ViewState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  update(patch: Partial<Omit<ViewState, "layers">> & { layers?: Set<LayerName> }): void {
    const next = { ...this.state, ...patch };
    next.epoch = Math.max(0, Math.min(next.horizon - 1, next.epoch));
    next.window = Math.max(1, next.window);
    this.state = next;
    for (const listener of [...this.listeners]) {
      listener(this.state);
    }
  }

  toggleLayer(layer: LayerName): void {
    const layers = new Set(this.state.layers);
    if (layers.has(layer)) {
      layers.delete(layer);
    } else {
      layers.add(layer);
    }
    this.update({ layers });
  }

  /** Exchange the two panes' runs; everything else is untouched. */
  swapRuns(): void {
    if (this.state.runIds.length === 2) {
      this.update({ runIds: [this.state.runIds[1], this.state.runIds[0]] });
    }
  }
}

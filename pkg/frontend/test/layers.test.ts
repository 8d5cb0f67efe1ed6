import { beforeEach, describe, expect, it } from "vitest";

import {
  acceptanceColor, ChoroplethLayer, InterzoneLayer, RequestLayer, TaxiLayer,
} from "../src/layers.js";
import { extentOf, Projection, taxiRadius } from "../src/scales.js";
import * as fx from "./helpers.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function group(): Element {
  const svg = document.createElementNS(SVG_NS, "svg");
  const g = document.createElementNS(SVG_NS, "g");
  svg.appendChild(g);
  document.body.appendChild(svg);
  return g;
}

function proj(): Projection {
  return new Projection(extentOf(fx.network.nodes), 560, 480);
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("TaxiLayer", () => {
  it("renders exactly the served record count", () => {
    const g = group();
    new TaxiLayer(g, proj()).render(fx.taxis);
    expect(g.querySelectorAll(".taxi-circle")).toHaveLength(fx.taxis.taxis.length);
  });

  it("radius is strictly larger for more onboard passengers", () => {
    const g = group();
    new TaxiLayer(g, proj()).render(fx.taxis);
    const byId = new Map([...g.querySelectorAll(".taxi-circle")].map(
      (c) => [c.getAttribute("data-taxi-id"), Number(c.getAttribute("r"))]));
    expect(byId.get("2")!).toBeGreaterThan(byId.get("1")!);  // onboard 3 vs 1
    expect(byId.get("1")!).toBeGreaterThan(byId.get("0")!);  // onboard 1 vs 0
    expect(byId.get("0")).toBe(taxiRadius(0));
  });

  it("fleet-mean matches render white", () => {
    const g = group();
    new TaxiLayer(g, proj()).render(fx.taxis);
    const atMean = [...g.querySelectorAll(".taxi-circle")]
      .find((c) => c.getAttribute("data-matches") === "2");
    expect(atMean?.getAttribute("fill")).toBe("rgb(255,255,255)");
  });

  it("clicking a circle selects the taxi", () => {
    const g = group();
    const layer = new TaxiLayer(g, proj());
    let selected: number | null = null;
    layer.onSelect = (id) => { selected = id; };
    layer.render(fx.taxis);
    (g.querySelector('[data-taxi-id="1"]') as SVGElement).dispatchEvent(
      new MouseEvent("click"));
    expect(selected).toBe(1);
  });

  it("path overlay draws the served node sequence and its stops", () => {
    const g = group();
    const layer = new TaxiLayer(g, proj());
    layer.render(fx.taxisWithPath);
    layer.renderPath(fx.taxisWithPath, fx.network);
    const polyline = g.querySelector(".taxi-path")!;
    expect(polyline.getAttribute("points")!.split(" ")).toHaveLength(
      fx.taxisWithPath.path!.nodes.length);
    expect(g.querySelectorAll(".taxi-stop-pickup")).toHaveLength(1);
    expect(g.querySelectorAll(".taxi-stop-dropoff")).toHaveLength(1);
  });
});

describe("RequestLayer", () => {
  it("renders one green circle per served request", () => {
    const g = group();
    new RequestLayer(g, proj()).render(fx.requests, false);
    expect(g.querySelectorAll(".request-pickup")).toHaveLength(3);
    expect(g.querySelectorAll(".request-dropoff")).toHaveLength(0);
  });

  it("dropoff toggle adds red circles; off means zero regardless of data", () => {
    const g = group();
    const layer = new RequestLayer(g, proj());
    layer.render(fx.requests, true);
    expect(g.querySelectorAll(".request-dropoff")).toHaveLength(3);
    layer.render(fx.requests, false);
    expect(g.querySelectorAll(".request-dropoff")).toHaveLength(0);
  });
});

describe("InterzoneLayer", () => {
  it("edge widths for matched 1,4,9 stand in ratio 1:2:3", () => {
    const g = group();
    new InterzoneLayer(g, proj()).render(fx.flows, fx.network, null);
    const widths = new Map([...g.querySelectorAll(".flow-edge")].map(
      (e) => [e.getAttribute("data-matched"), Number(e.getAttribute("stroke-width"))]));
    expect(widths.get("4")! / widths.get("1")!).toBeCloseTo(2, 10);
    expect(widths.get("9")! / widths.get("1")!).toBeCloseTo(3, 10);
  });

  it("renders every served pair when nothing is hovered", () => {
    const g = group();
    new InterzoneLayer(g, proj()).render(fx.flows, fx.network, null);
    expect(g.querySelectorAll(".flow-edge")).toHaveLength(fx.flows.pairs.length);
  });

  it("hovering a zone leaves only incident edges plus its boundary", () => {
    const g = group();
    new InterzoneLayer(g, proj()).render(fx.flows, fx.network, "B");
    const edges = [...g.querySelectorAll(".flow-edge")];
    expect(edges.length).toBeGreaterThan(0);
    for (const edge of edges) {
      const touchesB = edge.getAttribute("data-from") === "B"
        || edge.getAttribute("data-to") === "B";
      expect(touchesB).toBe(true);
    }
    expect(g.querySelectorAll('.zone-boundary[data-zone-id="B"]')).toHaveLength(1);
  });

  it("acceptance colors hit the legend endpoints at ratios 0 and 1", () => {
    expect(acceptanceColor(0)).toBe("rgb(255,0,0)");
    expect(acceptanceColor(1)).toBe("rgb(0,255,0)");
  });
});

describe("ChoroplethLayer", () => {
  it("fills zones with data and leaves no-data zones unfilled", () => {
    const g = group();
    new ChoroplethLayer(g, proj()).render(fx.choropleth, fx.network);
    const zoneA = g.querySelector('.choropleth-zone[data-zone-id="A"]')!;
    const zoneB = g.querySelector('.choropleth-zone[data-zone-id="B"]')!;
    expect(zoneA.getAttribute("fill")).not.toBe("none");
    expect(zoneB.getAttribute("fill")).toBe("none");
  });

  it("legend bounds equal the payload extremes", () => {
    const g = group();
    new ChoroplethLayer(g, proj()).render(fx.choropleth, fx.network);
    const legend = g.querySelector(".choropleth-legend")!;
    expect(Number(legend.getAttribute("data-legend-min"))).toBe(30);
    expect(Number(legend.getAttribute("data-legend-max"))).toBe(30);
  });
});

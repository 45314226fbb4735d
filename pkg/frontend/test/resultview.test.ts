import { describe, expect, it } from "vitest";

import { fitViewport, niceStep, project, tileForLonLat } from "../src/mapview.js";
import {
  buildResultView,
  gridFromTable,
  layerFromFeatureCollection,
  sortGrid,
} from "../src/resultview.js";
import type { ExecutionResult, FeatureCollection } from "../src/types.js";
import { ROUTE_RESULT } from "./fakeserver.js";

const FINDINGS: ExecutionResult = {
  kind: "findings",
  payload: {
    routes: [
      { rank: 0, travel_time_s: 100, edges: ["a"], geojson: ROUTE_RESULT!.payload.geojson },
      { rank: 1, travel_time_s: 120, edges: ["b"], geojson: ROUTE_RESULT!.payload.geojson },
    ],
    findings: {
      name: "route_findings",
      columns: [
        { name: "route_index", type: "number" },
        { name: "message", type: "text" },
      ],
      rows: [
        [1, "construction"],
        [0, "collision"],
      ],
    },
    text: "2 findings",
  },
  provenance: [],
};

describe("result views", () => {
  it("route result becomes a map layer plus text", () => {
    const view = buildResultView(ROUTE_RESULT!);
    expect(view.kind).toBe("route");
    if (view.kind === "route") {
      expect(view.map.lines).toHaveLength(1);
      expect(view.map.markers.map((m) => m.role)).toEqual(["start", "end"]);
      expect(view.text).toContain("Toronto");
    }
  });

  it("findings show two markers worth of routes and a grid", () => {
    const view = buildResultView(FINDINGS);
    expect(view.kind).toBe("findings");
    if (view.kind === "findings") {
      expect(view.map.lines).toHaveLength(2);
      // start/end markers per joined route fixture: 2 routes x 2 markers
      expect(view.map.markers).toHaveLength(4);
      expect(view.grid.rows).toHaveLength(2);
    }
  });

  it("table result renders as a sortable grid", () => {
    const view = buildResultView({
      kind: "table",
      payload: {
        table: {
          name: "t",
          columns: [
            { name: "etype", type: "text" },
            { name: "n", type: "number" },
          ],
          rows: [
            ["weather", 2],
            ["accident", 9],
          ],
        },
      },
      provenance: [],
    });
    expect(view.kind).toBe("table");
    if (view.kind === "table") {
      const byText = sortGrid(view.grid, "etype");
      expect(byText.rows.map((r) => r[0])).toEqual(["accident", "weather"]);
      const byNumber = sortGrid(view.grid, "n");
      expect(byNumber.rows.map((r) => r[1])).toEqual([2, 9]);
      const reversed = sortGrid(byNumber, "n");
      expect(reversed.rows.map((r) => r[1])).toEqual([9, 2]);
    }
  });

  it("text result is prose only", () => {
    const view = buildResultView({ kind: "text", payload: { text: "hello" }, provenance: [] });
    expect(view).toEqual({ kind: "text", text: "hello" });
  });

  it("unknown kinds fall back to raw JSON", () => {
    const view = buildResultView({ kind: "hologram", payload: { zap: 1 }, provenance: [] });
    expect(view.kind).toBe("raw");
    if (view.kind === "raw") {
      expect(JSON.parse(view.json).payload.zap).toBe(1);
    }
  });

  it("malformed payloads fall back instead of throwing", () => {
    const view = buildResultView({ kind: "route", payload: {}, provenance: [] });
    expect(view.kind).toBe("raw");
  });
});

describe("map projection", () => {
  const layer = layerFromFeatureCollection(
    ROUTE_RESULT!.payload.geojson as FeatureCollection,
  );

  it("viewport fits the layer with padding", () => {
    const view = fitViewport(layer, 720, 480);
    expect(view.minLon).toBeLessThan(-79.38);
    expect(view.maxLon).toBeGreaterThan(-75.7);
    expect(view.minLat).toBeLessThan(43.65);
    expect(view.maxLat).toBeGreaterThan(45.42);
  });

  it("projection maps corners to canvas corners", () => {
    const view = { width: 100, height: 100, minLon: 0, maxLon: 10, minLat: 0, maxLat: 10 };
    expect(project(view, 0, 10)).toEqual([0, 0]);
    expect(project(view, 10, 0)).toEqual([100, 100]);
    expect(project(view, 5, 5)).toEqual([50, 50]);
  });

  it("empty layers get a world viewport", () => {
    const view = fitViewport({ lines: [], markers: [] }, 10, 10);
    expect(view.minLon).toBe(-180);
    expect(view.maxLon).toBe(180);
  });

  it("graticule step is sane", () => {
    expect(niceStep(6)).toBe(1);
    expect(niceStep(60)).toBe(10);
    expect(niceStep(0.6)).toBe(0.1);
  });

  it("slippy tile indices match the reference formula", () => {
    // zoom 0 has a single tile
    expect(tileForLonLat(-79.38, 43.65, 0)).toEqual({ x: 0, y: 0 });
    const t = tileForLonLat(-79.38, 43.65, 10);
    expect(t.x).toBe(286);
    expect(t.y).toBe(373);
  });
});

describe("grid helpers", () => {
  it("gridFromTable copies rows", () => {
    const table = {
      name: "t",
      columns: [{ name: "a", type: "text" }],
      rows: [["x"]],
    };
    const grid = gridFromTable(table as never);
    grid.rows[0][0] = "mutated";
    expect(table.rows[0][0]).toBe("x");
  });
});

// Result view models: route results become a map layer plus text, table
// results a sortable grid, text results prose. Unknown kinds fall back to
// raw JSON so nothing is ever silently dropped.

import type { ExecutionResult, FeatureCollection, TableDict } from "./types.js";

export interface MapLayer {
  lines: [number, number][][]; // [lon, lat] vertex lists
  markers: { lon: number; lat: number; role: string; label?: string }[];
}

export interface GridModel {
  columns: string[];
  rows: (string | number | boolean)[][];
  sortColumn: string | null;
  sortDirection: "asc" | "desc";
}

export type ResultView =
  | { kind: "route"; map: MapLayer; text: string }
  | { kind: "findings"; map: MapLayer; grid: GridModel; text: string }
  | { kind: "table"; grid: GridModel; text: string }
  | { kind: "text"; text: string }
  | { kind: "raw"; json: string };

export function layerFromFeatureCollection(fc: FeatureCollection, label?: string): MapLayer {
  const layer: MapLayer = { lines: [], markers: [] };
  for (const feature of fc.features ?? []) {
    const geometry = feature.geometry;
    if (geometry.type === "LineString") {
      layer.lines.push(geometry.coordinates as [number, number][]);
    } else if (geometry.type === "Point") {
      const [lon, lat] = geometry.coordinates as [number, number];
      const role = String(feature.properties?.role ?? "marker");
      layer.markers.push({ lon, lat, role, label });
    }
  }
  return layer;
}

function mergeLayers(layers: MapLayer[]): MapLayer {
  return {
    lines: layers.flatMap((l) => l.lines),
    markers: layers.flatMap((l) => l.markers),
  };
}

export function gridFromTable(table: TableDict): GridModel {
  return {
    columns: table.columns.map((c) => c.name),
    rows: table.rows.map((r) => [...r]),
    sortColumn: null,
    sortDirection: "asc",
  };
}

export function sortGrid(grid: GridModel, column: string): GridModel {
  const index = grid.columns.indexOf(column);
  if (index < 0) {
    return grid;
  }
  const direction =
    grid.sortColumn === column && grid.sortDirection === "asc" ? "desc" : "asc";
  const rows = [...grid.rows].sort((a, b) => {
    const [x, y] = [a[index], b[index]];
    if (typeof x === "number" && typeof y === "number") {
      return direction === "asc" ? x - y : y - x;
    }
    const cmp = String(x).localeCompare(String(y));
    return direction === "asc" ? cmp : -cmp;
  });
  return { ...grid, rows, sortColumn: column, sortDirection: direction };
}

export function buildResultView(result: ExecutionResult): ResultView {
  const payload = result.payload as Record<string, unknown>;
  try {
    if (result.kind === "route") {
      const map = layerFromFeatureCollection(payload.geojson as FeatureCollection);
      return { kind: "route", map, text: String(payload.text ?? "") };
    }
    if (result.kind === "findings") {
      const routes = (payload.routes as { geojson: FeatureCollection; rank: number }[]) ?? [];
      const map = mergeLayers(
        routes.map((r) => layerFromFeatureCollection(r.geojson, `route ${r.rank}`)),
      );
      const grid = gridFromTable(payload.findings as TableDict);
      return { kind: "findings", map, grid, text: String(payload.text ?? "") };
    }
    if (result.kind === "table") {
      return {
        kind: "table",
        grid: gridFromTable(payload.table as TableDict),
        text: String(payload.text ?? ""),
      };
    }
    if (result.kind === "text") {
      return { kind: "text", text: String(payload.text ?? JSON.stringify(payload)) };
    }
  } catch {
    // fall through to the raw view below
  }
  return { kind: "raw", json: JSON.stringify(result, null, 2) };
}

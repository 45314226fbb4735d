// Canvas map rendering. Offline mode (no tile URL configured) draws
// geometry on a blank canvas with a graticule; with a tile URL the slippy
// tiles are painted underneath. Projection math is kept pure so tests can
// check it without a DOM.

import type { MapLayer } from "./resultview.js";

export interface Viewport {
  width: number;
  height: number;
  minLon: number;
  maxLon: number;
  minLat: number;
  maxLat: number;
}

const PADDING = 0.1;

export function fitViewport(layer: MapLayer, width: number, height: number): Viewport {
  const lons: number[] = [];
  const lats: number[] = [];
  for (const line of layer.lines) {
    for (const [lon, lat] of line) {
      lons.push(lon);
      lats.push(lat);
    }
  }
  for (const marker of layer.markers) {
    lons.push(marker.lon);
    lats.push(marker.lat);
  }
  if (lons.length === 0) {
    return { width, height, minLon: -180, maxLon: 180, minLat: -85, maxLat: 85 };
  }
  const minLon = Math.min(...lons);
  const maxLon = Math.max(...lons);
  const minLat = Math.min(...lats);
  const maxLat = Math.max(...lats);
  const lonPad = Math.max((maxLon - minLon) * PADDING, 0.01);
  const latPad = Math.max((maxLat - minLat) * PADDING, 0.01);
  return {
    width,
    height,
    minLon: minLon - lonPad,
    maxLon: maxLon + lonPad,
    minLat: minLat - latPad,
    maxLat: maxLat + latPad,
  };
}

export function project(view: Viewport, lon: number, lat: number): [number, number] {
  const x = ((lon - view.minLon) / (view.maxLon - view.minLon)) * view.width;
  const y = ((view.maxLat - lat) / (view.maxLat - view.minLat)) * view.height;
  return [x, y];
}

export interface MapConfig {
  tileUrl: string | null; // e.g. "https://tiles.example/{z}/{x}/{y}.png"
}

export function drawLayer(
  canvas: HTMLCanvasElement,
  layer: MapLayer,
  config: MapConfig = { tileUrl: null },
): Viewport {
  const view = fitViewport(layer, canvas.width, canvas.height);
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return view;
  }
  ctx.fillStyle = "#f4f6f8";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (config.tileUrl === null) {
    drawGraticule(ctx, view);
  } else {
    // Tile painting is fire-and-forget; geometry lands on top either way.
    paintTiles(ctx, view, config.tileUrl);
  }

  ctx.strokeStyle = "#1f6fd6";
  ctx.lineWidth = 3;
  for (const line of layer.lines) {
    ctx.beginPath();
    line.forEach(([lon, lat], i) => {
      const [x, y] = project(view, lon, lat);
      if (i === 0) {
        ctx.moveTo(x, y);
      } else {
        ctx.lineTo(x, y);
      }
    });
    ctx.stroke();
  }
  for (const marker of layer.markers) {
    const [x, y] = project(view, marker.lon, marker.lat);
    ctx.fillStyle =
      marker.role === "start" ? "#18a058" : marker.role === "end" ? "#d03050" : "#f0a020";
    ctx.beginPath();
    ctx.arc(x, y, 6, 0, Math.PI * 2);
    ctx.fill();
  }
  return view;
}

function drawGraticule(ctx: CanvasRenderingContext2D, view: Viewport): void {
  ctx.strokeStyle = "#dde3e8";
  ctx.lineWidth = 1;
  const lonStep = niceStep(view.maxLon - view.minLon);
  const latStep = niceStep(view.maxLat - view.minLat);
  for (let lon = Math.ceil(view.minLon / lonStep) * lonStep; lon < view.maxLon; lon += lonStep) {
    const [x] = project(view, lon, view.minLat);
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, view.height);
    ctx.stroke();
  }
  for (let lat = Math.ceil(view.minLat / latStep) * latStep; lat < view.maxLat; lat += latStep) {
    const [, y] = project(view, view.minLon, lat);
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(view.width, y);
    ctx.stroke();
  }
}

export function niceStep(span: number): number {
  const raw = span / 6;
  const power = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const multiple of [1, 2, 5, 10]) {
    if (raw <= multiple * power) {
      return multiple * power;
    }
  }
  return 10 * power;
}

export function tileForLonLat(lon: number, lat: number, zoom: number): { x: number; y: number } {
  const x = Math.floor(((lon + 180) / 360) * Math.pow(2, zoom));
  const latRad = (lat * Math.PI) / 180;
  const y = Math.floor(
    ((1 - Math.log(Math.tan(latRad) + 1 / Math.cos(latRad)) / Math.PI) / 2) * Math.pow(2, zoom),
  );
  return { x, y };
}

function paintTiles(ctx: CanvasRenderingContext2D, view: Viewport, tileUrl: string): void {
  const zoom = 8;
  const a = tileForLonLat(view.minLon, view.maxLat, zoom);
  const b = tileForLonLat(view.maxLon, view.minLat, zoom);
  for (let x = a.x; x <= b.x; x += 1) {
    for (let y = a.y; y <= b.y; y += 1) {
      const img = new Image();
      img.crossOrigin = "anonymous";
      img.onload = () => {
        // Approximate placement: anchor each tile by its NW corner.
        const nw = tileNW(x, y, zoom);
        const [px, py] = project(view, nw.lon, nw.lat);
        const se = tileNW(x + 1, y + 1, zoom);
        const [qx, qy] = project(view, se.lon, se.lat);
        ctx.drawImage(img, px, py, qx - px, qy - py);
      };
      img.src = tileUrl
        .replace("{z}", String(zoom))
        .replace("{x}", String(x))
        .replace("{y}", String(y));
    }
  }
}

function tileNW(x: number, y: number, zoom: number): { lon: number; lat: number } {
  const n = Math.pow(2, zoom);
  const lon = (x / n) * 360 - 180;
  const latRad = Math.atan(Math.sinh(Math.PI * (1 - (2 * y) / n)));
  return { lon, lat: (latRad * 180) / Math.PI };
}

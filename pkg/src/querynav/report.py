"""Render results to files: GeoJSON, delimited tables, and matplotlib figures.

The CLI's report path writes a figure next to every delimited or GeoJSON
output so a run leaves something a human can look at without a server:
routes as lines with start/end markers, findings and events as scatter
markers on the same axes.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def write_geojson(data: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    return path


def write_delimited(table_dict: dict, path: str | Path) -> Path:
    """Write a table payload (columns/rows) as CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([c["name"] for c in table_dict["columns"]])
        writer.writerows(table_dict["rows"])
    return path


def write_json(data, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _plot_feature_collection(ax, fc: dict, color: str, label: str | None = None):
    first = True
    for feat in fc.get("features", []):
        geom = feat.get("geometry", {})
        if geom.get("type") == "LineString":
            xs = [c[0] for c in geom["coordinates"]]
            ys = [c[1] for c in geom["coordinates"]]
            ax.plot(xs, ys, color=color, linewidth=2, label=label if first else None)
            first = False
        elif geom.get("type") == "Point":
            role = feat.get("properties", {}).get("role", "")
            marker = {"start": "^", "end": "v"}.get(role, "o")
            ax.plot(
                geom["coordinates"][0],
                geom["coordinates"][1],
                marker=marker,
                color=color,
                markersize=8,
            )


def save_route_figure(route_fc: dict, path: str | Path, title: str = "Planned route") -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(8, 6))
    _plot_feature_collection(ax, route_fc, color="tab:blue", label="route")
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_monitor_figure(
    routes: list[dict], findings: dict, path: str | Path, title: str = "Monitored routes"
) -> Path:
    """Routes as colored lines; one marker per finding at its route midpoint."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(8, 6))
    cycle = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, route in enumerate(routes):
        color = cycle[i % len(cycle)]
        _plot_feature_collection(
            ax, route["geojson"], color=color, label=f"route {route.get('rank', i)}"
        )
    cols = [c["name"] for c in findings.get("columns", [])]
    if "edge_id" in cols and findings.get("rows"):
        ax.plot([], [], "rx", label=f"{len(findings['rows'])} finding(s)")
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_table_figure(table_dict: dict, path: str | Path, title: str = "Result") -> Path:
    """Render a small table as a figure so every report has a visual artifact."""
    path = Path(path)
    cols = [c["name"] for c in table_dict["columns"]]
    rows = table_dict["rows"][:20]
    fig, ax = plt.subplots(figsize=(max(6, len(cols) * 1.6), max(2.0, 0.5 + 0.35 * len(rows))))
    ax.axis("off")
    ax.set_title(title)
    if rows:
        cell_text = [[str(v)[:40] for v in r] for r in rows]
        table = ax.table(cellText=cell_text, colLabels=cols, loc="center")
        table.auto_set_font_size(False)
        table.set_fontsize(8)
    else:
        ax.text(0.5, 0.5, "no rows", ha="center", va="center")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def table_from_result(payload: dict) -> dict:
    return payload["table"]


def render_result_files(result: dict, out: str | Path) -> list[Path]:
    """Write the files for one execution result next to the `out` stem.

    route    -> <out>.geojson + <out>.trace.json + <out>.png
    findings -> <out>.csv (findings) + <out>.routes.geojson + <out>.png
    table    -> <out>.csv + <out>.png
    text     -> <out>.txt
    """
    out = Path(out)
    stem = out.with_suffix("")
    kind = result["kind"]
    payload = result["payload"]
    written: list[Path] = []
    if kind == "route":
        primary = out if out.suffix else stem.with_suffix(".geojson")
        written.append(write_geojson(payload["geojson"], primary))
        written.append(write_json(payload.get("trace", []), Path(f"{stem}.trace.json")))
        written.append(save_route_figure(payload["geojson"], stem.with_suffix(".png")))
    elif kind == "findings":
        primary = out if out.suffix == ".csv" else stem.with_suffix(".csv")
        written.append(write_delimited(payload["findings"], primary))
        all_routes = {
            "type": "FeatureCollection",
            "features": [
                f for r in payload["routes"] for f in r["geojson"]["features"]
            ],
        }
        written.append(write_geojson(all_routes, Path(f"{stem}.routes.geojson")))
        written.append(save_monitor_figure(payload["routes"], payload["findings"], stem.with_suffix(".png")))
    elif kind == "table":
        written.append(write_delimited(payload["table"], stem.with_suffix(".csv")))
        written.append(save_table_figure(payload["table"], stem.with_suffix(".png")))
    else:
        text = payload.get("text") or json.dumps(payload, indent=2)
        path = stem.with_suffix(".txt")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n", encoding="utf-8")
        written.append(path)
    return written

from __future__ import annotations

import csv

from querynav.report import (
    render_result_files,
    save_route_figure,
    write_delimited,
)

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

ROUTE_FC = {
    "type": "FeatureCollection",
    "features": [
        {
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": [[-79.4, 43.6], [-75.7, 45.4]]},
            "properties": {"role": "route"},
        },
        {"type": "Feature", "geometry": {"type": "Point", "coordinates": [-79.4, 43.6]},
         "properties": {"role": "start"}},
        {"type": "Feature", "geometry": {"type": "Point", "coordinates": [-75.7, 45.4]},
         "properties": {"role": "end"}},
    ],
}

TABLE = {
    "name": "t",
    "columns": [{"name": "a", "type": "text"}, {"name": "n", "type": "number"}],
    "rows": [["x", 1.0], ["y", 2.0]],
}


def test_route_figure_is_png(tmp_path):
    path = save_route_figure(ROUTE_FC, tmp_path / "r.png")
    assert path.read_bytes()[:8] == PNG_MAGIC


def test_write_delimited_round_trips(tmp_path):
    path = write_delimited(TABLE, tmp_path / "t.csv")
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["a", "n"]
    assert rows[1] == ["x", "1.0"]


def test_render_route_result_files(tmp_path):
    result = {"kind": "route", "payload": {"geojson": ROUTE_FC, "trace": [{"t": 1.0}]}}
    written = render_result_files(result, tmp_path / "out.geojson")
    names = sorted(p.name for p in written)
    assert names == ["out.geojson", "out.png", "out.trace.json"]
    assert (tmp_path / "out.png").read_bytes()[:8] == PNG_MAGIC


def test_render_findings_result_files(tmp_path):
    payload = {
        "routes": [{"rank": 0, "travel_time_s": 1.0, "edges": ["e"], "geojson": ROUTE_FC}],
        "findings": TABLE,
    }
    written = render_result_files({"kind": "findings", "payload": payload}, tmp_path / "mon.csv")
    names = sorted(p.name for p in written)
    assert names == ["mon.csv", "mon.png", "mon.routes.geojson"]


def test_render_table_result_files(tmp_path):
    written = render_result_files({"kind": "table", "payload": {"table": TABLE}}, tmp_path / "q.csv")
    assert sorted(p.name for p in written) == ["q.csv", "q.png"]


def test_render_text_result(tmp_path):
    written = render_result_files({"kind": "text", "payload": {"text": "hello"}}, tmp_path / "r.txt")
    assert written[0].read_text().strip() == "hello"

"""Data plane: load fixture resources, filter, query, and retrieve documents.

Resources live under a data root as CSV (tabular), GeoJSON feature
collections (geospatial), JSON arrays (api-fixture), or directories of
plain-text documents. Everything loads into a small in-memory Table /
GeoTable value; queries are structured (no query-language strings), so the
agent's output is validatable before it touches data.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import geo
from .catalog import Catalog, CatalogNode, parent_of
from .errors import (
    FormatError,
    NameNotFound,
    PathError,
    TypeMismatch,
    UnknownAttribute,
    UnknownColumn,
    UnknownTable,
)

COLUMN_TYPES = ("number", "text", "boolean")

FILTER_OPS = ("=", "≠", "<", "≤", ">", "≥", "contains")
_OP_ALIASES = {
    "==": "=",
    "!=": "≠",
    "<=": "≤",
    ">=": "≥",
}

AGGREGATE_FNS = ("count", "sum", "min", "max", "avg")


@dataclass(frozen=True)
class Column:
    name: str
    type: str


@dataclass
class Table:
    name: str
    columns: list[Column]
    rows: list[tuple]

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column_index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise UnknownColumn(f"table {self.name!r} has no column {name!r}")

    def column(self, name: str) -> Column:
        return self.columns[self.column_index(name)]


@dataclass
class GeoTable(Table):
    geometry: list[geo.Geometry] = field(default_factory=list)


@dataclass
class TableQuery:
    table: str
    filters: list[dict] = field(default_factory=list)
    project: list[str] = field(default_factory=list)
    aggregate: dict | None = None
    sort: dict | None = None
    limit: int | None = None


@dataclass
class Gazetteer:
    places: dict[str, tuple[float, float]]

    @classmethod
    def from_file(cls, path: str | Path) -> "Gazetteer":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise PathError(f"cannot read gazetteer {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise FormatError(f"gazetteer {path} is not valid JSON: {exc}") from exc
        places = {}
        for name, coords in data.items():
            lat, lon = float(coords[0]), float(coords[1])
            if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
                raise FormatError(f"gazetteer entry {name!r} has invalid coordinates")
            places[_normalize_place(name)] = (lat, lon)
        return cls(places=places)


def _normalize_place(name: str) -> str:
    return re.sub(r"\s+", " ", name.strip()).casefold()


def geocode(gazetteer: Gazetteer, name: str) -> tuple[float, float]:
    """Resolve a place name to (lat, lon); exact match after normalization."""
    key = _normalize_place(name)
    try:
        return gazetteer.places[key]
    except KeyError:
        raise NameNotFound(f"place {name!r} not in gazetteer") from None


# -- loading ----------------------------------------------------------------

_BOOL_LITERALS = {"true": True, "false": False}


def _infer_column(values) -> str:
    """Column type from raw string cells: boolean < number < text."""
    non_missing = [v for v in values if v is not None and v != ""]
    if not non_missing:
        return "text"
    if all(str(v).strip().lower() in _BOOL_LITERALS for v in non_missing):
        return "boolean"
    try:
        for v in non_missing:
            float(v)
        return "number"
    except (TypeError, ValueError):
        return "text"


def _coerce(raw, col_type: str):
    if raw is None or raw == "":
        return None
    if col_type == "number":
        return float(raw)
    if col_type == "boolean":
        if isinstance(raw, bool):
            return raw
        return _BOOL_LITERALS[str(raw).strip().lower()]
    return str(raw)


def _rows_from_records(records: list[dict], columns: list[str]) -> tuple[list[Column], list[tuple]]:
    raw_cols = {c: [r.get(c) for r in records] for c in columns}
    specs = []
    for c in columns:
        vals = raw_cols[c]
        typed = [v for v in vals if v is not None and v != ""]
        if typed and all(isinstance(v, bool) for v in typed):
            ctype = "boolean"
        elif typed and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in typed):
            ctype = "number"
        else:
            ctype = _infer_column(vals)
        specs.append(Column(name=c, type=ctype))
    rows = []
    for r in records:
        try:
            rows.append(tuple(_coerce(r.get(c.name), c.type) for c in specs))
        except (KeyError, ValueError) as exc:
            raise FormatError(f"cell does not match column type: {exc}") from exc
    return specs, rows


def resolve_resource_path(catalog: Catalog, node: CatalogNode, data_root: str | Path) -> Path:
    """Resource location: its own template, else the parent source template
    with `{resource}` substituted by the resource name."""
    template = node.path_template
    if template is None:
        parent = parent_of(catalog, node.id)
        if parent is None or parent.path_template is None:
            raise PathError(f"resource {node.id!r} has no path template (own or inherited)")
        template = parent.path_template
    rel = template.replace("{resource}", node.name)
    return Path(data_root) / rel


def resource_format(catalog: Catalog, node: CatalogNode) -> str:
    fmt = node.format
    if fmt is None:
        parent = parent_of(catalog, node.id)
        fmt = parent.format if parent else None
    return fmt or "tabular"


def load_resource(
    node: CatalogNode,
    attributes,
    *,
    catalog: Catalog,
    data_root: str | Path,
) -> Table:
    """Load a resource file and keep only the selected attribute columns.

    Geospatial resources come back as a GeoTable with per-row geometry.
    Document resources come back as a Table(id, title, text) built from the
    directory's *.txt files, one document per file, ordered by id.
    """
    path = resolve_resource_path(catalog, node, data_root)
    fmt = resource_format(catalog, node)
    if fmt == "document":
        if not path.is_dir():
            raise PathError(f"document resource {node.id!r}: directory {path} not found")
        return _load_documents(node.name, path)
    if not path.is_file():
        raise PathError(f"resource {node.id!r}: file {path} not found")

    if fmt == "tabular":
        table = load_csv(node.name, path)
    elif fmt == "api-fixture":
        table = load_json_array(node.name, path)
    elif fmt == "geospatial":
        table = load_geojson(node.name, path)
    else:
        raise FormatError(f"resource {node.id!r} has unsupported format {fmt!r}")

    if attributes is None:
        return table
    missing = [a for a in attributes if a not in table.column_names()]
    if missing:
        raise UnknownAttribute(f"resource {node.id!r} has no column(s) {missing}")
    return _project(table, list(attributes))


def load_csv(name: str, path: Path) -> Table:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise FormatError(f"{path} has no header row")
        records = [dict(r) for r in reader]
        columns = list(reader.fieldnames)
    specs, rows = _rows_from_records(records, columns)
    return Table(name=name, columns=specs, rows=rows)


def load_json_array(name: str, path: Path) -> Table:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, list) or not all(isinstance(r, dict) for r in data):
        raise FormatError(f"{path} must be a JSON array of objects")
    columns = sorted({k for r in data for k in r})
    specs, rows = _rows_from_records(data, columns)
    return Table(name=name, columns=specs, rows=rows)


def load_geojson(name: str, path: Path) -> GeoTable:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from exc
    if (
        not isinstance(data, dict)
        or data.get("type") != "FeatureCollection"
        or not isinstance(data.get("features"), list)
    ):
        raise FormatError(f"{path} is not a GeoJSON FeatureCollection")
    records, geometry = [], []
    for feat in data["features"]:
        props = feat.get("properties") or {}
        gobj = feat.get("geometry") or {}
        gtype, coords = gobj.get("type"), gobj.get("coordinates")
        if gtype == "Point":
            lat, lon = coords[1], coords[0]
            geometry.append(geo.Point(lat=float(lat), lon=float(lon)))
        elif gtype == "LineString":
            geometry.append(geo.Polyline(points=tuple(geo.geojson_coords_to_latlon(coords))))
        else:
            raise FormatError(f"{path}: unsupported geometry type {gtype!r}")
        records.append(dict(props))
    columns = sorted({k for r in records for k in r})
    specs, rows = _rows_from_records(records, columns)
    return GeoTable(name=name, columns=specs, rows=rows, geometry=geometry)


def _load_documents(name: str, directory: Path) -> Table:
    rows = []
    for f in sorted(directory.glob("*.txt"), key=lambda p: p.stem):
        text = f.read_text(encoding="utf-8")
        first, _, _ = text.partition("\n")
        rows.append((f.stem, first.strip(), text))
    return Table(
        name=name,
        columns=[Column("id", "text"), Column("title", "text"), Column("text", "text")],
        rows=rows,
    )


def _project(table: Table, names: list[str]) -> Table:
    idx = [table.column_index(n) for n in names]
    columns = [table.columns[i] for i in idx]
    rows = [tuple(r[i] for i in idx) for r in table.rows]
    if isinstance(table, GeoTable):
        return GeoTable(name=table.name, columns=columns, rows=rows, geometry=list(table.geometry))
    return Table(name=table.name, columns=columns, rows=rows)


def concat_geotables(tables: list[GeoTable]) -> GeoTable:
    """Stack geotables row-wise; columns become the union, gaps stay missing."""
    if len(tables) == 1:
        return tables[0]
    records, geometry = [], []
    for t in tables:
        cols = t.column_names()
        for row, g in zip(t.rows, t.geometry):
            records.append({c: v for c, v in zip(cols, row)})
            geometry.append(g)
    columns = sorted({k for r in records for k in r})
    specs, rows = _rows_from_records(records, columns)
    return GeoTable(name=tables[0].name, columns=specs, rows=rows, geometry=geometry)


# -- transforms ---------------------------------------------------------------

def spatial_filter(gt: GeoTable, center: tuple[float, float], radius_km: float) -> GeoTable:
    """Rows whose geometry lies within radius_km of center (haversine).

    Polyline distance is the minimum over vertices and segment projections,
    so a line passing near the center is kept even when its vertices are far.
    """
    if radius_km <= 0:
        raise ValueError("radius_km must be positive")
    keep = [
        i
        for i, g in enumerate(gt.geometry)
        if geo.geometry_distance_km(g, center) <= radius_km
    ]
    return GeoTable(
        name=gt.name,
        columns=list(gt.columns),
        rows=[gt.rows[i] for i in keep],
        geometry=[gt.geometry[i] for i in keep],
    )


def fill_missing(t: Table) -> Table:
    """Replace missing cells: numbers with 0, text with "None", booleans with False."""
    fills = {"number": 0.0, "text": "None", "boolean": False}
    rows = [
        tuple(fills[c.type] if v is None else v for v, c in zip(row, t.columns))
        for row in t.rows
    ]
    if isinstance(t, GeoTable):
        return GeoTable(name=t.name, columns=list(t.columns), rows=rows, geometry=list(t.geometry))
    return Table(name=t.name, columns=list(t.columns), rows=rows)


def visual_annotate(t: Table, image_column: str, question: str, vqa) -> Table:
    """Ask the visual provider one question per row; append a vqa_answer column."""
    idx = t.column_index(image_column)
    answers = [str(vqa.answer(row[idx], question)) for row in t.rows]
    columns = list(t.columns) + [Column("vqa_answer", "text")]
    rows = [row + (ans,) for row, ans in zip(t.rows, answers)]
    if isinstance(t, GeoTable):
        return GeoTable(name=t.name, columns=columns, rows=rows, geometry=list(t.geometry))
    return Table(name=t.name, columns=columns, rows=rows)


# -- querying -----------------------------------------------------------------

def _canonical_op(op: str) -> str:
    op = _OP_ALIASES.get(op, op)
    if op not in FILTER_OPS:
        raise TypeMismatch(f"unknown filter operator {op!r}")
    return op


def _apply_filter(table: Table, f: dict) -> list[tuple]:
    col = f["column"]
    op = _canonical_op(f["op"])
    value = f["value"]
    i = table.column_index(col)
    ctype = table.column(col).type

    if op in ("<", "≤", ">", "≥"):
        if ctype != "number":
            raise TypeMismatch(f"numeric comparison on non-numeric column {col!r}")
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise TypeMismatch(f"numeric comparison against non-numeric value {value!r}")
        ops = {
            "<": lambda a: a < value,
            "≤": lambda a: a <= value,
            ">": lambda a: a > value,
            "≥": lambda a: a >= value,
        }
        pred = ops[op]
        return [r for r in table.rows if r[i] is not None and pred(r[i])]
    if op == "contains":
        if ctype != "text":
            raise TypeMismatch(f"contains requires a text column, {col!r} is {ctype}")
        needle = str(value)
        return [r for r in table.rows if r[i] is not None and needle in r[i]]
    # = / ≠ compare within the column's type.
    if ctype == "number":
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise TypeMismatch(f"equality against {value!r} on numeric column {col!r}")
        value = float(value)
    elif ctype == "boolean" and not isinstance(value, bool):
        raise TypeMismatch(f"equality against {value!r} on boolean column {col!r}")
    elif ctype == "text":
        value = str(value)
    if op == "=":
        return [r for r in table.rows if r[i] == value]
    return [r for r in table.rows if r[i] != value]


def run_query(store: dict[str, Table], q: TableQuery) -> Table:
    """Filters (conjunctive), then projection, aggregation, sort, limit."""
    if q.table not in store:
        raise UnknownTable(f"no table named {q.table!r} in store")
    table = store[q.table]

    rows = table.rows
    work = Table(name=table.name, columns=list(table.columns), rows=list(rows))
    for f in q.filters:
        work = Table(name=work.name, columns=work.columns, rows=_apply_filter(work, f))

    if q.project:
        work = _project(work, list(q.project))

    if q.aggregate:
        fn = q.aggregate["fn"]
        col = q.aggregate.get("column", "")
        if fn not in AGGREGATE_FNS:
            raise TypeMismatch(f"unknown aggregate function {fn!r}")
        if fn == "count":
            out_val: float = float(len(work.rows))
        else:
            i = work.column_index(col)
            if work.column(col).type != "number":
                raise TypeMismatch(f"{fn} requires a numeric column, {col!r} is not")
            vals = [r[i] for r in work.rows if r[i] is not None]
            if not vals:
                out_val = 0.0
            elif fn == "sum":
                out_val = float(sum(vals))
            elif fn == "min":
                out_val = float(min(vals))
            elif fn == "max":
                out_val = float(max(vals))
            else:
                out_val = float(sum(vals) / len(vals))
        label = f"{fn}_{col}" if col else fn
        work = Table(name=work.name, columns=[Column(label, "number")], rows=[(out_val,)])

    if q.sort:
        col = q.sort["column"]
        direction = q.sort.get("direction", "asc")
        i = work.column_index(col)
        work = Table(
            name=work.name,
            columns=work.columns,
            rows=sorted(work.rows, key=lambda r: (r[i] is None, r[i]), reverse=direction == "desc"),
        )

    if q.limit is not None:
        if q.limit < 1:
            raise TypeMismatch("limit must be a positive integer")
        work = Table(name=work.name, columns=work.columns, rows=work.rows[: q.limit])
    return work


# -- document retrieval --------------------------------------------------------

_TOKEN_RE = re.compile(r"\w+")


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.casefold())


def retrieve_documents(corpus, query: str, k: int) -> list[dict]:
    """Top-k documents by summed query-term frequency; ties break by id.

    Scores are computed over case-folded title+text tokens, so the ranking
    is invariant to the corpus input order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query_tokens = _tokens(query)
    scored = []
    for doc in corpus:
        counts: dict[str, int] = {}
        for tok in _tokens(doc.get("title", "")) + _tokens(doc.get("text", "")):
            counts[tok] = counts.get(tok, 0) + 1
        score = sum(counts.get(t, 0) for t in query_tokens)
        scored.append((score, doc["id"], doc))
    scored.sort(key=lambda s: (-s[0], s[1]))
    return [
        {"id": d["id"], "title": d.get("title", ""), "text": d.get("text", ""), "score": score}
        for score, _, d in scored[:k]
    ]


def table_to_documents(t: Table) -> list[dict]:
    """View a document-format Table(id, title, text) as a retrieval corpus."""
    ii, ti, xi = t.column_index("id"), t.column_index("title"), t.column_index("text")
    return [{"id": r[ii], "title": r[ti], "text": r[xi]} for r in t.rows]


def table_to_dict(t: Table) -> dict:
    """JSON-friendly rendering of a table (used by results and the server)."""
    out = {
        "name": t.name,
        "columns": [{"name": c.name, "type": c.type} for c in t.columns],
        "rows": [list(r) for r in t.rows],
    }
    if isinstance(t, GeoTable):
        geoms = []
        for g in t.geometry:
            if isinstance(g, geo.Point):
                geoms.append({"type": "point", "coordinates": [g.lat, g.lon]})
            else:
                geoms.append({"type": "polyline", "coordinates": [list(p) for p in g.points]})
        out["geometry"] = geoms
    return out

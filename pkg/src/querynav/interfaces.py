"""Executable interfaces dispatched after the filtering cascade.

Five implementations ship by default, registered under well-known ids that
the catalog's Interface nodes are expected to use (or a caller registers
its own): information_retrieval, route_planning, route_monitoring,
law_retrieval, document_retrieval. Each consumes the session's committed
selections, may ask the decision provider for interface-specific structure,
and returns an output whose text is threaded into the context of the
interfaces that run after it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import geo, ingest
from .agent import DecisionRequest, decide
from .catalog import Catalog, CatalogNode, children, parent_of
from .errors import InterfaceError
from .ingest import GeoTable, Gazetteer, Table, TableQuery, geocode
from .planner import (
    Action,
    Constraint,
    DriverAttribute,
    DriverSpec,
    Operand,
    canonical_operator,
    k_fastest_routes,
    model_to_dict,
    monitor_routes,
    plan_route,
    validate_model,
)
from .providers import StubVisualProvider
from .roadgraph import (
    build_graph,
    largest_component,
    nearest_node,
    route_geojson,
    spatial_join,
)
from .schema import DecisionSchema, FieldSpec

_ASCII_OPERATORS = (">", ">=", "<", "<=", "=", "!=")
_VALUE_KINDS = ("number", "text", "edge_attribute", "driver_attribute")


@dataclass
class Environment:
    """Everything interfaces need beyond the session itself."""

    catalog: Catalog
    data_root: Path
    gazetteer: Gazetteer
    vqa: StubVisualProvider = field(default_factory=StubVisualProvider)
    document_k: int = 3
    max_decision_attempts: int = 3


@dataclass
class InterfaceOutput:
    kind: str  # table | text | route | findings
    payload: dict
    text: str
    provenance: list[tuple[str, str]]


@dataclass
class ExecutionContext:
    query: str
    provider: object
    env: Environment
    selections: dict[str, list[str]]
    prior: list[InterfaceOutput] = field(default_factory=list)
    log: object = None  # callable(dict) appending to the session log

    def record_decision(self, interface_id: str, name: str, value) -> None:
        if self.log is not None:
            self.log(
                {
                    "event": "decision",
                    "stage": "Execute",
                    "interface": interface_id,
                    "name": name,
                    "value": value,
                }
            )

    def ask(self, interface_id: str, name: str, context: str, fields) -> dict:
        request = DecisionRequest(
            context=context,
            schema=DecisionSchema(fields=tuple(fields)),
            max_attempts=self.env.max_decision_attempts,
        )
        value = decide(self.provider, request)
        self.record_decision(interface_id, name, value)
        return value

    def prior_text(self) -> str:
        blocks = [out.text for out in self.prior if out.text]
        if not blocks:
            return ""
        return "Results from earlier interfaces:\n" + "\n\n".join(blocks)


def _committed(ctx: ExecutionContext, stage: str) -> list[str]:
    return list(ctx.selections.get(stage, []))


def _committed_resources(ctx: ExecutionContext) -> list[CatalogNode]:
    cat = ctx.env.catalog
    return [cat.node(i) for i in _committed(ctx, "SelectResources")]


def _attributes_for(ctx: ExecutionContext, resource_id: str) -> list[str] | None:
    """Committed attribute column names under one resource; None = take all."""
    cat = ctx.env.catalog
    committed = set(_committed(ctx, "SelectAttributes"))
    names = [
        n.name
        for n in children(cat, resource_id, "contains")
        if n.id in committed
    ]
    return names or None


def _uses_linked_sources(ctx: ExecutionContext, interface_id: str) -> set[str]:
    cat = ctx.env.catalog
    if not cat.has(interface_id):
        return set()
    return {n.id for n in children(cat, interface_id, "uses")}


def _resources_for_interface(
    ctx: ExecutionContext, interface_id: str, formats: set[str]
) -> list[tuple[CatalogNode, CatalogNode]]:
    """(source, resource) pairs committed under this interface's sources."""
    cat = ctx.env.catalog
    allowed = _uses_linked_sources(ctx, interface_id)
    out = []
    for res in _committed_resources(ctx):
        src = parent_of(cat, res.id)
        if src is None or src.id not in allowed or src.id not in _committed(ctx, "SelectSources"):
            continue
        if ingest.resource_format(cat, res) in formats:
            out.append((src, res))
    return out


def _load(ctx: ExecutionContext, res: CatalogNode) -> Table:
    return ingest.load_resource(
        res,
        _attributes_for(ctx, res.id),
        catalog=ctx.env.catalog,
        data_root=ctx.env.data_root,
    )


def _table_preview(t: Table, limit: int = 5) -> str:
    head = ", ".join(c.name for c in t.columns)
    lines = [f"table {t.name} ({len(t.rows)} rows): {head}"]
    for r in t.rows[:limit]:
        lines.append("  " + ", ".join(str(v) for v in r))
    return "\n".join(lines)


# -- information retrieval ----------------------------------------------------

def _image_column(t: Table) -> str | None:
    for c in t.columns:
        if c.name.startswith("image"):
            return c.name
    return None


def _coerce_filter_value(table: Table, column: str, raw: str):
    ctype = table.column(column).type
    if ctype == "number":
        return float(raw)
    if ctype == "boolean":
        return str(raw).strip().lower() == "true"
    return str(raw)


def run_information_retrieval(ctx: ExecutionContext, interface_id: str) -> InterfaceOutput:
    pairs = _resources_for_interface(
        ctx, interface_id, {"tabular", "geospatial", "api-fixture"}
    )
    if not pairs:
        raise ValueError("no tabular/geospatial resources committed for information retrieval")

    loaded: dict[str, Table] = {}
    provenance = []
    base_context = f"User query: {ctx.query}\n{ctx.prior_text()}".strip()

    tables = [(src, res, _load(ctx, res)) for src, res in pairs]
    if any(isinstance(t, GeoTable) for _, _, t in tables):
        value = ctx.ask(
            interface_id,
            "spatial_scope",
            base_context
            + "\nSome of the selected data is geospatial. Decide whether the query "
            "is about a specific area, and if so name the place and a radius.",
            [
                FieldSpec("use_spatial", "whether to filter by location", "boolean"),
                FieldSpec("location", "place name, empty if unused", "text"),
                FieldSpec(
                    "radius_km",
                    "radius of interest in km",
                    "number",
                    constraints=({"kind": "numeric-range", "min": 0},),
                ),
                FieldSpec("rationale", "one-line reasoning", "text"),
            ],
        )
        if value["use_spatial"]:
            center = geocode(ctx.env.gazetteer, value["location"])
            radius = float(value["radius_km"])
            tables = [
                (src, res, ingest.spatial_filter(t, center, radius) if isinstance(t, GeoTable) else t)
                for src, res, t in tables
            ]

    if any(_image_column(t) for _, _, t in tables):
        value = ctx.ask(
            interface_id,
            "visual_question",
            base_context
            + "\nSome rows carry camera images. Decide whether a visual check helps "
            "this query, and if so phrase one yes/no question about the image.",
            [
                FieldSpec("ask_visual", "whether to query the images", "boolean"),
                FieldSpec("question", "question to ask about each image", "text"),
                FieldSpec("rationale", "one-line reasoning", "text"),
            ],
        )
        if value["ask_visual"]:
            tables = [
                (
                    src,
                    res,
                    ingest.visual_annotate(t, _image_column(t), value["question"], ctx.env.vqa)
                    if _image_column(t)
                    else t,
                )
                for src, res, t in tables
            ]

    for src, res, t in tables:
        loaded[t.name] = ingest.fill_missing(t)
        provenance.append((src.id, res.id))

    column_pool = sorted({c for t in loaded.values() for c in t.column_names()})
    value = ctx.ask(
        interface_id,
        "table_query",
        base_context
        + "\nLoaded tables:\n"
        + "\n".join(_table_preview(t) for t in loaded.values())
        + "\nDefine one structured query answering the user.",
        [
            FieldSpec("table", "table to query", "choice", choices=tuple(sorted(loaded))),
            FieldSpec(
                "filters",
                "conjunctive row filters",
                "list-of",
                fields=(
                    FieldSpec("column", "column name", "choice", choices=tuple(column_pool)),
                    FieldSpec("op", "comparison", "choice", choices=("=", "!=", "<", "<=", ">", ">=", "contains")),
                    FieldSpec("value", "comparison value as text", "text"),
                ),
            ),
            FieldSpec("project", "columns to keep, empty = all", "list-of-choice", choices=tuple(column_pool)),
            FieldSpec("aggregate_fn", "aggregation", "choice", choices=("none", "count", "sum", "min", "max", "avg")),
            FieldSpec("aggregate_column", "column to aggregate, empty if none", "text"),
            FieldSpec("sort_column", "column to sort by, empty if none", "text"),
            FieldSpec("sort_direction", "sort direction", "choice", choices=("asc", "desc", "none")),
            FieldSpec("limit", "max rows, 0 = unlimited", "number", constraints=({"kind": "numeric-range", "min": 0},)),
            FieldSpec("rationale", "one-line reasoning", "text"),
        ],
    )

    target = loaded[value["table"]]
    filters = [
        {
            "column": f["column"],
            "op": f["op"],
            "value": _coerce_filter_value(target, f["column"], f["value"]),
        }
        for f in value["filters"]
    ]
    q = TableQuery(
        table=value["table"],
        filters=filters,
        project=list(value["project"]),
        aggregate=(
            {"fn": value["aggregate_fn"], "column": value["aggregate_column"]}
            if value["aggregate_fn"] != "none"
            else None
        ),
        sort=(
            {"column": value["sort_column"], "direction": value["sort_direction"]}
            if value["sort_column"] and value["sort_direction"] != "none"
            else None
        ),
        limit=int(value["limit"]) or None,
    )
    result = ingest.run_query(loaded, q)
    return InterfaceOutput(
        kind="table",
        payload={"table": ingest.table_to_dict(result)},
        text=_table_preview(result, limit=10),
        provenance=provenance,
    )


# -- document interfaces --------------------------------------------------------

def _run_document_search(ctx: ExecutionContext, interface_id: str, label: str) -> InterfaceOutput:
    pairs = _resources_for_interface(ctx, interface_id, {"document"})
    if not pairs:
        raise ValueError(f"no document resources committed for {label}")
    corpus = []
    provenance = []
    for src, res in pairs:
        corpus.extend(ingest.table_to_documents(_load(ctx, res)))
        provenance.append((src.id, res.id))
    ranked = ingest.retrieve_documents(corpus, ctx.query, k=ctx.env.document_k)
    blocks = []
    for doc in ranked:
        snippet = " ".join(doc["text"].split())[:300]
        blocks.append(f"[{doc['id']}] {doc['title']} (score {doc['score']})\n{snippet}")
    return InterfaceOutput(
        kind="text",
        payload={"documents": ranked},
        text=f"{label} results:\n" + "\n\n".join(blocks),
        provenance=provenance,
    )


def run_law_retrieval(ctx: ExecutionContext, interface_id: str) -> InterfaceOutput:
    return _run_document_search(ctx, interface_id, "Regulation search")


def run_document_retrieval(ctx: ExecutionContext, interface_id: str) -> InterfaceOutput:
    return _run_document_search(ctx, interface_id, "Internal document search")


# -- road graph assembly ---------------------------------------------------------

def _assemble_graph(ctx: ExecutionContext, interface_id: str):
    """Graph from committed polyline resources plus attribute joins.

    Road segments come from the interface's uses-linked geospatial sources;
    every other committed non-document resource is fused onto the edges by
    segment id where available, geometry otherwise.
    """
    road_pairs = _resources_for_interface(ctx, interface_id, {"geospatial"})
    provenance = []
    road_tables = []
    road_ids = set()
    for src, res in road_pairs:
        t = _load(ctx, res)
        if isinstance(t, GeoTable) and t.geometry and all(
            not isinstance(g, geo.Point) for g in t.geometry
        ):
            road_tables.append(t)
            road_ids.add(res.id)
            provenance.append((src.id, res.id))
    if not road_tables:
        raise ValueError("no road-segment resources committed (geospatial polylines)")

    graph = build_graph(ingest.concat_geotables(road_tables))
    graph = largest_component(graph)

    cat = ctx.env.catalog
    for res in _committed_resources(ctx):
        if res.id in road_ids:
            continue
        fmt = ingest.resource_format(cat, res)
        if fmt == "document":
            continue
        t = ingest.fill_missing(_load(ctx, res))
        key = "nid" if "nid" in t.column_names() else None
        graph = spatial_join(graph, t, key_column=key)
        src = parent_of(cat, res.id)
        provenance.append((src.id if src else "", res.id))
    return graph, provenance


# -- route planning ---------------------------------------------------------------

def _parse_action_value(kind: str, raw: str):
    if kind == "number":
        return float(raw)
    if kind == "text":
        return str(raw)
    if kind == "edge_attribute":
        return Operand(source="edge", attribute=str(raw))
    return Operand(source="driver", attribute=str(raw))


def run_route_planning(ctx: ExecutionContext, interface_id: str) -> InterfaceOutput:
    graph, provenance = _assemble_graph(ctx, interface_id)
    edge_names = sorted(graph.edge_attribute_names())
    base_context = f"User query: {ctx.query}\n{ctx.prior_text()}".strip()

    attrs_value = ctx.ask(
        interface_id,
        "driver_attributes",
        base_context
        + "\nModel the driver for this route. List the numeric attributes that "
        "must accumulate along the way (all start at 0 and should count up).",
        [
            FieldSpec(
                "attributes",
                "driver attributes",
                "list-of",
                fields=(
                    FieldSpec("name", "lowercase identifier", "text", constraints=({"kind": "identifier"},)),
                    FieldSpec("description", "what it tracks", "text"),
                ),
                constraints=({"kind": "non-empty"},),
            ),
            FieldSpec("rationale", "one-line reasoning", "text"),
        ],
    )
    attr_names = tuple(a["name"] for a in attrs_value["attributes"])

    setup = ctx.ask(
        interface_id,
        "route_setup",
        base_context + "\nName the start and end places and the attribute to minimize.",
        [
            FieldSpec("from_location", "start place name", "text", constraints=({"kind": "non-empty"},)),
            FieldSpec("to_location", "end place name", "text", constraints=({"kind": "non-empty"},)),
            FieldSpec("objective", "attribute to minimize", "choice", choices=attr_names),
            FieldSpec("rationale", "one-line reasoning", "text"),
        ],
    )

    actions_value = ctx.ask(
        interface_id,
        "actions",
        base_context
        + "\nDefine the per-edge actions updating the driver attributes. "
        + f"Edge attributes available: {', '.join(edge_names)}.",
        [
            FieldSpec(
                "actions",
                "per-edge updates, applied in order",
                "list-of",
                fields=(
                    FieldSpec("name", "short name", "text"),
                    FieldSpec("description", "what it does", "text"),
                    FieldSpec("target", "driver attribute to update", "choice", choices=attr_names),
                    FieldSpec("operation", "operator", "choice",
                              choices=("add", "subtract", "multiply", "divide", "set", "none")),
                    FieldSpec("value_kind", "what the value is", "choice", choices=_VALUE_KINDS),
                    FieldSpec("value", "number, text, or attribute name", "text"),
                ),
                constraints=({"kind": "non-empty"},),
            ),
            FieldSpec("rationale", "one-line reasoning", "text"),
        ],
    )

    concepts = ctx.ask(
        interface_id,
        "constraint_concepts",
        base_context
        + "\nName the constraints the route must respect (concepts only; "
        "details come next). May be empty.",
        [
            FieldSpec(
                "constraints",
                "constraint concepts",
                "list-of",
                fields=(
                    FieldSpec("name", "short name", "text"),
                    FieldSpec("description", "what it protects against", "text"),
                ),
            ),
            FieldSpec("rationale", "one-line reasoning", "text"),
        ],
    )

    constraints = []
    for concept in concepts["constraints"]:
        detail = ctx.ask(
            interface_id,
            f"constraint_detail:{concept['name']}",
            base_context
            + f"\nDefine the trigger for constraint {concept['name']!r} "
            f"({concept['description']}). Edges are skipped when it holds. "
            f"Edge attributes: {', '.join(edge_names)}. Driver attributes: {', '.join(attr_names)}.",
            [
                FieldSpec("operator", "comparison", "choice", choices=_ASCII_OPERATORS),
                FieldSpec("operand1_source", "left side source", "choice", choices=("edge", "driver")),
                FieldSpec("operand1_attribute", "left side attribute", "text", constraints=({"kind": "non-empty"},)),
                FieldSpec("operand2_kind", "right side kind", "choice", choices=_VALUE_KINDS),
                FieldSpec("operand2", "number, text, or attribute name", "text"),
                FieldSpec("rationale", "one-line reasoning", "text"),
            ],
        )
        constraints.append(
            Constraint(
                name=concept["name"],
                description=concept["description"],
                operator=canonical_operator(detail["operator"]),
                operand1=Operand(source=detail["operand1_source"], attribute=detail["operand1_attribute"]),
                operand2=_parse_action_value(detail["operand2_kind"], detail["operand2"]),
            )
        )

    spec = DriverSpec(
        attributes=tuple(
            DriverAttribute(name=a["name"], description=a["description"])
            for a in attrs_value["attributes"]
        ),
        objective=setup["objective"],
    )
    actions = [
        Action(
            name=a["name"],
            description=a["description"],
            target=a["target"],
            operation=a["operation"],
            value=_parse_action_value(a["value_kind"], a["value"]),
        )
        for a in actions_value["actions"]
    ]

    report = validate_model(spec, actions, constraints, graph.edge_attribute_names())
    if not report.ok:
        raise ValueError(f"planning model invalid:\n{report.render()}")

    start = nearest_node(graph, geocode(ctx.env.gazetteer, setup["from_location"]))
    end = nearest_node(graph, geocode(ctx.env.gazetteer, setup["to_location"]))
    route = plan_route(graph, start, end, spec, actions, constraints)

    constraint_docs = [
        {
            "name": c.name,
            "description": c.description,
            "operator": c.operator,
            "operand1": {"source": c.operand1.source, "attribute": c.operand1.attribute},
            "operand2": (
                {"source": c.operand2.source, "attribute": c.operand2.attribute}
                if isinstance(c.operand2, Operand)
                else c.operand2
            ),
        }
        for c in constraints
    ]
    text = (
        f"Route {setup['from_location']} -> {setup['to_location']}: "
        f"{len(route.edges)} edges, {setup['objective']}={route.objective_value:.3f}. "
        f"Constraints: {', '.join(c.name for c in constraints) or 'none'}."
    )
    payload = {
        "geojson": route_geojson(
            graph,
            route.edges,
            {"objective": spec.objective, "objective_value": route.objective_value},
        ),
        "objective": spec.objective,
        "objective_value": route.objective_value,
        "edges": list(route.edges),
        "edge_attributes": [dict(graph.edge(e).attributes) for e in route.edges],
        "constraints": constraint_docs,
        "model": model_to_dict(spec, actions, constraints),
        "trace": [dict(s.values) for s in route.trace],
        "settled_count": route.settled_count,
        "from": setup["from_location"],
        "to": setup["to_location"],
        "text": text,
    }
    return InterfaceOutput(kind="route", payload=payload, text=text, provenance=provenance)


# -- route monitoring -------------------------------------------------------------

def run_route_monitoring(ctx: ExecutionContext, interface_id: str) -> InterfaceOutput:
    graph, provenance = _assemble_graph(ctx, interface_id)
    base_context = f"User query: {ctx.query}\n{ctx.prior_text()}".strip()
    setup = ctx.ask(
        interface_id,
        "monitor_setup",
        base_context
        + "\nName the start and end places to monitor, and how many of the "
        "fastest routes to check (at most 10).",
        [
            FieldSpec("from_location", "start place name", "text", constraints=({"kind": "non-empty"},)),
            FieldSpec("to_location", "end place name", "text", constraints=({"kind": "non-empty"},)),
            FieldSpec(
                "route_count",
                "how many fastest routes",
                "number",
                constraints=({"kind": "numeric-range", "min": 1, "max": 10},),
            ),
            FieldSpec("rationale", "one-line reasoning", "text"),
        ],
    )
    start = nearest_node(graph, geocode(ctx.env.gazetteer, setup["from_location"]))
    end = nearest_node(graph, geocode(ctx.env.gazetteer, setup["to_location"]))
    routes = k_fastest_routes(graph, start, end, int(setup["route_count"]))
    findings = monitor_routes(routes, graph)

    route_payloads = []
    for i, r in enumerate(routes):
        route_payloads.append(
            {
                "rank": i,
                "travel_time_s": r.objective_value,
                "edges": list(r.edges),
                "geojson": route_geojson(graph, r.edges, {"rank": i, "travel_time_s": r.objective_value}),
            }
        )
    text = (
        f"Monitored {len(routes)} route(s) {setup['from_location']} -> {setup['to_location']}; "
        f"{len(findings.rows)} finding(s) on their segments."
    )
    return InterfaceOutput(
        kind="findings",
        payload={
            "routes": route_payloads,
            "findings": ingest.table_to_dict(findings),
            "from": setup["from_location"],
            "to": setup["to_location"],
            "text": text,
        },
        text=text,
        provenance=provenance,
    )


# -- registry ----------------------------------------------------------------------

STANDARD_INTERFACES = {
    "information_retrieval": run_information_retrieval,
    "route_planning": run_route_planning,
    "route_monitoring": run_route_monitoring,
    "law_retrieval": run_law_retrieval,
    "document_retrieval": run_document_retrieval,
}


class InterfaceRegistry:
    """Maps catalog Interface node ids to runnable implementations."""

    def __init__(self, env: Environment):
        self.env = env
        self._impls = dict(STANDARD_INTERFACES)

    def register(self, interface_id: str, impl) -> None:
        self._impls[interface_id] = impl

    def known(self, interface_id: str) -> bool:
        return interface_id in self._impls

    def run(self, interface_id: str, ctx: ExecutionContext) -> InterfaceOutput:
        try:
            impl = self._impls[interface_id]
        except KeyError:
            raise InterfaceError(interface_id, "no implementation registered") from None
        try:
            return impl(ctx, interface_id)
        except InterfaceError:
            raise
        except Exception as exc:
            raise InterfaceError(interface_id, exc) from exc

"""Hierarchical metadata catalog: task types, objectives, data hierarchy, interfaces.

The catalog is a flat file standing in for a graph database. Nodes carry a
kind, a description, and (for data sources / resources) a path template;
edges express containment (source -> resource -> attribute), task-type
serving, and interface applicability. The catalog is immutable after load
and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IntegrityError, ParseError, UnknownNode

NODE_KINDS = ("TaskType", "Objective", "DataSource", "Resource", "Attribute", "Interface")
EDGE_RELS = ("contains", "serves", "uses")
FORMATS = ("tabular", "geospatial", "document", "api-fixture")


@dataclass(frozen=True)
class CatalogNode:
    id: str
    kind: str
    name: str
    description: str = ""
    path_template: str | None = None
    format: str | None = None
    # Data sources that must be pulled in whenever one of these task types
    # was classified, regardless of the agent's source selection.
    always_include_for: tuple[str, ...] = ()


@dataclass(frozen=True)
class CatalogEdge:
    from_id: str
    to_id: str
    rel: str


@dataclass
class Catalog:
    nodes: list[CatalogNode]
    edges: list[CatalogEdge]
    _by_id: dict[str, CatalogNode] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._by_id = {n.id: n for n in self.nodes}

    def node(self, node_id: str) -> CatalogNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise UnknownNode(f"no catalog node with id {node_id!r}") from None

    def has(self, node_id: str) -> bool:
        return node_id in self._by_id


def _node_from_dict(raw: dict) -> CatalogNode:
    if not isinstance(raw, dict):
        raise ParseError(f"node entry must be an object, got {type(raw).__name__}")
    try:
        node_id = raw["id"]
        kind = raw["kind"]
        name = raw["name"]
    except KeyError as exc:
        raise ParseError(f"node missing required field {exc}") from None
    if kind not in NODE_KINDS:
        raise ParseError(f"node {node_id!r} has unknown kind {kind!r}")
    fmt = raw.get("format")
    if fmt is not None and fmt not in FORMATS:
        raise ParseError(f"node {node_id!r} has unknown format {fmt!r}")
    return CatalogNode(
        id=str(node_id),
        kind=kind,
        name=str(name),
        description=str(raw.get("description", "")),
        path_template=raw.get("path_template"),
        format=fmt,
        always_include_for=tuple(raw.get("always_include_for", ())),
    )


def _edge_from_dict(raw: dict) -> CatalogEdge:
    if not isinstance(raw, dict):
        raise ParseError(f"edge entry must be an object, got {type(raw).__name__}")
    try:
        return CatalogEdge(from_id=str(raw["from"]), to_id=str(raw["to"]), rel=raw["rel"])
    except KeyError as exc:
        raise ParseError(f"edge missing required field {exc}") from None


# Allowed (from-kind, to-kind) pairs per relation. The `uses` relation links
# an interface to data sources whose format it can consume.
_REL_KINDS = {
    "contains": {("DataSource", "Resource"), ("Resource", "Attribute")},
    "serves": {("TaskType", "DataSource")},
    "uses": {("Interface", "DataSource")},
}


def _check_integrity(catalog: Catalog) -> None:
    seen: set[str] = set()
    for node in catalog.nodes:
        if node.id in seen:
            raise IntegrityError(f"duplicate node id {node.id!r}")
        seen.add(node.id)

    parents: dict[str, list[str]] = {}
    for edge in catalog.edges:
        if edge.rel not in EDGE_RELS:
            raise IntegrityError(f"unknown edge relation {edge.rel!r}")
        for endpoint in (edge.from_id, edge.to_id):
            if endpoint not in seen:
                raise IntegrityError(f"edge references missing node id {endpoint!r}")
        pair = (catalog.node(edge.from_id).kind, catalog.node(edge.to_id).kind)
        if pair not in _REL_KINDS[edge.rel]:
            raise IntegrityError(
                f"{edge.rel} edge may not link {pair[0]} -> {pair[1]} ({edge.from_id} -> {edge.to_id})"
            )
        if edge.rel == "contains":
            parents.setdefault(edge.to_id, []).append(edge.from_id)

    for node in catalog.nodes:
        if node.kind in ("Resource", "Attribute"):
            count = len(parents.get(node.id, []))
            if count != 1:
                raise IntegrityError(
                    f"{node.kind} node {node.id!r} must have exactly one contains-parent, has {count}"
                )

    # The contains graph must be a forest: each child has one parent (checked
    # above) and no node may be its own ancestor.
    parent_of = {child: ps[0] for child, ps in parents.items()}
    for start in parent_of:
        current = start
        hops = 0
        while current in parent_of:
            current = parent_of[current]
            hops += 1
            if hops > len(catalog.nodes):
                raise IntegrityError("contains edges form a cycle")


def parse_catalog(data: dict) -> Catalog:
    """Build and integrity-check a Catalog from a parsed JSON structure."""
    if not isinstance(data, dict) or "nodes" not in data or "edges" not in data:
        raise ParseError("catalog file must be an object with 'nodes' and 'edges'")
    nodes = [_node_from_dict(n) for n in data["nodes"]]
    edges = [_edge_from_dict(e) for e in data["edges"]]
    catalog = Catalog(nodes=nodes, edges=edges)
    _check_integrity(catalog)
    return catalog


def load_catalog(path: str | Path) -> Catalog:
    """Load a catalog file (UTF-8 JSON, {nodes: [...], edges: [...]})."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read catalog file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"catalog file {path} is not valid JSON: {exc}") from exc
    return parse_catalog(data)


def catalog_to_dict(catalog: Catalog) -> dict:
    """Serialize a catalog back to its file structure (load round-trips)."""
    nodes = []
    for n in catalog.nodes:
        entry: dict = {"id": n.id, "kind": n.kind, "name": n.name, "description": n.description}
        if n.path_template is not None:
            entry["path_template"] = n.path_template
        if n.format is not None:
            entry["format"] = n.format
        if n.always_include_for:
            entry["always_include_for"] = list(n.always_include_for)
        nodes.append(entry)
    edges = [{"from": e.from_id, "to": e.to_id, "rel": e.rel} for e in catalog.edges]
    return {"nodes": nodes, "edges": edges}


def nodes_by_kind(catalog: Catalog, kind: str) -> list[CatalogNode]:
    """All nodes of a kind, ordered by id."""
    return sorted((n for n in catalog.nodes if n.kind == kind), key=lambda n: n.id)


def children(catalog: Catalog, parent: str, rel: str) -> list[CatalogNode]:
    """Nodes one `rel` edge away from `parent`, ordered by id."""
    catalog.node(parent)  # raises UnknownNode
    ids = [e.to_id for e in catalog.edges if e.rel == rel and e.from_id == parent]
    return sorted((catalog.node(i) for i in ids), key=lambda n: n.id)


def parent_of(catalog: Catalog, child: str) -> CatalogNode | None:
    """The contains-parent of a node, or None for roots."""
    catalog.node(child)
    for e in catalog.edges:
        if e.rel == "contains" and e.to_id == child:
            return catalog.node(e.from_id)
    return None


def always_included_sources(catalog: Catalog, task_type_ids) -> list[CatalogNode]:
    """DataSources flagged as mandatory for any of the given task types."""
    wanted = set(task_type_ids)
    out = [
        n
        for n in catalog.nodes
        if n.kind == "DataSource" and wanted.intersection(n.always_include_for)
    ]
    return sorted(out, key=lambda n: n.id)

"""Directed road graph built from line-segment geometry.

Segment boundary vertices become nodes, identified by their coordinates
quantized to 1e-6 degrees so genuinely shared borders merge without welding
parallel carriageways. Edges carry all attributes; nodes carry none.
Auxiliary features (conditions, alerts) are attached to edges either by
segment-identifier equality or by geometric proximity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

from . import geo
from .errors import DegenerateSegment, EmptyGraph, FragmentedNetwork
from .ingest import GeoTable, Table

NodeId = tuple[int, int]

#: Edge-count share the largest weak component must exceed (strictly).
COMPONENT_SHARE_THRESHOLD = Fraction(9999, 10000)

#: Geometric attachment tolerance for joins, metres.
DEFAULT_JOIN_TOLERANCE_M = 10.0

#: Assumed speed for travel-time weights when an edge has none.
DEFAULT_SPEED_KMH = 50.0

# Grid index cell size for nearest-node search: 0.01 degrees.
_CELL_UNITS = 10_000
_DEG_KM = math.pi / 180.0 * geo.EARTH_RADIUS_KM


@dataclass
class Edge:
    id: str
    from_node: NodeId
    to_node: NodeId
    geometry: tuple[tuple[float, float], ...]
    length_m: float
    attributes: dict = field(default_factory=dict)
    # Records attached by spatial_join: [{"table": name, "fields": {...}}].
    joined: list[dict] = field(default_factory=list)


@dataclass
class RoadGraph:
    nodes: set[NodeId]
    edges: list[Edge]
    adjacency: dict[NodeId, list[str]] = field(default_factory=dict)
    _edge_by_id: dict[str, Edge] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._edge_by_id = {e.id: e for e in self.edges}
        if not self.adjacency:
            adj: dict[NodeId, list[str]] = {n: [] for n in self.nodes}
            for e in self.edges:
                adj.setdefault(e.from_node, []).append(e.id)
                adj.setdefault(e.to_node, [])
            self.adjacency = {n: sorted(ids) for n, ids in adj.items()}

    def edge(self, edge_id: str) -> Edge:
        return self._edge_by_id[edge_id]

    def outgoing(self, node: NodeId) -> list[Edge]:
        return [self._edge_by_id[i] for i in self.adjacency.get(node, [])]

    def edge_attribute_names(self) -> set[str]:
        names = {"length_m"}
        for e in self.edges:
            names.update(e.attributes)
        return names


def build_graph(segments: GeoTable) -> RoadGraph:
    """One directed edge per traffic direction of each polyline row.

    direction attribute "forward" keeps geometry order, "backward" reverses
    it, "both" or absent emits a pair of opposing edges sharing geometry.
    """
    cols = segments.column_names()
    dir_idx = cols.index("direction") if "direction" in cols else None
    nid_idx = cols.index("nid") if "nid" in cols else None

    edges: list[Edge] = []
    used_ids: set[str] = set()
    for i, (row, g) in enumerate(zip(segments.rows, segments.geometry)):
        if not isinstance(g, geo.Polyline) or len(g.points) < 2:
            raise DegenerateSegment(f"segment row {i} has fewer than 2 vertices")
        attrs = {c: v for c, v in zip(cols, row)}
        direction = "both"
        if dir_idx is not None and row[dir_idx] not in (None, "", "None"):
            direction = str(row[dir_idx]).strip().lower()
        base = None
        if nid_idx is not None and row[nid_idx] not in (None, "", "None"):
            base = str(row[nid_idx])
        if base is None:
            base = f"seg{i}"
        if base in used_ids:
            base = f"{base}@{i}"
        used_ids.add(base)

        pts = g.points
        rev = tuple(reversed(pts))
        if direction == "forward":
            variants = [(f"{base}:f", pts)]
        elif direction == "backward":
            variants = [(f"{base}:b", rev)]
        else:
            variants = [(f"{base}:f", pts), (f"{base}:b", rev)]
        for edge_id, vertices in variants:
            edges.append(
                Edge(
                    id=edge_id,
                    from_node=geo.quantize(*vertices[0]),
                    to_node=geo.quantize(*vertices[-1]),
                    geometry=vertices,
                    length_m=geo.polyline_length_m(vertices),
                    attributes=dict(attrs),
                )
            )

    nodes = {e.from_node for e in edges} | {e.to_node for e in edges}
    return RoadGraph(nodes=nodes, edges=edges)


def largest_component(g: RoadGraph) -> RoadGraph:
    """Largest weakly-connected component, required to hold > 99.99% of edges.

    The share is computed in exact rational arithmetic; a graph failing the
    threshold raises FragmentedNetwork carrying the achieved share.
    """
    if not g.nodes:
        raise EmptyGraph("cannot take the largest component of an empty graph")
    parent: dict[NodeId, NodeId] = {n: n for n in g.nodes}

    def find(x: NodeId) -> NodeId:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: NodeId, b: NodeId) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for e in g.edges:
        union(e.from_node, e.to_node)

    edge_counts: dict[NodeId, int] = {}
    for e in g.edges:
        root = find(e.from_node)
        edge_counts[root] = edge_counts.get(root, 0) + 1
    if not edge_counts:
        raise EmptyGraph("graph has no edges")

    best_root = min(edge_counts, key=lambda r: (-edge_counts[r], r))
    share = Fraction(edge_counts[best_root], len(g.edges))
    if share <= COMPONENT_SHARE_THRESHOLD:
        raise FragmentedNetwork(share)

    kept_edges = [e for e in g.edges if find(e.from_node) == best_root]
    kept_nodes = {n for n in g.nodes if find(n) == best_root}
    return RoadGraph(nodes=kept_nodes, edges=kept_edges)


def _cell(node: NodeId) -> tuple[int, int]:
    return (node[0] // _CELL_UNITS, node[1] // _CELL_UNITS)


def nearest_node(g: RoadGraph, p: tuple[float, float]) -> NodeId:
    """Node minimizing haversine distance to p; ties break by node id.

    Uses a 0.01-degree grid with outward ring expansion; small graphs fall
    back to a linear scan, and the ring bound degrades safely to a full
    sweep near the poles where longitude cells shrink.
    """
    if not g.nodes:
        raise EmptyGraph("nearest_node on an empty graph")
    if len(g.nodes) <= 64:
        return min(g.nodes, key=lambda n: (geo.haversine_km(geo.node_latlon(n), p), n))

    grid: dict[tuple[int, int], list[NodeId]] = {}
    for n in g.nodes:
        grid.setdefault(_cell(n), []).append(n)
    q_cell = _cell(geo.quantize(*p))
    max_ring = max(
        max(abs(c[0] - q_cell[0]), abs(c[1] - q_cell[1])) for c in grid
    )

    best: NodeId | None = None
    best_km = math.inf
    ring = 0
    while ring <= max_ring:
        candidates: list[NodeId] = []
        if ring == 0:
            candidates.extend(grid.get(q_cell, []))
        else:
            r = ring
            for dx in range(-r, r + 1):
                for dy in (-r, r):
                    candidates.extend(grid.get((q_cell[0] + dx, q_cell[1] + dy), []))
            for dy in range(-r + 1, r):
                for dx in (-r, r):
                    candidates.extend(grid.get((q_cell[0] + dx, q_cell[1] + dy), []))
        for n in candidates:
            d = geo.haversine_km(geo.node_latlon(n), p)
            if d < best_km or (d == best_km and (best is None or n < best)):
                best, best_km = n, d
        if best is not None:
            # Smallest distance any cell in the next ring can contain: the
            # candidate is at least (ring) - 1 cells away on some axis; the
            # longitude axis shrinks by cos(lat), bounded conservatively.
            lat_extent = abs(p[0]) + (ring + 2) * 0.01
            cos_bound = math.cos(math.radians(min(89.9999, lat_extent)))
            floor_km = max(0.0, (ring - 1)) * 0.01 * _DEG_KM * min(1.0, max(cos_bound, 0.0))
            if ring >= 1 and floor_km > best_km:
                break
        ring += 1
    assert best is not None
    return best


def _feature_geometry_distance_km(fgeom: geo.Geometry, edge: Edge) -> float:
    if isinstance(fgeom, geo.Point):
        return geo.point_polyline_distance_km((fgeom.lat, fgeom.lon), edge.geometry)
    return geo.polyline_min_distance_km(fgeom.points, edge.geometry)


def spatial_join(
    g: RoadGraph,
    features: Table,
    tolerance_m: float = DEFAULT_JOIN_TOLERANCE_M,
    key_column: str | None = None,
) -> RoadGraph:
    """Attach feature attributes to every edge each feature matches.

    A feature with a non-missing key column matches edges whose segment
    identifier equals it; otherwise its geometry must come within
    tolerance_m of the edge. Features matching several edges attach to all
    of them. Attribute-name collisions are resolved by prefixing with the
    feature table's name; the raw records are also kept on the edge for
    downstream monitoring.
    """
    if tolerance_m <= 0:
        raise ValueError("tolerance_m must be positive")
    cols = features.column_names()
    key_idx = cols.index(key_column) if key_column in cols else None
    geoms = features.geometry if isinstance(features, GeoTable) else None

    new_edges = [
        replace(e, attributes=dict(e.attributes), joined=list(e.joined)) for e in g.edges
    ]
    by_nid: dict[str, list[Edge]] = {}
    for e in new_edges:
        nid = e.attributes.get("nid")
        if nid not in (None, "", "None"):
            by_nid.setdefault(str(nid), []).append(e)

    for ri, row in enumerate(features.rows):
        fields = {c: v for c, v in zip(cols, row)}
        matches: list[Edge] = []
        key_val = row[key_idx] if key_idx is not None else None
        if key_val not in (None, "", "None") and key_idx is not None:
            matches = by_nid.get(str(key_val), [])
        elif geoms is not None:
            fgeom = geoms[ri]
            tol_km = tolerance_m / 1000.0
            matches = [e for e in new_edges if _feature_geometry_distance_km(fgeom, e) <= tol_km]
        for e in matches:
            attach = {c: v for c, v in fields.items() if c != key_column}
            for name, value in attach.items():
                final = name if name not in e.attributes else f"{features.name}.{name}"
                e.attributes[final] = value
            e.joined.append({"table": features.name, "fields": dict(fields)})

    return RoadGraph(nodes=set(g.nodes), edges=new_edges)


def edge_travel_time_s(e: Edge) -> float:
    """Seconds to traverse an edge at its speed attribute (default 50 km/h)."""
    speed = e.attributes.get("speed_kmh")
    if not isinstance(speed, (int, float)) or isinstance(speed, bool) or speed <= 0:
        speed = DEFAULT_SPEED_KMH
    return e.length_m * 3.6 / float(speed)


def route_geojson(g: RoadGraph, edge_ids, properties: dict | None = None) -> dict:
    """GeoJSON FeatureCollection for a route: one LineString plus endpoints."""
    coords: list[tuple[float, float]] = []
    for eid in edge_ids:
        pts = list(g.edge(eid).geometry)
        if coords and coords[-1] == pts[0]:
            pts = pts[1:]
        coords.extend(pts)
    features: list[dict] = []
    if coords:
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": geo.latlon_to_geojson_coords(coords),
                },
                "properties": {"role": "route", **(properties or {})},
            }
        )
        for role, pt in (("start", coords[0]), ("end", coords[-1])):
            features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "Point", "coordinates": [pt[1], pt[0]]},
                    "properties": {"role": role},
                }
            )
    return {"type": "FeatureCollection", "features": features}

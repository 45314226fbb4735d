"""Geometry primitives: haversine distances, local projections, quantization.

All coordinates are WGS84 degrees, stored as (lat, lon) pairs. Distances are
great-circle kilometres with Earth radius 6371.0088 km. Point-to-segment
distance uses a local equirectangular projection around the query point,
which is accurate to well under a percent at the tens-of-kilometre scales
this package filters at.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_KM = 6371.0088

#: Node identity quantum: 1e-6 degrees, roughly 0.11 m of latitude.
QUANTUM_DEG = 1e-6


@dataclass(frozen=True)
class Point:
    lat: float
    lon: float


@dataclass(frozen=True)
class Polyline:
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple((float(a), float(b)) for a, b in self.points))


Geometry = Point | Polyline


def haversine_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in km between two (lat, lon) points."""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def polyline_length_m(points) -> float:
    """Sum of haversine segment lengths along a vertex list, in metres."""
    total = 0.0
    for a, b in zip(points, points[1:]):
        total += haversine_km(a, b)
    return total * 1000.0


def _local_xy(p: tuple[float, float], origin: tuple[float, float]) -> tuple[float, float]:
    # Equirectangular projection centred on `origin`, in km.
    klat = math.pi / 180.0 * EARTH_RADIUS_KM
    x = (p[1] - origin[1]) * klat * math.cos(math.radians(origin[0]))
    y = (p[0] - origin[0]) * klat
    return x, y


def point_segment_distance_km(p, a, b) -> float:
    """Distance from point `p` to the segment a-b (all (lat, lon) pairs)."""
    ax, ay = _local_xy(a, p)
    bx, by = _local_xy(b, p)
    dx, dy = bx - ax, by - ay
    seg_len2 = dx * dx + dy * dy
    if seg_len2 == 0.0:
        return haversine_km(p, a)
    # Projection parameter of p (the local origin) onto the segment.
    t = -(ax * dx + ay * dy) / seg_len2
    t = max(0.0, min(1.0, t))
    cx, cy = ax + t * dx, ay + t * dy
    return math.hypot(cx, cy)


def point_polyline_distance_km(p, points) -> float:
    """Minimum distance from a point to a polyline (vertices and segments)."""
    pts = list(points)
    if len(pts) == 1:
        return haversine_km(p, pts[0])
    return min(point_segment_distance_km(p, a, b) for a, b in zip(pts, pts[1:]))


def geometry_distance_km(geom: Geometry, center: tuple[float, float]) -> float:
    """Distance from a geometry value to a point."""
    if isinstance(geom, Point):
        return haversine_km((geom.lat, geom.lon), center)
    return point_polyline_distance_km(center, geom.points)


def polyline_min_distance_km(pa, pb) -> float:
    """Approximate minimum distance between two polylines.

    Symmetric vertex-to-polyline minimum; exact enough for join tolerances
    far above the vertex spacing.
    """
    a = list(pa)
    b = list(pb)
    d1 = min(point_polyline_distance_km(p, b) for p in a)
    d2 = min(point_polyline_distance_km(p, a) for p in b)
    return min(d1, d2)


def quantize(lat: float, lon: float) -> tuple[int, int]:
    """Quantize a coordinate pair to the node identity grid (1e-6 degrees)."""
    return (int(round(lat / QUANTUM_DEG)), int(round(lon / QUANTUM_DEG)))


def node_latlon(node_id: tuple[int, int]) -> tuple[float, float]:
    """Centre coordinates of a quantized node id."""
    return (node_id[0] * QUANTUM_DEG, node_id[1] * QUANTUM_DEG)


def geojson_coords_to_latlon(coords) -> list[tuple[float, float]]:
    """GeoJSON positions are [lon, lat]; flip to internal (lat, lon)."""
    return [(float(c[1]), float(c[0])) for c in coords]


def latlon_to_geojson_coords(points) -> list[list[float]]:
    return [[lon, lat] for lat, lon in points]

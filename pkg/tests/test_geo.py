from __future__ import annotations

from hypothesis import given, settings
from hypothesis import strategies as st

from querynav import geo

TORONTO = (43.6532, -79.3832)
OTTAWA = (45.4215, -75.6972)

lat_s = st.floats(min_value=-85, max_value=85, allow_nan=False)
lon_s = st.floats(min_value=-179, max_value=179, allow_nan=False)
point_s = st.tuples(lat_s, lon_s)


def test_toronto_ottawa_distance():
    # frozen from an independent great-circle computation (R = 6371.0088)
    assert geo.haversine_km(TORONTO, OTTAWA) == pytest_approx(352.0966506299645)


def pytest_approx(v, rel=1e-9):
    import pytest

    return pytest.approx(v, rel=rel)


@settings(max_examples=100, deadline=None)
@given(point_s, point_s)
def test_haversine_symmetry(a, b):
    assert geo.haversine_km(a, b) == geo.haversine_km(b, a)


@settings(max_examples=100, deadline=None)
@given(point_s)
def test_haversine_identity(a):
    assert geo.haversine_km(a, a) == 0.0


def test_point_segment_distance_on_segment():
    a, b = (45.0, -75.0), (45.0, -74.0)
    p = (45.0, -74.5)
    assert geo.point_segment_distance_km(p, a, b) < 0.001


def test_point_segment_distance_beyond_endpoint_uses_endpoint():
    a, b = (45.0, -75.0), (45.0, -74.0)
    p = (45.0, -75.5)
    d = geo.point_segment_distance_km(p, a, b)
    assert abs(d - geo.haversine_km(p, a)) < 0.01


def test_point_polyline_uses_projection_not_vertices():
    # point sits next to the middle of a long segment, far from both vertices
    line = [(45.0, -76.0), (45.0, -74.0)]
    p = (45.001, -75.0)
    d = geo.point_polyline_distance_km(p, line)
    assert d < 0.2
    assert min(geo.haversine_km(p, v) for v in line) > 70


def test_quantize_merges_within_half_quantum():
    base = (43.6532, -79.3832)
    jitter = (43.6532 + 4e-7, -79.3832 - 4e-7)
    assert geo.quantize(*base) == geo.quantize(*jitter)


def test_quantize_separates_distinct_coordinates():
    assert geo.quantize(43.6532, -79.3832) != geo.quantize(43.65321, -79.3832)


def test_node_latlon_round_trip():
    nid = geo.quantize(43.6532, -79.3832)
    lat, lon = geo.node_latlon(nid)
    assert abs(lat - 43.6532) < 1e-6 and abs(lon + 79.3832) < 1e-6


def test_geojson_coordinate_flip():
    assert geo.geojson_coords_to_latlon([[-79.0, 43.0]]) == [(43.0, -79.0)]
    assert geo.latlon_to_geojson_coords([(43.0, -79.0)]) == [[-79.0, 43.0]]


def test_polyline_length_sums_segments():
    pts = [TORONTO, OTTAWA]
    assert geo.polyline_length_m(pts) == pytest_approx(352096.6506299645)

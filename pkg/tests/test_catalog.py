from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from querynav.catalog import (
    catalog_to_dict,
    children,
    load_catalog,
    nodes_by_kind,
    parse_catalog,
    always_included_sources,
)
from querynav.errors import IntegrityError, ParseError, UnknownNode


def test_fixture_catalog_counts(catalog):
    assert len(nodes_by_kind(catalog, "TaskType")) == 6
    assert len(nodes_by_kind(catalog, "Objective")) == 6
    assert len(nodes_by_kind(catalog, "Interface")) == 5


def test_task_types_include_route_planning(catalog):
    names = [n.name for n in nodes_by_kind(catalog, "TaskType")]
    assert "Route Planning and Design" in names


def test_empty_catalog_is_valid():
    cat = parse_catalog({"nodes": [], "edges": []})
    assert cat.nodes == [] and cat.edges == []
    assert nodes_by_kind(cat, "Objective") == []


def test_dangling_edge_rejected():
    data = {
        "nodes": [{"id": "a", "kind": "DataSource", "name": "a", "description": ""}],
        "edges": [{"from": "a", "to": "x", "rel": "contains"}],
    }
    with pytest.raises(IntegrityError):
        parse_catalog(data)


def test_duplicate_id_rejected():
    node = {"id": "a", "kind": "Objective", "name": "a", "description": ""}
    with pytest.raises(IntegrityError):
        parse_catalog({"nodes": [node, dict(node)], "edges": []})


def test_bad_kind_rejected():
    with pytest.raises(ParseError):
        parse_catalog({"nodes": [{"id": "a", "kind": "Nope", "name": "a"}], "edges": []})


def test_contains_rel_kind_rules():
    nodes = [
        {"id": "tt", "kind": "TaskType", "name": "t"},
        {"id": "ds", "kind": "DataSource", "name": "d"},
    ]
    with pytest.raises(IntegrityError):
        parse_catalog({"nodes": nodes, "edges": [{"from": "tt", "to": "ds", "rel": "contains"}]})
    # serves in the proper direction is fine
    parse_catalog({"nodes": nodes, "edges": [{"from": "tt", "to": "ds", "rel": "serves"}]})


def test_resource_needs_exactly_one_parent():
    nodes = [
        {"id": "ds1", "kind": "DataSource", "name": "d1"},
        {"id": "ds2", "kind": "DataSource", "name": "d2"},
        {"id": "r", "kind": "Resource", "name": "r"},
    ]
    with pytest.raises(IntegrityError):
        parse_catalog({"nodes": nodes, "edges": []})
    with pytest.raises(IntegrityError):
        parse_catalog(
            {
                "nodes": nodes,
                "edges": [
                    {"from": "ds1", "to": "r", "rel": "contains"},
                    {"from": "ds2", "to": "r", "rel": "contains"},
                ],
            }
        )


def test_malformed_file_is_parse_error(tmp_path):
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        load_catalog(bad)
    with pytest.raises(ParseError):
        load_catalog(tmp_path / "missing.json")


def test_round_trip_identity(catalog, tmp_path):
    data = catalog_to_dict(catalog)
    path = tmp_path / "rt.json"
    path.write_text(json.dumps(data))
    again = load_catalog(path)
    assert catalog_to_dict(again) == data


def test_nodes_by_kind_partitions(catalog):
    kinds = ("TaskType", "Objective", "DataSource", "Resource", "Attribute", "Interface")
    total = sum(len(nodes_by_kind(catalog, k)) for k in kinds)
    assert total == len(catalog.nodes)


def test_nodes_by_kind_sorted(catalog):
    ids = [n.id for n in nodes_by_kind(catalog, "Resource")]
    assert ids == sorted(ids)


def test_children_of_source(catalog):
    kids = children(catalog, "ds_on511", "contains")
    assert [k.name for k in kids] == ["alerts", "cameras", "events", "road_conditions"]
    assert all(k.kind == "Resource" for k in kids)


def test_children_of_leaf_is_empty(catalog):
    assert children(catalog, "at_roads_nid", "contains") == []


def test_children_unknown_node(catalog):
    with pytest.raises(UnknownNode):
        children(catalog, "nonexistent", "contains")


def test_children_respect_rel_kinds(catalog):
    # every contains-child of a DataSource is a Resource, of a Resource an Attribute
    for src in nodes_by_kind(catalog, "DataSource"):
        for kid in children(catalog, src.id, "contains"):
            assert kid.kind == "Resource"
            for attr in children(catalog, kid.id, "contains"):
                assert attr.kind == "Attribute"


def test_always_included_sources(catalog):
    forced = always_included_sources(catalog, ["tt_route_planning"])
    assert [n.id for n in forced] == ["ds_nrn"]
    assert always_included_sources(catalog, ["tt_information_retrieval"]) == []


# -- generated catalogs: round trip + partition hold in general ------------------

_kind_pool = st.sampled_from(["TaskType", "Objective", "DataSource", "Interface"])


@st.composite
def small_catalogs(draw):
    n = draw(st.integers(min_value=0, max_value=8))
    nodes = []
    for i in range(n):
        kind = draw(_kind_pool)
        nodes.append(
            {"id": f"n{i}", "kind": kind, "name": f"node {i}", "description": f"d{i}"}
        )
    edges = []
    task_ids = [x["id"] for x in nodes if x["kind"] == "TaskType"]
    source_ids = [x["id"] for x in nodes if x["kind"] == "DataSource"]
    if task_ids and source_ids:
        for t in task_ids:
            if draw(st.booleans()):
                edges.append({"from": t, "to": draw(st.sampled_from(source_ids)), "rel": "serves"})
    return {"nodes": nodes, "edges": edges}


@settings(max_examples=50, deadline=None)
@given(small_catalogs())
def test_generated_round_trip(data):
    cat = parse_catalog(data)
    assert catalog_to_dict(parse_catalog(catalog_to_dict(cat))) == catalog_to_dict(cat)
    kinds = ("TaskType", "Objective", "DataSource", "Resource", "Attribute", "Interface")
    assert sum(len(nodes_by_kind(cat, k)) for k in kinds) == len(cat.nodes)

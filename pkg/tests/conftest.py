from __future__ import annotations

import json
import threading
from pathlib import Path

import pytest

from querynav.catalog import load_catalog
from querynav.ingest import Gazetteer
from querynav.interfaces import Environment, InterfaceRegistry
from querynav.providers import StubVisualProvider
from querynav.roadgraph import Edge, RoadGraph

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

LIVESTOCK_QUERY = (
    "I am transporting livestock with a truck from Toronto to Ottawa. "
    "What do I have to check. I also want to avoid ice on the roads."
)


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def catalog():
    return load_catalog(FIXTURES / "catalog.json")


@pytest.fixture(scope="session")
def gazetteer():
    return Gazetteer.from_file(FIXTURES / "gazetteer.json")


@pytest.fixture()
def environment(catalog, gazetteer):
    return Environment(
        catalog=catalog,
        data_root=FIXTURES / "data",
        gazetteer=gazetteer,
        vqa=StubVisualProvider.from_file(FIXTURES / "vqa_answers.json"),
    )


@pytest.fixture()
def registry(environment):
    return InterfaceRegistry(environment)


def scripted(name: str):
    from querynav.providers import ScriptedProvider

    return ScriptedProvider.from_file(FIXTURES / "scripted" / name)


class UniversalProvider:
    """Replays one canned response forever; handy for property tests.

    Because validation ignores extra fields, a single JSON object carrying
    every stage's field name at once satisfies any pipeline decision whose
    options cover the ids inside it.
    """

    def __init__(self, response: dict):
        self.response = json.dumps(response)
        self.calls = 0
        self._lock = threading.Lock()

    def complete(self, prompt: str) -> str:
        with self._lock:
            self.calls += 1
        return self.response


def make_edge(u, v, length, eid, **attrs) -> Edge:
    """Synthetic edge between abstract integer-pair nodes."""
    return Edge(
        id=eid,
        from_node=tuple(u),
        to_node=tuple(v),
        geometry=((0.0, 0.0), (0.0, 0.001)),
        length_m=float(length),
        attributes=attrs,
    )


def make_graph(edge_specs) -> RoadGraph:
    """Graph from (u, v, length, id[, attrs]) tuples; nodes are (i, 0) pairs."""
    edges = []
    nodes = set()
    for spec in edge_specs:
        u, v, length, eid = spec[0], spec[1], spec[2], spec[3]
        attrs = spec[4] if len(spec) > 4 else {}
        u = (u, 0) if isinstance(u, int) else tuple(u)
        v = (v, 0) if isinstance(v, int) else tuple(v)
        edges.append(make_edge(u, v, length, eid, **attrs))
        nodes.add(u)
        nodes.add(v)
    return RoadGraph(nodes=nodes, edges=edges)


def graph_from_dict(data: dict) -> RoadGraph:
    """Rebuild a synthetic graph from a frozen JSON fixture."""
    edges = [
        Edge(
            id=e["id"],
            from_node=tuple(e["from"]),
            to_node=tuple(e["to"]),
            geometry=((0.0, 0.0), (0.0, 0.001)),
            length_m=float(e["length_m"]),
            attributes=dict(e.get("attributes", {})),
        )
        for e in data["edges"]
    ]
    nodes = {tuple(n) for n in data["nodes"]}
    return RoadGraph(nodes=nodes, edges=edges)

"""Headless command line: automatic queries, direct planning, monitoring.

Exit codes: 0 success, 1 domain failure (no route, failed session),
2 usage or configuration error. Route and findings outputs always get a
matplotlib figure written next to the delimited/GeoJSON files.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import report
from .catalog import load_catalog, nodes_by_kind
from .errors import EngineError, UsageError
from .ingest import Gazetteer, geocode
from .interfaces import Environment, InterfaceRegistry
from .pipeline import open_session, run_to_completion
from .planner import (
    k_fastest_routes,
    model_from_dict,
    monitor_routes,
    plan_route,
    validate_model,
)
from .providers import StubVisualProvider, parse_provider_spec
from .roadgraph import build_graph, largest_component, nearest_node, route_geojson, spatial_join
from .ingest import fill_missing, load_geojson, load_json_array, table_to_dict


@click.group()
def main():
    """Metadata-guided querying and constrained route planning."""


def _fail_usage(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _fail_domain(message: str):
    click.echo(f"failed: {message}", err=True)
    sys.exit(1)


def _load_environment(catalog_path, gazetteer_path, data_root, vqa_path):
    catalog = load_catalog(catalog_path)
    env = Environment(
        catalog=catalog,
        data_root=Path(data_root),
        gazetteer=Gazetteer.from_file(gazetteer_path),
        vqa=StubVisualProvider.from_file(vqa_path) if vqa_path else StubVisualProvider(),
    )
    return catalog, InterfaceRegistry(env)


@main.command()
@click.argument("query")
@click.option("--catalog", "catalog_path", required=True, type=click.Path())
@click.option("--gazetteer", "gazetteer_path", required=True, type=click.Path())
@click.option("--data-root", required=True, type=click.Path())
@click.option("--provider", "provider_spec", required=True,
              help="scripted:PATH or wire:URL[,MODEL]")
@click.option("--vqa-answers", "vqa_path", type=click.Path(), default=None)
@click.option("--mode", default="automatic", show_default=True)
@click.option("--out", type=click.Path(), default=None,
              help="output stem; result files are written next to it")
def query(query, catalog_path, gazetteer_path, data_root, provider_spec, vqa_path, mode, out):
    """Run one query through the full automatic pipeline."""
    if mode != "automatic":
        _fail_usage("the CLI only runs automatic mode; control mode lives in the web UI")
    try:
        catalog, registry = _load_environment(catalog_path, gazetteer_path, data_root, vqa_path)
        provider = parse_provider_spec(provider_spec)()
    except UsageError as exc:
        _fail_usage(str(exc))
    session = open_session(query, mode, catalog, provider, registry=registry)
    try:
        run_to_completion(session)
    except EngineError as exc:
        for event in session.log:
            if event.get("event") == "failed":
                click.echo(f"stage {event['stage']} failed: {event['error']}", err=True)
        _fail_domain(str(exc))
    result = session.result.to_dict()
    text = result["payload"].get("text", "")
    click.echo(text or json.dumps(result["payload"], indent=2)[:2000])
    if out:
        for path in report.render_result_files(result, out):
            click.echo(f"wrote {path}")
    sys.exit(0)


def _load_graph_file(graph_path):
    table = load_geojson(Path(graph_path).stem, Path(graph_path))
    return build_graph(fill_missing(table))


@main.command()
@click.argument("graph_file", type=click.Path())
@click.argument("model_file", type=click.Path())
@click.option("--from", "from_name", required=True, help="start place name")
@click.option("--to", "to_name", required=True, help="end place name")
@click.option("--gazetteer", "gazetteer_path", required=True, type=click.Path())
@click.option("--out", type=click.Path(), default=None)
def plan(graph_file, model_file, from_name, to_name, gazetteer_path, out):
    """Plan a constrained route directly from a graph file and a model file."""
    try:
        graph = _load_graph_file(graph_file)
        model = json.loads(Path(model_file).read_text(encoding="utf-8"))
        spec, actions, constraints = model_from_dict(model)
        gazetteer = Gazetteer.from_file(gazetteer_path)
    except (UsageError, OSError, json.JSONDecodeError) as exc:
        _fail_usage(str(exc))
    validation = validate_model(spec, actions, constraints, graph.edge_attribute_names())
    if not validation.ok:
        _fail_usage("model invalid:\n" + validation.render())
    try:
        s = nearest_node(graph, geocode(gazetteer, from_name))
        t = nearest_node(graph, geocode(gazetteer, to_name))
        route = plan_route(graph, s, t, spec, actions, constraints)
    except EngineError as exc:
        _fail_domain(str(exc))
    click.echo(f"objective {spec.objective} = {route.objective_value}")
    click.echo(f"edges: {' '.join(route.edges)}")
    if out:
        fc = route_geojson(graph, route.edges, {
            "objective": spec.objective, "objective_value": route.objective_value,
        })
        result = {"kind": "route", "payload": {
            "geojson": fc, "trace": [s.values for s in route.trace],
        }}
        for path in report.render_result_files(result, out):
            click.echo(f"wrote {path}")
    sys.exit(0)


@main.command()
@click.argument("graph_file", type=click.Path())
@click.option("--from", "from_name", required=True)
@click.option("--to", "to_name", required=True)
@click.option("--gazetteer", "gazetteer_path", required=True, type=click.Path())
@click.option("--alerts", "alerts_path", type=click.Path(), default=None,
              help="JSON array or GeoJSON of alert features to join (by nid or geometry)")
@click.option("--k", default=3, show_default=True, help="how many fastest routes (max 10)")
@click.option("--out", type=click.Path(), default=None)
def monitor(graph_file, from_name, to_name, gazetteer_path, alerts_path, k, out):
    """Compute the k fastest routes and report joined alerts along them."""
    try:
        graph = largest_component(_load_graph_file(graph_file))
        gazetteer = Gazetteer.from_file(gazetteer_path)
        if alerts_path:
            p = Path(alerts_path)
            table = (
                load_geojson(p.stem, p) if p.suffix == ".geojson" else load_json_array(p.stem, p)
            )
            table = fill_missing(table)
            key = "nid" if "nid" in table.column_names() else None
            graph = spatial_join(graph, table, key_column=key)
    except (UsageError, OSError) as exc:
        _fail_usage(str(exc))
    try:
        s = nearest_node(graph, geocode(gazetteer, from_name))
        t = nearest_node(graph, geocode(gazetteer, to_name))
        routes = k_fastest_routes(graph, s, t, k)
    except ValueError as exc:
        _fail_usage(str(exc))
    except EngineError as exc:
        _fail_domain(str(exc))
    findings = monitor_routes(routes, graph)
    click.echo(f"{len(routes)} route(s); {len(findings.rows)} finding(s)")
    for i, r in enumerate(routes):
        click.echo(f"route {i}: travel_time_s={r.objective_value:.1f} edges={' '.join(r.edges)}")
    if out:
        payload = {
            "routes": [
                {
                    "rank": i,
                    "travel_time_s": r.objective_value,
                    "edges": list(r.edges),
                    "geojson": route_geojson(graph, r.edges, {"rank": i}),
                }
                for i, r in enumerate(routes)
            ],
            "findings": table_to_dict(findings),
        }
        for path in report.render_result_files({"kind": "findings", "payload": payload}, out):
            click.echo(f"wrote {path}")
    sys.exit(0)


@main.command("catalog-validate")
@click.option("--catalog", "catalog_path", required=True, type=click.Path())
def catalog_validate(catalog_path):
    """Load and integrity-check a catalog file; print a summary."""
    try:
        catalog = load_catalog(catalog_path)
    except UsageError as exc:
        _fail_usage(str(exc))
    for kind in ("TaskType", "Objective", "DataSource", "Resource", "Attribute", "Interface"):
        click.echo(f"{kind}: {len(nodes_by_kind(catalog, kind))}")
    click.echo(f"edges: {len(catalog.edges)}")
    click.echo("catalog ok")
    sys.exit(0)


if __name__ == "__main__":
    main()

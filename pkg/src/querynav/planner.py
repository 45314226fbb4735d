"""Constrained route planning: driver-state DSL and the stateful Dijkstra.

A Driver is a bundle of real-valued attributes, all starting at zero, that
accumulate along a route (time since rest, distance, cost). Actions update
one driver attribute per edge using a fixed operator and a literal or
attribute-sourced value; constraints compare driver/edge attributes and,
when triggered, always skip the edge. The search keeps one label per node
keyed on the objective attribute, which is exactly the published recipe --
and provably suboptimal under some active constraint patterns, so a
brute-force enumerator ships alongside as the test oracle.
"""

from __future__ import annotations

import heapq
import itertools
import re
from dataclasses import dataclass, field

from .errors import ActionFault, NoRoute, UnknownNode
from .ingest import Column, Table
from .roadgraph import Edge, NodeId, RoadGraph, edge_travel_time_s
from .schema import FieldError, ValidationReport

OPERATIONS = ("add", "subtract", "multiply", "divide", "set", "none")

OPERATORS = (">", "≥", "<", "≤", "=", "≠")
_OPERATOR_ALIASES = {">=": "≥", "<=": "≤", "!=": "≠", "==": "="}

SKIP_EDGE = "skip-edge"

_IDENT_RE = re.compile(r"^[a-z][a-z0-9_]*$")


@dataclass(frozen=True)
class DriverAttribute:
    name: str
    description: str = ""


@dataclass(frozen=True)
class DriverSpec:
    attributes: tuple[DriverAttribute, ...]
    objective: str

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))

    def attribute_names(self) -> list[str]:
        return [a.name for a in self.attributes]

    def initial_state(self) -> "DriverState":
        return DriverState(values={a.name: 0.0 for a in self.attributes})


@dataclass
class DriverState:
    values: dict[str, float]

    def copy(self) -> "DriverState":
        return DriverState(values=dict(self.values))


@dataclass(frozen=True)
class Operand:
    source: str  # "edge" | "driver"
    attribute: str


@dataclass(frozen=True)
class Action:
    name: str
    description: str
    target: str
    operation: str
    value: float | str | Operand | None = None


@dataclass(frozen=True)
class Constraint:
    name: str
    description: str
    operator: str
    operand1: Operand
    operand2: float | str | Operand
    action: str = SKIP_EDGE


def canonical_operator(op: str) -> str:
    return _OPERATOR_ALIASES.get(op, op)


def validate_model(
    spec: DriverSpec,
    actions,
    constraints,
    edge_attribute_names,
) -> ValidationReport:
    """Report-based validation of a full planning model.

    Checks the driver attribute list (unique lowercase identifiers, objective
    among them), each action's target/operation/value sources, and each
    constraint's operator and operand sources against the known edge and
    driver attribute names.
    """
    errors: list[FieldError] = []
    names = spec.attribute_names()
    driver_names = set(names)
    edge_names = set(edge_attribute_names)

    for i, a in enumerate(spec.attributes):
        if not _IDENT_RE.match(a.name):
            errors.append(FieldError(f"driver.attributes.{i}", f"{a.name!r} is not a lowercase identifier"))
    if len(driver_names) != len(names):
        errors.append(FieldError("driver.attributes", "attribute names must be unique"))
    if spec.objective not in driver_names:
        errors.append(FieldError("driver.objective", f"{spec.objective!r} is not a driver attribute"))

    def check_operand(op: Operand, path: str):
        if op.source not in ("edge", "driver"):
            errors.append(FieldError(path, "source is either the edge or the driver"))
            return
        pool = edge_names if op.source == "edge" else driver_names
        if op.attribute not in pool:
            errors.append(FieldError(path, f"{op.attribute!r} is not a known {op.source} attribute"))

    for i, act in enumerate(actions):
        base = f"actions.{i}"
        if act.target not in driver_names:
            errors.append(FieldError(f"{base}.target", f"{act.target!r} is not a driver attribute"))
        if act.operation not in OPERATIONS:
            errors.append(FieldError(f"{base}.operation", f"{act.operation!r} is not a predefined operation"))
        if isinstance(act.value, Operand):
            check_operand(act.value, f"{base}.value")

    for i, con in enumerate(constraints):
        base = f"constraints.{i}"
        if canonical_operator(con.operator) not in OPERATORS:
            errors.append(FieldError(f"{base}.operator", f"{con.operator!r} is not a comparison operator"))
        if isinstance(con.operand1, Operand):
            check_operand(con.operand1, f"{base}.operand1")
        else:
            errors.append(FieldError(f"{base}.operand1", "operand1 must name an edge or driver attribute"))
        if isinstance(con.operand2, Operand):
            check_operand(con.operand2, f"{base}.operand2")
        if con.action != SKIP_EDGE:
            errors.append(FieldError(f"{base}.action", f"the action {SKIP_EDGE!r} is always predefined"))
    return ValidationReport(errors=errors)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _edge_attribute(edge: Edge, name: str):
    if name == "length_m":
        return edge.length_m
    return edge.attributes.get(name)


def _resolve(value, state: DriverState, edge: Edge, missing_numeric: bool):
    """Literal values pass through; operands look up their source attribute.

    A missing edge attribute resolves per the fill rule: 0 in numeric
    context, "None" otherwise.
    """
    if isinstance(value, Operand):
        if value.source == "driver":
            return state.values[value.attribute]
        raw = _edge_attribute(edge, value.attribute)
        if raw is None:
            return 0.0 if missing_numeric else "None"
        return raw
    return value


def apply_action(state: DriverState, a: Action, edge: Edge) -> DriverState:
    """New driver state with the action's operator applied to its target.

    Driver attributes are real-valued, so every effective operation needs a
    numeric value; a non-numeric resolution or division by zero raises
    ActionFault (callers treat that edge as skipped).
    """
    if a.operation == "none":
        return state.copy()
    resolved = _resolve(a.value, state, edge, missing_numeric=True)
    if not _is_number(resolved):
        raise ActionFault(
            f"action {a.name!r}: value {resolved!r} is not numeric for operation {a.operation!r}"
        )
    new = state.copy()
    current = new.values[a.target]
    v = float(resolved)
    if a.operation == "add":
        new.values[a.target] = current + v
    elif a.operation == "subtract":
        new.values[a.target] = current - v
    elif a.operation == "multiply":
        new.values[a.target] = current * v
    elif a.operation == "divide":
        if v == 0.0:
            raise ActionFault(f"action {a.name!r}: division by zero")
        new.values[a.target] = current / v
    elif a.operation == "set":
        new.values[a.target] = v
    else:
        raise ActionFault(f"action {a.name!r}: unknown operation {a.operation!r}")
    return new


def evaluate_constraints(
    state: DriverState,
    edge: Edge,
    constraints,
    diagnostics: list | None = None,
) -> str:
    """\"pass\" or \"skip\": any constraint whose comparison holds skips the edge.

    Ordering operators require both operands numeric; equality compares
    within one type. Mixed-type comparisons never trigger, but are recorded
    as diagnostics when a sink is provided.
    """
    for con in constraints:
        op = canonical_operator(con.operator)
        # Resolve the literal side first so a missing edge attribute on the
        # other side can fill with a type-compatible default (0 / "None").
        right_raw = con.operand2
        right_literal = not isinstance(right_raw, Operand)
        right_probe = right_raw if right_literal else None
        numeric_hint = _is_number(right_probe) if right_literal else True
        left = _resolve(con.operand1, state, edge, missing_numeric=numeric_hint)
        if not right_literal:
            right = _resolve(right_raw, state, edge, missing_numeric=_is_number(left))
        else:
            right = right_raw
        if isinstance(left, str) or isinstance(right, str):
            if op in ("=", "≠"):
                if isinstance(left, str) != isinstance(right, str):
                    if diagnostics is not None:
                        diagnostics.append(
                            f"constraint {con.name!r}: mixed types {left!r} vs {right!r}, not triggered"
                        )
                    continue
                triggered = (left == right) if op == "=" else (left != right)
            else:
                if diagnostics is not None:
                    diagnostics.append(
                        f"constraint {con.name!r}: ordering needs numbers, got {left!r} vs {right!r}"
                    )
                continue
        else:
            lf, rf = float(left), float(right)
            if op == ">":
                triggered = lf > rf
            elif op == "≥":
                triggered = lf >= rf
            elif op == "<":
                triggered = lf < rf
            elif op == "≤":
                triggered = lf <= rf
            elif op == "=":
                triggered = lf == rf
            else:
                triggered = lf != rf
        if triggered:
            if diagnostics is not None:
                diagnostics.append(f"constraint {con.name!r} triggered on edge {edge.id}")
            return "skip"
    return "pass"


@dataclass
class RouteResult:
    path: list[NodeId]
    edges: list[str]
    objective_value: float
    trace: list[DriverState] = field(default_factory=list)
    settled_count: int = 0


@dataclass
class _Label:
    node: NodeId
    state: DriverState
    objective: float
    parent: "_Label | None"
    edge_id: str | None


def _step_state(state: DriverState, edge: Edge, actions, constraints) -> DriverState | None:
    """Apply all actions in declared order, then evaluate constraints.

    None signals the edge must be skipped (constraint trigger or action
    fault).
    """
    new = state.copy()
    try:
        for a in actions:
            new = apply_action(new, a, edge)
    except ActionFault:
        return None
    if evaluate_constraints(new, edge, constraints) == "skip":
        return None
    return new


def plan_route(
    g: RoadGraph,
    s: NodeId,
    t: NodeId,
    spec: DriverSpec,
    actions,
    constraints,
    dequeued_keys: list | None = None,
) -> RouteResult:
    """Single-label constrained shortest path, keyed on the objective.

    A min-priority queue starts with the zero driver state at the source;
    each dequeue expands every outgoing edge by copying the state, running
    the actions in order, and skipping the edge on any constraint trigger
    or action fault. The key is the updated objective attribute; a node is
    relaxed when unvisited or strictly improved. The search stops when the
    target is dequeued. One label per node: a dominated-by-objective but
    constraint-wise better state is discarded, which the oracle suite
    documents as this recipe's known limitation.
    """
    if s not in g.nodes:
        raise UnknownNode(f"start node {s} not in graph")
    if t not in g.nodes:
        raise UnknownNode(f"target node {t} not in graph")

    counter = itertools.count()
    start = _Label(node=s, state=spec.initial_state(), objective=0.0, parent=None, edge_id=None)
    queue: list[tuple[float, int, _Label]] = [(0.0, next(counter), start)]
    visited: dict[NodeId, float] = {s: 0.0}
    settled = 0
    final: _Label | None = None

    while queue:
        key, _, label = heapq.heappop(queue)
        settled += 1
        if dequeued_keys is not None:
            dequeued_keys.append(key)
        if label.node == t:
            final = label
            break
        for edge in g.outgoing(label.node):
            new_state = _step_state(label.state, edge, actions, constraints)
            if new_state is None:
                continue
            delta = new_state.values[spec.objective]
            u = edge.to_node
            if u not in visited or delta < visited[u]:
                visited[u] = delta
                heapq.heappush(
                    queue,
                    (
                        delta,
                        next(counter),
                        _Label(node=u, state=new_state, objective=delta, parent=label, edge_id=edge.id),
                    ),
                )

    if final is None:
        raise NoRoute(f"no feasible route from {s} to {t}")

    edge_ids: list[str] = []
    trace: list[DriverState] = []
    lab: _Label | None = final
    while lab is not None and lab.edge_id is not None:
        edge_ids.append(lab.edge_id)
        trace.append(lab.state)
        lab = lab.parent
    edge_ids.reverse()
    trace.reverse()
    path: list[NodeId] = []
    if edge_ids:
        path.append(g.edge(edge_ids[0]).from_node)
        for eid in edge_ids:
            path.append(g.edge(eid).to_node)
    return RouteResult(
        path=path,
        edges=edge_ids,
        objective_value=final.objective,
        trace=trace,
        settled_count=settled,
    )


def replay_route(
    g: RoadGraph, spec: DriverSpec, actions, constraints, edge_ids
) -> tuple[list[DriverState], float, bool]:
    """Re-simulate a route from the zero state.

    Returns (trace, final objective, feasible). Used by tests to confirm
    returned routes replay without a single constraint trigger.
    """
    state = spec.initial_state()
    trace: list[DriverState] = []
    feasible = True
    for eid in edge_ids:
        new = _step_state(state, g.edge(eid), actions, constraints)
        if new is None:
            feasible = False
            new = state.copy()
        state = new
        trace.append(state)
    return trace, state.values[spec.objective], feasible


def brute_force_plan(
    g: RoadGraph,
    s: NodeId,
    t: NodeId,
    spec: DriverSpec,
    actions,
    constraints,
    max_edges: int = 12,
) -> RouteResult:
    """Exhaustive oracle: enumerate simple paths, simulate, keep the minimum.

    Paths are node-simple and capped at max_edges edges; infeasible paths
    (any skip along the way) are discarded. Ties break on the
    lexicographically smallest node sequence. Only viable on small graphs.
    """
    if s not in g.nodes:
        raise UnknownNode(f"start node {s} not in graph")
    if t not in g.nodes:
        raise UnknownNode(f"target node {t} not in graph")
    if s == t:
        return RouteResult(path=[], edges=[], objective_value=0.0, trace=[])

    best: tuple[float, list[NodeId], list[str], list[DriverState]] | None = None

    def walk(node: NodeId, state: DriverState, nodes: list[NodeId], edges: list[str], trace):
        nonlocal best
        if len(edges) >= max_edges:
            return
        for edge in g.outgoing(node):
            u = edge.to_node
            if u in nodes:
                continue
            new_state = _step_state(state, edge, actions, constraints)
            if new_state is None:
                continue
            new_nodes = nodes + [u]
            new_edges = edges + [edge.id]
            new_trace = trace + [new_state]
            if u == t:
                obj = new_state.values[spec.objective]
                cand = (obj, new_nodes, new_edges, new_trace)
                if best is None or (obj, new_nodes) < (best[0], best[1]):
                    best = cand
            else:
                walk(u, new_state, new_nodes, new_edges, new_trace)

    walk(s, spec.initial_state(), [s], [], [])
    if best is None:
        raise NoRoute(f"no feasible route from {s} to {t} within {max_edges} edges")
    obj, nodes, edges, trace = best
    return RouteResult(path=nodes, edges=edges, objective_value=obj, trace=trace)


# -- k fastest routes ----------------------------------------------------------

def _dijkstra_time(
    g: RoadGraph,
    s: NodeId,
    t: NodeId,
    banned_edges: set[str],
    banned_nodes: set[NodeId],
) -> tuple[float, list[str]] | None:
    """Classical shortest path under travel-time weights, with removals."""
    counter = itertools.count()
    dist: dict[NodeId, float] = {s: 0.0}
    pred_edge: dict[NodeId, str] = {}
    done: set[NodeId] = set()
    queue: list[tuple[float, int, NodeId]] = [(0.0, next(counter), s)]
    while queue:
        d, _, v = heapq.heappop(queue)
        if v in done:
            continue
        done.add(v)
        if v == t:
            break
        for edge in g.outgoing(v):
            if edge.id in banned_edges or edge.to_node in banned_nodes:
                continue
            u = edge.to_node
            nd = d + edge_travel_time_s(edge)
            if u not in dist or nd < dist[u]:
                dist[u] = nd
                pred_edge[u] = edge.id
                heapq.heappush(queue, (nd, next(counter), u))
    if t not in done:
        return None
    edges: list[str] = []
    node = t
    while node != s:
        eid = pred_edge[node]
        edges.append(eid)
        node = g.edge(eid).from_node
    edges.reverse()
    return dist[t], edges


def _edges_to_nodes(g: RoadGraph, edge_ids: list[str], start: NodeId) -> list[NodeId]:
    nodes = [start]
    for eid in edge_ids:
        nodes.append(g.edge(eid).to_node)
    return nodes


def k_fastest_routes(g: RoadGraph, s: NodeId, t: NodeId, k: int) -> list[RouteResult]:
    """Up to ten fastest loopless routes by travel time (Yen's algorithm).

    k is hard-capped at 10; fewer routes come back when the graph admits
    fewer simple paths. Travel times are non-decreasing across the list.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    k = min(k, 10)
    if s not in g.nodes or t not in g.nodes:
        raise UnknownNode("endpoint not in graph")

    first = _dijkstra_time(g, s, t, set(), set())
    if first is None:
        raise NoRoute(f"no route from {s} to {t}")

    def to_result(time_s: float, edge_ids: list[str]) -> RouteResult:
        nodes = _edges_to_nodes(g, edge_ids, s)
        cum = 0.0
        trace = []
        for eid in edge_ids:
            cum += edge_travel_time_s(g.edge(eid))
            trace.append(DriverState(values={"travel_time_s": cum}))
        return RouteResult(path=nodes, edges=edge_ids, objective_value=time_s, trace=trace)

    accepted: list[tuple[float, list[str]]] = [first]
    candidates: list[tuple[float, list[NodeId], list[str]]] = []
    seen: set[tuple[str, ...]] = {tuple(first[1])}

    while len(accepted) < k:
        prev_time, prev_edges = accepted[-1]
        prev_nodes = _edges_to_nodes(g, prev_edges, s)
        for i in range(len(prev_edges)):
            spur_node = prev_nodes[i]
            root_edges = prev_edges[:i]
            root_time = sum(edge_travel_time_s(g.edge(e)) for e in root_edges)
            banned_edges: set[str] = set()
            for _, edges in accepted:
                if edges[:i] == root_edges and len(edges) > i:
                    banned_edges.add(edges[i])
            for time_, _, edges in candidates:
                if edges[:i] == root_edges and len(edges) > i:
                    banned_edges.add(edges[i])
            banned_nodes = set(prev_nodes[:i])
            spur = _dijkstra_time(g, spur_node, t, banned_edges, banned_nodes)
            if spur is None:
                continue
            total_edges = root_edges + spur[1]
            key = tuple(total_edges)
            if key in seen:
                continue
            seen.add(key)
            total_time = root_time + spur[0]
            heapq.heappush(
                candidates, (total_time, _edges_to_nodes(g, total_edges, s), total_edges)
            )
        if not candidates:
            break
        time_, _, edges = heapq.heappop(candidates)
        accepted.append((time_, edges))

    return [to_result(time_, edges) for time_, edges in accepted]


# -- model files -----------------------------------------------------------------

def _value_from_json(raw):
    if isinstance(raw, dict):
        return Operand(source=str(raw.get("source", "")), attribute=str(raw.get("attribute", "")))
    if isinstance(raw, bool):
        return float(raw)
    return raw


def model_from_dict(data: dict) -> tuple[DriverSpec, list[Action], list[Constraint]]:
    """Parse a planning model document: driver spec, actions, constraints."""
    driver = data.get("driver", {})
    attrs = tuple(
        DriverAttribute(name=str(a["name"]), description=str(a.get("description", "")))
        for a in driver.get("attributes", [])
    )
    spec = DriverSpec(attributes=attrs, objective=str(driver.get("objective", "")))
    actions = [
        Action(
            name=str(a.get("name", f"action_{i}")),
            description=str(a.get("description", "")),
            target=str(a.get("target", "")),
            operation=str(a.get("operation", "")),
            value=_value_from_json(a.get("value")),
        )
        for i, a in enumerate(data.get("actions", []))
    ]
    constraints = [
        Constraint(
            name=str(c.get("name", f"constraint_{i}")),
            description=str(c.get("description", "")),
            operator=canonical_operator(str(c.get("operator", ""))),
            operand1=_value_from_json(c.get("operand1")),
            operand2=_value_from_json(c.get("operand2")),
            action=str(c.get("action", SKIP_EDGE)),
        )
        for i, c in enumerate(data.get("constraints", []))
    ]
    return spec, actions, constraints


def _value_to_json(v):
    if isinstance(v, Operand):
        return {"source": v.source, "attribute": v.attribute}
    return v


def model_to_dict(spec: DriverSpec, actions, constraints) -> dict:
    return {
        "driver": {
            "attributes": [{"name": a.name, "description": a.description} for a in spec.attributes],
            "objective": spec.objective,
        },
        "actions": [
            {
                "name": a.name,
                "description": a.description,
                "target": a.target,
                "operation": a.operation,
                "value": _value_to_json(a.value),
            }
            for a in actions
        ],
        "constraints": [
            {
                "name": c.name,
                "description": c.description,
                "operator": c.operator,
                "operand1": _value_to_json(c.operand1),
                "operand2": _value_to_json(c.operand2),
                "action": c.action,
            }
            for c in constraints
        ],
    }


def monitor_routes(routes, g: RoadGraph) -> Table:
    """Findings table: joined feature records on the edges of each route.

    One row per (route, edge, attached record), preserving duplication when
    a feature spans several segments. Columns are route_index, edge_id,
    table, then the union of record field names.
    """
    findings: list[tuple[int, str, str, dict]] = []
    for ri, route in enumerate(routes):
        for eid in route.edges:
            edge = g.edge(eid)
            for rec in edge.joined:
                findings.append((ri, eid, rec["table"], rec["fields"]))

    field_names = sorted({name for _, _, _, fields in findings for name in fields})
    columns = [Column("route_index", "number"), Column("edge_id", "text"), Column("table", "text")]
    for name in field_names:
        values = [f.get(name) for _, _, _, f in findings if f.get(name) is not None]
        numeric = bool(values) and all(_is_number(v) for v in values)
        columns.append(Column(name, "number" if numeric else "text"))

    rows = []
    for ri, eid, table_name, fields in findings:
        row: list = [float(ri), eid, table_name]
        for col in columns[3:]:
            v = fields.get(col.name)
            if v is None:
                row.append(0.0 if col.type == "number" else "None")
            else:
                row.append(float(v) if col.type == "number" else str(v))
        rows.append(tuple(row))
    return Table(name="route_findings", columns=columns, rows=rows)

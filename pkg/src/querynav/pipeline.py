"""Session state machine: classify, filter hierarchically, execute interfaces.

A session walks a fixed stage order. Each stage builds a proposal by asking
the decision provider to pick from catalog-derived options; in automatic
mode the proposal commits immediately, in control mode it waits as
`pending` until the next advance accepts it (empty override) or replaces
the selection (override must stay inside the proposed options). The log
records transitions, decisions, and commits, and is deterministic for a
given scripted provider and override sequence.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field

from .agent import DecisionRequest, decide
from .catalog import Catalog, CatalogNode, always_included_sources, children, nodes_by_kind
from .errors import (
    AgentFailure,
    EmptyQuery,
    InterfaceError,
    InvalidOverride,
    RefinementExhausted,
    StageOrderViolation,
)
from .interfaces import ExecutionContext, InterfaceOutput, InterfaceRegistry
from .schema import DecisionSchema, FieldSpec

STAGES = (
    "Classify",
    "SelectSources",
    "SelectResources",
    "SelectAttributes",
    "SelectInterfaces",
    "Execute",
    "Done",
    "Failed",
)

MODES = ("automatic", "control")

_NEXT = {
    "Classify": "SelectSources",
    "SelectSources": "SelectResources",
    "SelectResources": "SelectAttributes",
    "SelectAttributes": "SelectInterfaces",
    "SelectInterfaces": "Execute",
    "Execute": "Done",
}


@dataclass
class Proposal:
    stage: str
    options: list[dict]  # {id, name, description}
    selected: list[str]
    rationale: str = ""

    def option_ids(self) -> set[str]:
        return {o["id"] for o in self.options}

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "options": self.options,
            "selected": self.selected,
            "rationale": self.rationale,
        }


@dataclass
class ExecutionResult:
    kind: str
    payload: dict
    provenance: list[tuple[str, str]]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "payload": self.payload,
            "provenance": [list(p) for p in self.provenance],
        }


@dataclass
class Session:
    id: str
    query: str
    mode: str
    stage: str = "Classify"
    selections: dict[str, list[str]] = field(default_factory=dict)
    pending: Proposal | None = None
    result: ExecutionResult | None = None
    log: list[dict] = field(default_factory=list)
    # runtime handles, not part of the serialized state
    catalog: Catalog | None = None
    provider: object = None
    registry: InterfaceRegistry | None = None

    def log_event(self, event: dict) -> None:
        self.log.append(event)

    def log_bytes(self) -> bytes:
        """Canonical serialization of the log, for replay comparisons."""
        return json.dumps(self.log, sort_keys=True, separators=(",", ":")).encode()


def session_to_dict(session: Session) -> dict:
    return {
        "id": session.id,
        "query": session.query,
        "mode": session.mode,
        "stage": session.stage,
        "selections": {k: list(v) for k, v in session.selections.items()},
        "pending": session.pending.to_dict() if session.pending else None,
        "result": session.result.to_dict() if session.result else None,
        "log": list(session.log),
    }


def open_session(
    query: str,
    mode: str,
    catalog: Catalog,
    provider,
    registry: InterfaceRegistry | None = None,
    session_id: str | None = None,
) -> Session:
    """Fresh session at the Classify stage."""
    if not query or not query.strip():
        raise EmptyQuery("query must be non-empty")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    session = Session(
        id=session_id or uuid.uuid4().hex,
        query=query,
        mode=mode,
        catalog=catalog,
        provider=provider,
        registry=registry,
    )
    session.log_event({"event": "open", "query": query, "mode": mode})
    return session


def _fail(session: Session, error: str) -> None:
    session.log_event({"event": "failed", "stage": session.stage, "error": error})
    session.stage = "Failed"
    session.pending = None


def _ask(session: Session, name: str, context: str, fields) -> dict:
    request = DecisionRequest(context=context, schema=DecisionSchema(fields=tuple(fields)))
    try:
        value = decide(session.provider, request)
    except RefinementExhausted as exc:
        _fail(session, f"decision {name!r} failed: {exc.report.render()}")
        raise AgentFailure(f"decision {name!r} exhausted refinement") from exc
    session.log_event({"event": "decision", "stage": session.stage, "name": name, "value": value})
    return value


def _options_from_nodes(nodes) -> list[dict]:
    return [{"id": n.id, "name": n.name, "description": n.description} for n in nodes]


def _render_options(title: str, options: list[dict]) -> str:
    lines = [title]
    for o in options:
        lines.append(f"- {o['id']}: {o['name']} -- {o['description']}")
    return "\n".join(lines)


def _choice_fields(name: str, description: str, options: list[dict], required: bool):
    constraints = ({"kind": "non-empty"},) if required else ()
    return [
        FieldSpec(
            name,
            description,
            "list-of-choice",
            choices=tuple(o["id"] for o in options),
            constraints=constraints,
        ),
        FieldSpec("rationale", "one-line reasoning", "text"),
    ]


def _committed_nodes(session: Session, stage: str) -> list[CatalogNode]:
    return [session.catalog.node(i) for i in session.selections.get(stage, [])]


def _build_classify(session: Session) -> Proposal:
    cat = session.catalog
    task_types = nodes_by_kind(cat, "TaskType")
    objectives = nodes_by_kind(cat, "Objective")
    tt_options = _options_from_nodes(task_types)
    ob_options = _options_from_nodes(objectives)
    selected: list[str] = []
    rationales: list[str] = []
    if tt_options:
        value = _ask(
            session,
            "task_types",
            f"User query: {session.query}\n"
            + _render_options("Classify the query. Available task types:", tt_options)
            + "\nPick every task type the query needs (often one, sometimes several).",
            _choice_fields("task_types", "task types this query needs", tt_options, required=True),
        )
        selected.extend(dict.fromkeys(value["task_types"]))
        rationales.append(value.get("rationale", ""))
    if ob_options:
        value = _ask(
            session,
            "objectives",
            f"User query: {session.query}\n"
            + _render_options("Now classify the query's objectives:", ob_options)
            + "\nPick every objective the query pursues.",
            _choice_fields("objectives", "objectives this query pursues", ob_options, required=True),
        )
        selected.extend(i for i in dict.fromkeys(value["objectives"]) if i not in selected)
        rationales.append(value.get("rationale", ""))
    return Proposal(
        stage="Classify",
        options=tt_options + ob_options,
        selected=selected,
        rationale="; ".join(r for r in rationales if r),
    )


def _build_select_sources(session: Session) -> Proposal:
    cat = session.catalog
    committed = _committed_nodes(session, "Classify")
    task_ids = [n.id for n in committed if n.kind == "TaskType"]
    seen: dict[str, CatalogNode] = {}
    for tid in task_ids:
        for src in children(cat, tid, "serves"):
            seen[src.id] = src
    forced = always_included_sources(cat, task_ids)
    for src in forced:
        seen[src.id] = src
    options_nodes = sorted(seen.values(), key=lambda n: n.id)
    options = _options_from_nodes(options_nodes)
    if not options:
        return Proposal(stage="SelectSources", options=[], selected=[])
    value = _ask(
        session,
        "data_sources",
        f"User query: {session.query}\n"
        + _render_options("Select the data sources that can answer this query:", options),
        _choice_fields("data_sources", "data sources to pull from", options, required=True),
    )
    selected = list(dict.fromkeys(value["data_sources"]))
    for src in forced:
        if src.id not in selected:
            selected.append(src.id)
    return Proposal(
        stage="SelectSources",
        options=options,
        selected=selected,
        rationale=value.get("rationale", ""),
    )


def _build_select_resources(session: Session) -> Proposal:
    cat = session.catalog
    sources = session.selections.get("SelectSources", [])
    nodes: list[CatalogNode] = []
    for sid in sources:
        nodes.extend(children(cat, sid, "contains"))
    nodes = sorted({n.id: n for n in nodes}.values(), key=lambda n: n.id)
    options = _options_from_nodes(nodes)
    if not options:
        return Proposal(stage="SelectResources", options=[], selected=[])
    value = _ask(
        session,
        "resources",
        f"User query: {session.query}\n"
        + _render_options("Select the datasets (resources) to load:", options),
        _choice_fields("resources", "resources to load", options, required=True),
    )
    return Proposal(
        stage="SelectResources",
        options=options,
        selected=list(dict.fromkeys(value["resources"])),
        rationale=value.get("rationale", ""),
    )


def _build_select_attributes(session: Session) -> Proposal:
    cat = session.catalog
    resources = _committed_nodes(session, "SelectResources")
    all_options: list[dict] = []
    selected: list[str] = []
    rationales: list[str] = []
    for res in sorted(resources, key=lambda n: n.id):
        attrs = children(cat, res.id, "contains")
        if not attrs:
            continue
        options = _options_from_nodes(attrs)
        all_options.extend(options)
        value = _ask(
            session,
            f"attributes:{res.id}",
            f"User query: {session.query}\n"
            + _render_options(
                f"Select the attributes (columns) of {res.name!r} relevant to the query:", options
            ),
            _choice_fields("attributes", "attributes to keep", options, required=True),
        )
        selected.extend(i for i in dict.fromkeys(value["attributes"]) if i not in selected)
        if value.get("rationale"):
            rationales.append(value["rationale"])
    return Proposal(
        stage="SelectAttributes",
        options=all_options,
        selected=selected,
        rationale="; ".join(rationales),
    )


def _build_select_interfaces(session: Session) -> Proposal:
    cat = session.catalog
    committed_sources = set(session.selections.get("SelectSources", []))
    nodes = []
    for iface in nodes_by_kind(cat, "Interface"):
        linked = {n.id for n in children(cat, iface.id, "uses")}
        if linked & committed_sources:
            nodes.append(iface)
    options = _options_from_nodes(nodes)
    if not options:
        return Proposal(stage="SelectInterfaces", options=[], selected=[])
    value = _ask(
        session,
        "interfaces",
        f"User query: {session.query}\n"
        + _render_options("Choose which interfaces to run, in execution order:", options)
        + "\nLater interfaces see the results of earlier ones.",
        _choice_fields("interfaces", "interfaces to run, in order", options, required=True),
    )
    return Proposal(
        stage="SelectInterfaces",
        options=options,
        selected=list(dict.fromkeys(value["interfaces"])),
        rationale=value.get("rationale", ""),
    )


_BUILDERS = {
    "Classify": _build_classify,
    "SelectSources": _build_select_sources,
    "SelectResources": _build_select_resources,
    "SelectAttributes": _build_select_attributes,
    "SelectInterfaces": _build_select_interfaces,
}


def _commit(session: Session, proposal: Proposal, selection: list[str]) -> None:
    session.selections[session.stage] = list(selection)
    session.log_event(
        {"event": "commit", "stage": session.stage, "selected": list(selection)}
    )
    session.pending = None
    nxt = _NEXT[session.stage]
    session.log_event({"event": "stage", "from": session.stage, "to": nxt})
    session.stage = nxt


def advance(session: Session, override: list[str] | None = None) -> Session:
    """Run the current stage once.

    Selection stages: build the agent proposal (control mode parks it as
    `pending` first; a second advance commits it, with `override` replacing
    the selection as long as it stays inside the proposed options). The
    Execute stage dispatches the committed interfaces and finishes the
    session.
    """
    if session.stage in ("Done", "Failed"):
        raise StageOrderViolation(f"session is {session.stage}; cannot advance")
    if session.mode == "automatic" and override is not None:
        raise InvalidOverride("override is not allowed in automatic mode")

    if session.stage == "Execute":
        if session.registry is None:
            raise InterfaceError("(none)", "session has no interface registry")
        execute_interfaces(session, session.registry)
        return session

    if session.mode == "control" and session.pending is None:
        session.pending = _BUILDERS[session.stage](session)
        session.log_event(
            {
                "event": "proposal",
                "stage": session.stage,
                "options": [o["id"] for o in session.pending.options],
                "selected": list(session.pending.selected),
            }
        )
        return session

    if session.mode == "control":
        proposal = session.pending
        if override:
            bad = [i for i in override if i not in proposal.option_ids()]
            if bad:
                raise InvalidOverride(f"override ids not offered: {bad}")
            selection = list(dict.fromkeys(override))
        else:
            selection = list(proposal.selected)
        _commit(session, proposal, selection)
        return session

    proposal = _BUILDERS[session.stage](session)
    _commit(session, proposal, proposal.selected)
    return session


def run_to_completion(session: Session, max_steps: int = 64) -> Session:
    """Drive an automatic-mode session until Done (or Failed raises)."""
    steps = 0
    while session.stage not in ("Done", "Failed"):
        advance(session)
        steps += 1
        if steps > max_steps:
            raise StageOrderViolation("session did not finish within the step budget")
    return session


def execute_interfaces(session: Session, registry: InterfaceRegistry) -> ExecutionResult:
    """Dispatch committed interfaces in order, threading outputs forward."""
    if session.stage != "Execute":
        raise StageOrderViolation(f"cannot execute at stage {session.stage}")
    interface_ids = session.selections.get("SelectInterfaces", [])
    if not interface_ids:
        err = InterfaceError("(none)", "no interface selected")
        _fail(session, str(err))
        raise err

    ctx = ExecutionContext(
        query=session.query,
        provider=session.provider,
        env=registry.env,
        selections=session.selections,
        prior=[],
        log=session.log_event,
    )
    outputs: list[InterfaceOutput] = []
    for iid in interface_ids:
        try:
            out = registry.run(iid, ctx)
        except InterfaceError as exc:
            _fail(session, str(exc))
            raise
        except RefinementExhausted as exc:
            _fail(session, f"interface {iid!r} decision failed")
            raise AgentFailure(f"interface {iid!r} exhausted refinement") from exc
        outputs.append(out)
        ctx.prior.append(out)
        session.log_event(
            {"event": "interface", "id": iid, "kind": out.kind, "text": out.text}
        )

    last = outputs[-1]
    provenance = sorted({p for out in outputs for p in out.provenance})
    result = ExecutionResult(kind=last.kind, payload=last.payload, provenance=provenance)
    session.result = result
    session.log_event({"event": "result", "kind": result.kind})
    session.log_event({"event": "stage", "from": "Execute", "to": "Done"})
    session.stage = "Done"
    return result

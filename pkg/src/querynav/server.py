"""HTTP facade over sessions, catalog, and route artifacts.

REST over JSON, turn-based (no streaming): clients open a session, advance
it stage by stage (control mode sees the pending proposal between calls),
and fetch the result. Advances carry a client request id; replaying the
same id returns the cached response instead of advancing twice. Execution
failures are state, not transport errors: the session comes back with
stage "Failed".
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .catalog import Catalog, catalog_to_dict, load_catalog
from .errors import (
    AgentFailure,
    ConfigError,
    EmptyQuery,
    EngineError,
    InterfaceError,
    InvalidOverride,
    StageOrderViolation,
    UsageError,
)
from .ingest import Gazetteer
from .interfaces import Environment, InterfaceRegistry
from .pipeline import Session, advance, open_session, session_to_dict
from .providers import StubVisualProvider, parse_provider_spec


@dataclass
class ServerConfig:
    bind: str
    catalog_path: Path
    gazetteer_path: Path
    data_root: Path
    provider_spec: object
    vqa_answers_path: Path | None = None
    max_sessions: int = 64
    snapshot_path: Path | None = None
    base_dir: Path = Path(".")

    @classmethod
    def from_file(cls, path: str | Path) -> "ServerConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read server config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"server config {path} is not valid JSON: {exc}") from exc
        base = path.parent
        try:
            cfg = cls(
                bind=raw.get("bind", "127.0.0.1:8080"),
                catalog_path=base / raw["catalog"],
                gazetteer_path=base / raw["gazetteer"],
                data_root=base / raw["data_root"],
                provider_spec=raw["provider"],
                vqa_answers_path=(base / raw["vqa_answers"]) if raw.get("vqa_answers") else None,
                max_sessions=int(raw.get("max_sessions", 64)),
                snapshot_path=(base / raw["snapshot"]) if raw.get("snapshot") else None,
                base_dir=base,
            )
        except KeyError as exc:
            raise ConfigError(f"server config missing key {exc}") from exc
        return cfg

    def validate(self) -> None:
        if self.max_sessions < 1:
            raise ConfigError("max_sessions must be >= 1")
        for label, p in (
            ("catalog", self.catalog_path),
            ("gazetteer", self.gazetteer_path),
        ):
            if not Path(p).is_file():
                raise ConfigError(f"{label} path {p} does not exist")
        if not Path(self.data_root).is_dir():
            raise ConfigError(f"data_root {self.data_root} does not exist")


@dataclass
class _SessionSlot:
    session: Session
    lock: threading.Lock = field(default_factory=threading.Lock)
    replies: dict[str, dict] = field(default_factory=dict)  # request_id -> response


class SessionStore:
    def __init__(self, max_sessions: int, snapshot_path: Path | None = None):
        self.max_sessions = max_sessions
        self.snapshot_path = snapshot_path
        self._slots: dict[str, _SessionSlot] = {}
        self._lock = threading.Lock()

    def add(self, session: Session) -> None:
        with self._lock:
            if len(self._slots) >= self.max_sessions:
                raise EngineError("session store is full")
            self._slots[session.id] = _SessionSlot(session=session)

    def get(self, session_id: str) -> _SessionSlot | None:
        with self._lock:
            return self._slots.get(session_id)

    def snapshot(self) -> None:
        if self.snapshot_path is None:
            return
        with self._lock:
            payload = {sid: session_to_dict(s.session) for sid, s in self._slots.items()}
        self.snapshot_path.write_text(json.dumps(payload, sort_keys=True, indent=1))


class OpenSessionBody(BaseModel):
    query: str
    mode: str = "automatic"


class AdvanceBody(BaseModel):
    request_id: str
    override: list[str] | None = None


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


def build_environment(config: ServerConfig) -> tuple[Catalog, InterfaceRegistry]:
    catalog = load_catalog(config.catalog_path)
    vqa = (
        StubVisualProvider.from_file(config.vqa_answers_path)
        if config.vqa_answers_path
        else StubVisualProvider()
    )
    env = Environment(
        catalog=catalog,
        data_root=Path(config.data_root),
        gazetteer=Gazetteer.from_file(config.gazetteer_path),
        vqa=vqa,
    )
    return catalog, InterfaceRegistry(env)


def create_app(config: ServerConfig) -> FastAPI:
    config.validate()
    catalog, registry = build_environment(config)
    provider_factory = parse_provider_spec(config.provider_spec, base_dir=config.base_dir)
    store = SessionStore(config.max_sessions, config.snapshot_path)
    app = FastAPI(title="querynav", docs_url=None, redoc_url=None)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/catalog")
    def get_catalog():
        return catalog_to_dict(catalog)

    @app.post("/sessions", status_code=201)
    def post_session(body: OpenSessionBody):
        try:
            session = open_session(
                body.query, body.mode, catalog, provider_factory(), registry=registry
            )
        except EmptyQuery as exc:
            return _error(422, "empty-query", str(exc))
        except ValueError as exc:
            return _error(422, "bad-mode", str(exc))
        try:
            store.add(session)
        except EngineError as exc:
            return _error(429, "max-sessions", str(exc))
        store.snapshot()
        return session_to_dict(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        slot = store.get(session_id)
        if slot is None:
            return _error(404, "unknown-session", f"no session {session_id!r}")
        return session_to_dict(slot.session)

    @app.post("/sessions/{session_id}/advance")
    def post_advance(session_id: str, body: AdvanceBody):
        slot = store.get(session_id)
        if slot is None:
            return _error(404, "unknown-session", f"no session {session_id!r}")
        with slot.lock:
            if body.request_id in slot.replies:
                return slot.replies[body.request_id]
            try:
                advance(slot.session, body.override)
            except StageOrderViolation as exc:
                return _error(409, "stage-order", str(exc))
            except InvalidOverride as exc:
                return _error(422, "invalid-override", str(exc))
            except (AgentFailure, InterfaceError):
                # The session carries the failure; report its state.
                pass
            response = session_to_dict(slot.session)
            slot.replies[body.request_id] = response
        store.snapshot()
        return response

    @app.get("/sessions/{session_id}/result")
    def get_result(session_id: str):
        slot = store.get(session_id)
        if slot is None:
            return _error(404, "unknown-session", f"no session {session_id!r}")
        if slot.session.result is None:
            return _error(409, "no-result", f"session is at stage {slot.session.stage}")
        return slot.session.result.to_dict()

    return app


def serve(config: ServerConfig):
    """Run the service until interrupted. Raises BindError on a bad address."""
    import uvicorn

    from .errors import BindError

    app = create_app(config)
    host, _, port = config.bind.rpartition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    except (OSError, ValueError) as exc:
        raise BindError(f"cannot bind {config.bind}: {exc}") from exc


def main(argv=None):
    import argparse

    parser = argparse.ArgumentParser(description="querynav HTTP server")
    parser.add_argument("config", help="path to a server config JSON file")
    args = parser.parse_args(argv)
    try:
        config = ServerConfig.from_file(args.config)
        serve(config)
    except UsageError as exc:
        raise SystemExit(f"config error: {exc}")


if __name__ == "__main__":
    main()

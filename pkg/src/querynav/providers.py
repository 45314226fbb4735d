"""Decision and visual-answer providers.

Two decision providers ship with the package: a wire provider speaking the
OpenAI-style chat-completions JSON protocol against any compatible endpoint,
and a scripted provider replaying canned responses from a fixture file so
pipelines run deterministically offline. Both expose a single `complete`
method; the refinement loop lives in the agent module.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

import httpx

from .errors import ParseError, ProviderError

DEFAULT_API_KEY_ENV = "QUERYNAV_API_KEY"


class ScriptedProvider:
    """Replays canned response texts in request order.

    Fixture file: either a JSON array of response strings or an object
    mapping request ordinals ("0", "1", ...) to response strings. Each
    instance keeps its own cursor, so give every session a fresh instance.
    """

    def __init__(self, responses):
        self._responses = list(responses)
        self._cursor = 0
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedProvider":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ParseError(f"cannot read scripted fixture {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"scripted fixture {path} is not valid JSON: {exc}") from exc
        if isinstance(data, list):
            return cls(data)
        if isinstance(data, dict):
            try:
                ordered = [data[k] for k in sorted(data, key=int)]
            except (ValueError, KeyError) as exc:
                raise ParseError(f"scripted fixture {path}: keys must be ordinals") from exc
            return cls(ordered)
        raise ParseError(f"scripted fixture {path} must be a JSON array or object")

    @property
    def calls_made(self) -> int:
        return self._cursor

    def complete(self, prompt: str) -> str:
        with self._lock:
            if self._cursor >= len(self._responses):
                raise ProviderError(
                    f"scripted provider exhausted after {self._cursor} responses"
                )
            text = self._responses[self._cursor]
            self._cursor += 1
        return text


class WireProvider:
    """Chat-completions wire provider (OpenAI-style JSON protocol).

    The API key is read from an environment variable and never stored in
    config files. A custom transport can be injected for tests.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        timeout: float = 120.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def complete(self, prompt: str) -> str:
        headers = {}
        key = os.environ.get(self.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model,
            "messages": [
                {
                    "role": "system",
                    "content": "You fill structured decision forms. Reply with a single JSON object and nothing else.",
                },
                {"role": "user", "content": prompt},
            ],
            "temperature": 0,
        }
        try:
            resp = self._client.post(
                f"{self.endpoint}/chat/completions", json=body, headers=headers
            )
        except httpx.HTTPError as exc:
            raise ProviderError(f"chat endpoint unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderError(f"chat endpoint returned {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, json.JSONDecodeError) as exc:
            raise ProviderError(f"malformed chat completion response: {exc}") from exc


def parse_provider_spec(spec, base_dir: str | Path = "."):
    """Provider factory from a config value.

    Accepts the CLI string forms "scripted:PATH" and "wire:URL[,MODEL]" or
    the structured forms {"scripted": path} / {"wire": {"endpoint", "model"}}.
    Returns a zero-argument factory; scripted providers are re-created per
    call so each session replays the fixture from the top.
    """
    base = Path(base_dir)
    if isinstance(spec, str):
        kind, _, rest = spec.partition(":")
        if kind == "scripted" and rest:
            spec = {"scripted": rest}
        elif kind == "wire" and rest:
            url, _, model = rest.partition(",")
            spec = {"wire": {"endpoint": url, "model": model or "default"}}
        else:
            raise ParseError(f"provider spec {spec!r} must be scripted:PATH or wire:URL[,MODEL]")
    if "scripted" in spec:
        path = base / spec["scripted"]
        if not path.is_file():
            raise ParseError(f"scripted provider fixture {path} not found")
        return lambda: ScriptedProvider.from_file(path)
    if "wire" in spec:
        wire = spec["wire"]
        provider = WireProvider(
            endpoint=wire["endpoint"],
            model=wire.get("model", "default"),
            api_key_env=wire.get("api_key_env", DEFAULT_API_KEY_ENV),
        )
        return lambda: provider
    raise ParseError(f"provider spec {spec!r} has neither 'scripted' nor 'wire'")


class StubVisualProvider:
    """Canned visual question answering: image id -> answer text."""

    def __init__(self, answers: dict | None = None, default: str = "unknown"):
        self.answers = dict(answers or {})
        self.default = default

    @classmethod
    def from_file(cls, path: str | Path) -> "StubVisualProvider":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ParseError(f"cannot read visual-answer fixture {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"visual-answer fixture {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ParseError(f"visual-answer fixture {path} must be a JSON object")
        return cls(data)

    def answer(self, image_id: str, question: str) -> str:
        return str(self.answers.get(str(image_id), self.default))

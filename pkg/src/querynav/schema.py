"""Declarative decision schemas and value validation.

A DecisionSchema describes the structured answer a decision provider must
fill in: scalar fields, choice fields with fixed option lists, and nested
lists/objects. Validation never raises; it returns a report listing the
dotted paths of every violating field, which the refinement loop uses to
build the follow-up sub-schema.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

FIELD_KINDS = ("text", "number", "boolean", "choice", "list-of-choice", "list-of", "object")

_IDENTIFIER_RE = re.compile(r"^[a-z][a-z0-9_]*$")


@dataclass(frozen=True)
class FieldSpec:
    name: str
    description: str = ""
    kind: str = "text"
    choices: tuple[str, ...] = ()
    # Nested field specs for kind="list-of" (item shape) and kind="object".
    fields: tuple["FieldSpec", ...] = ()
    # Constraint descriptors: {"kind": "non-empty"} |
    # {"kind": "numeric-range", "min": x, "max": y} |
    # {"kind": "member-of", "values": [...]} | {"kind": "identifier"}
    constraints: tuple[dict, ...] = ()

    def __post_init__(self):
        if self.kind not in FIELD_KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind in ("choice", "list-of-choice") and not self.choices:
            raise ValueError(f"field {self.name!r}: {self.kind} requires a non-empty choices list")
        object.__setattr__(self, "choices", tuple(self.choices))
        object.__setattr__(self, "fields", tuple(self.fields))
        object.__setattr__(self, "constraints", tuple(dict(c) for c in self.constraints))


@dataclass(frozen=True)
class DecisionSchema:
    fields: tuple[FieldSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        names = [f.name for f in self.fields]
        if len(names) != len(set(names)):
            raise ValueError("field names must be unique per object level")

    def field_names(self) -> list[str]:
        return [f.name for f in self.fields]

    def subset(self, names) -> "DecisionSchema":
        """Sub-schema keeping only the named fields, in original order."""
        wanted = set(names)
        return DecisionSchema(fields=tuple(f for f in self.fields if f.name in wanted))


@dataclass(frozen=True)
class FieldError:
    field_path: str
    message: str


@dataclass
class ValidationReport:
    errors: list[FieldError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def paths(self) -> list[str]:
        return [e.field_path for e in self.errors]

    def top_level_fields(self) -> list[str]:
        """First path segment of each error, deduplicated, order preserved."""
        seen: list[str] = []
        for e in self.errors:
            top = e.field_path.split(".", 1)[0]
            if top not in seen:
                seen.append(top)
        return seen

    def render(self) -> str:
        return "\n".join(f"{e.field_path}: {e.message}" for e in self.errors)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_constraints(spec: FieldSpec, value, path: str, errors: list[FieldError]) -> None:
    for c in spec.constraints:
        kind = c.get("kind")
        if kind == "non-empty":
            if value == "" or value == [] or value == {}:
                errors.append(FieldError(path, "must not be empty"))
        elif kind == "numeric-range":
            if _is_number(value):
                lo, hi = c.get("min"), c.get("max")
                if lo is not None and value < lo:
                    errors.append(FieldError(path, f"must be >= {lo}"))
                if hi is not None and value > hi:
                    errors.append(FieldError(path, f"must be <= {hi}"))
        elif kind == "member-of":
            allowed = c.get("values", [])
            if isinstance(value, list):
                for i, item in enumerate(value):
                    if item not in allowed:
                        errors.append(FieldError(f"{path}.{i}", f"{item!r} is not one of {allowed}"))
            elif value not in allowed:
                errors.append(FieldError(path, f"{value!r} is not one of {allowed}"))
        elif kind == "identifier":
            if isinstance(value, str) and not _IDENTIFIER_RE.match(value):
                errors.append(FieldError(path, "must be a lowercase identifier"))


def _validate_field(spec: FieldSpec, value, path: str, errors: list[FieldError]) -> None:
    kind = spec.kind
    if kind == "text":
        if not isinstance(value, str):
            errors.append(FieldError(path, f"expected text, got {type(value).__name__}"))
            return
    elif kind == "number":
        if not _is_number(value):
            errors.append(FieldError(path, f"expected number, got {type(value).__name__}"))
            return
    elif kind == "boolean":
        if not isinstance(value, bool):
            errors.append(FieldError(path, f"expected boolean, got {type(value).__name__}"))
            return
    elif kind == "choice":
        if not isinstance(value, str) or value not in spec.choices:
            errors.append(FieldError(path, f"{value!r} is not one of {list(spec.choices)}"))
            return
    elif kind == "list-of-choice":
        if not isinstance(value, list):
            errors.append(FieldError(path, f"expected a list, got {type(value).__name__}"))
            return
        for i, item in enumerate(value):
            if not isinstance(item, str) or item not in spec.choices:
                errors.append(FieldError(f"{path}.{i}", f"{item!r} is not one of {list(spec.choices)}"))
    elif kind == "list-of":
        if not isinstance(value, list):
            errors.append(FieldError(path, f"expected a list, got {type(value).__name__}"))
            return
        item_schema = DecisionSchema(fields=spec.fields)
        for i, item in enumerate(value):
            if not isinstance(item, dict):
                errors.append(FieldError(f"{path}.{i}", "expected an object"))
                continue
            _validate_object(item_schema, item, f"{path}.{i}", errors)
    elif kind == "object":
        if not isinstance(value, dict):
            errors.append(FieldError(path, f"expected an object, got {type(value).__name__}"))
            return
        _validate_object(DecisionSchema(fields=spec.fields), value, path, errors)
    _check_constraints(spec, value, path, errors)


def _validate_object(schema: DecisionSchema, value: dict, prefix: str, errors: list[FieldError]) -> None:
    for spec in schema.fields:
        path = f"{prefix}.{spec.name}" if prefix else spec.name
        if spec.name not in value:
            errors.append(FieldError(path, "required field missing"))
            continue
        _validate_field(spec, value[spec.name], path, errors)


def validate(value, schema: DecisionSchema) -> ValidationReport:
    """Validate a value tree against a schema; report every violating path."""
    errors: list[FieldError] = []
    if not isinstance(value, dict):
        errors.append(FieldError("$", f"expected a JSON object, got {type(value).__name__}"))
        return ValidationReport(errors=errors)
    _validate_object(schema, value, "", errors)
    return ValidationReport(errors=errors)


def render_schema(schema: DecisionSchema, indent: int = 0) -> str:
    """Human/LLM readable rendering of what each field expects."""
    lines: list[str] = []
    pad = "  " * indent
    for spec in schema.fields:
        desc = f" -- {spec.description}" if spec.description else ""
        if spec.kind == "choice":
            lines.append(f"{pad}{spec.name} (one of {list(spec.choices)}){desc}")
        elif spec.kind == "list-of-choice":
            lines.append(f"{pad}{spec.name} (list, items from {list(spec.choices)}){desc}")
        elif spec.kind in ("list-of", "object"):
            shape = "list of objects" if spec.kind == "list-of" else "object"
            lines.append(f"{pad}{spec.name} ({shape}):{desc}")
            lines.append(render_schema(DecisionSchema(fields=spec.fields), indent + 1))
        else:
            lines.append(f"{pad}{spec.name} ({spec.kind}){desc}")
    return "\n".join(line for line in lines if line)

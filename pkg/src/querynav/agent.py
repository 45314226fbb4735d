"""Structured decisions with iterative, failing-fields-only refinement.

`decide` asks a provider to fill a DecisionSchema and validates the reply.
On failure it re-asks with a sub-schema consisting solely of the fields
that had errors, merging corrections into the previous value, and after
the attempt budget it makes one last full-schema retry carrying the raw
failure before giving up.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import RefinementExhausted
from .schema import DecisionSchema, ValidationReport, render_schema, validate


@dataclass
class DecisionRequest:
    context: str
    schema: DecisionSchema
    max_attempts: int = 3

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


def extract_json_object(text: str):
    """First top-level JSON object embedded in the text, or None.

    Tolerates chatty providers: leading prose, trailing prose, and code
    fences are all ignored; we scan for the first decodable object.
    """
    decoder = json.JSONDecoder()
    start = text.find("{")
    while start != -1:
        try:
            obj, _ = decoder.raw_decode(text[start:])
        except json.JSONDecodeError:
            start = text.find("{", start + 1)
            continue
        if isinstance(obj, dict):
            return obj
        start = text.find("{", start + 1)
    return None


def build_prompt(context: str, schema: DecisionSchema, feedback: str = "") -> str:
    parts = [
        context.strip(),
        "",
        "Fill in the following fields:",
        render_schema(schema),
        "",
        "Answer with one JSON object whose keys are exactly the field names above.",
    ]
    if feedback:
        parts.extend(["", feedback.strip()])
    return "\n".join(parts)


def decide(provider, request: DecisionRequest) -> dict:
    """Run the refinement loop until the provider's answer validates.

    Attempt 1 presents the full schema. Attempts 2..max_attempts present a
    sub-schema of only the failing fields, with the previous error messages,
    and merge the corrections into the prior value. If the budget runs out,
    one final full-schema retry carries the raw failing response; if that
    still fails, RefinementExhausted(report) is raised.

    ProviderError propagates untouched: transport faults are not validation
    failures and are not retried here.
    """
    schema = request.schema
    value: dict = {}
    report = ValidationReport()
    feedback = ""
    ask_schema = schema
    last_raw = ""

    for attempt in range(1, request.max_attempts + 1):
        raw = provider.complete(build_prompt(request.context, ask_schema, feedback))
        last_raw = raw
        parsed = extract_json_object(raw)
        if parsed is None:
            # Nothing usable came back; every field is still outstanding.
            report = validate(value, schema)
            feedback = (
                "Your previous reply could not be parsed as JSON. It was:\n"
                f"{raw}\nReply with a single JSON object only."
            )
            ask_schema = schema
            continue
        if attempt == 1:
            value = parsed
        else:
            value = {**value, **parsed}
        report = validate(value, schema)
        if report.ok:
            return value
        failing = [n for n in report.top_level_fields() if n in set(schema.field_names())]
        ask_schema = schema.subset(failing) if failing else schema
        feedback = (
            "Your previous answer had errors. Re-answer ONLY the fields below, "
            "fixing these problems:\n" + report.render()
        )

    # Last-resort retry: full schema, raw failing output attached.
    raw = provider.complete(
        build_prompt(
            request.context,
            schema,
            "None of the previous answers validated. The last reply was:\n"
            + last_raw
            + "\nIts errors were:\n"
            + report.render()
            + "\nAnswer the FULL form again as one JSON object.",
        )
    )
    parsed = extract_json_object(raw)
    if parsed is not None:
        value = {**value, **parsed}
        report = validate(value, schema)
        if report.ok:
            return value
    raise RefinementExhausted(
        f"decision still invalid after {request.max_attempts} attempts and a final retry",
        report,
    )

"""Exception hierarchy shared across the package.

Domain failures (no route, fragmented network, refinement exhausted) derive
from EngineError; usage and configuration mistakes derive from UsageError.
The CLI maps the former to exit code 1 and the latter to exit code 2.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for domain-level failures."""


class UsageError(Exception):
    """Base class for configuration / input-shape failures."""


# -- catalog ---------------------------------------------------------------

class ParseError(UsageError):
    """Catalog or fixture file is structurally malformed."""


class IntegrityError(UsageError):
    """Catalog graph violates an invariant (dangling edge, duplicate id, cycle)."""


class UnknownNode(EngineError):
    """A node id does not exist in the catalog or graph."""


# -- agent -----------------------------------------------------------------

class ProviderError(EngineError):
    """Transport or provider-side fault while asking for a decision."""


class RefinementExhausted(EngineError):
    """Decision still invalid after all refinement attempts.

    Carries the last validation report so callers can surface what failed.
    """

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


# -- pipeline --------------------------------------------------------------

class EmptyQuery(UsageError):
    """Session opened with an empty query string."""


class AgentFailure(EngineError):
    """A pipeline stage failed because the decision provider gave up."""


class InvalidOverride(EngineError):
    """Override selection is not a subset of the pending proposal options."""


class StageOrderViolation(EngineError):
    """Advance called on a finished session or out of stage order."""


class InterfaceError(EngineError):
    """An interface failed during execution; wraps the cause."""

    def __init__(self, interface_id, cause):
        super().__init__(f"interface {interface_id!r} failed: {cause}")
        self.interface_id = interface_id
        self.cause = cause


# -- ingest ----------------------------------------------------------------

class NameNotFound(EngineError):
    """Place name absent from the gazetteer."""


class PathError(UsageError):
    """Resource path does not resolve to an existing fixture file."""


class UnknownAttribute(UsageError):
    """Requested attribute is not a column of the loaded file."""


class FormatError(UsageError):
    """Fixture file content does not match its declared format."""


class UnknownTable(UsageError):
    """Query references a table absent from the store."""


class UnknownColumn(UsageError):
    """Query references a column absent from the table."""


class TypeMismatch(UsageError):
    """Numeric operation applied to a non-numeric column or value."""


# -- roadgraph -------------------------------------------------------------

class DegenerateSegment(UsageError):
    """A road segment has fewer than two vertices."""


class FragmentedNetwork(EngineError):
    """Largest weak component covers too small a share of the edges."""

    def __init__(self, share):
        super().__init__(f"largest component holds only {float(share):.6f} of edges")
        self.share = share


class EmptyGraph(EngineError):
    """Operation requires a non-empty graph."""


# -- planner ---------------------------------------------------------------

class ActionFault(EngineError):
    """Action arithmetic failed (non-numeric value or division by zero)."""


class NoRoute(EngineError):
    """No feasible path between the requested endpoints."""


# -- server ----------------------------------------------------------------

class ConfigError(UsageError):
    """Server or CLI configuration is invalid."""


class BindError(UsageError):
    """Server could not bind its address."""

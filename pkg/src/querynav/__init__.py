"""Metadata-catalog driven query engine with constrained route planning.

A natural-language query is walked through a staged pipeline: classify the
query against task types and objectives, filter the data hierarchy
(sources, resources, attributes), pick executable interfaces, and run them.
Route planning runs a stateful Dijkstra variant over a road graph built
from line-segment geometry, with a driver-state DSL for multi-constraint
queries.
"""

__version__ = "0.1.0"

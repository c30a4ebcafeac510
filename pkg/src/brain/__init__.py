"""Desk-scale knowledge engine: typed concept graph with beliefs, feed
ingestion with split/merge inference, an RQL query language, an append-only
single-source-of-truth log, and an HTTP curation service."""

from .engine import Engine
from .graph import Graph, EdgeTypeRegistry

__all__ = ["Engine", "Graph", "EdgeTypeRegistry"]
__version__ = "0.1.0"

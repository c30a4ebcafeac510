"""Shared fixtures: fixture-fed engines and value-shape converters."""

from __future__ import annotations

from pathlib import Path

import pytest

from brain.engine import Engine
from brain.rql import eval as rql_eval

from . import oracle

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
FEEDS = FIXTURES / "feeds"
CORPUS = FIXTURES / "corpus"

WORLD_FEEDS = ("wordnet", "affordance", "activity", "planning", "grounding")

PLUGINS = {
    "AlgA": lambda command, environment, params: 0.6,
    "AlgB": lambda command, environment, params: 0.5,
}


@pytest.fixture(scope="session")
def world_engine(tmp_path_factory) -> Engine:
    """Engine loaded with the full query-corpus world."""
    engine = Engine(tmp_path_factory.mktemp("world"))
    for name in WORLD_FEEDS:
        engine.ingest_file(FEEDS / f"{name}.jsonl")
    engine.scorers.update(PLUGINS)
    return engine


@pytest.fixture()
def fresh_engine(tmp_path) -> Engine:
    return Engine(tmp_path / "data")


def to_oracle_value(v):
    """Package runtime value -> oracle value shape, for equality checks."""
    if isinstance(v, rql_eval.NodeRef):
        return oracle.ON(v.handle)
    if isinstance(v, rql_eval.EdgeRef):
        return oracle.OE(v.id)
    if isinstance(v, rql_eval.PathRef):
        return oracle.OP(tuple(v.path.nodes), tuple(v.path.edges))
    if isinstance(v, tuple):
        return tuple(to_oracle_value(x) for x in v)
    if isinstance(v, list):
        return [to_oracle_value(x) for x in v]
    return v

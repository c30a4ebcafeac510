"""Crowd feedback: approve/disapprove verdicts and structural edit proposals.

Belief of a target is the posterior mean of a Beta-Bernoulli model whose
prior is shaped by the trust of the target's source:
alpha0 = 1 + 4*trust, beta0 = 1 + 4*(1-trust).  One vote per user per
target; a user's latest verdict replaces their earlier one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import NotFoundError, ValidationError
from .graph import APPROVE, DISAPPROVE, Graph, Minter
from .ingest import SourceRegistry, utcnow

VERDICTS = (APPROVE, DISAPPROVE)


@dataclass(frozen=True)
class FeedbackRecord:
    target: str  # node handle or edge id
    verdict: str
    user: str
    at: str

    @classmethod
    def make(cls, target: str, verdict: str, user: str) -> "FeedbackRecord":
        verdict = verdict.lower()
        if verdict not in VERDICTS:
            raise ValidationError(
                f"verdict must be one of {VERDICTS}, got {verdict!r}")
        if not user:
            raise ValidationError("user must be nonempty")
        return cls(target, verdict, user, utcnow())

    def payload(self) -> dict:
        return {"target": self.target, "verdict": self.verdict,
                "user": self.user, "at": self.at}


def belief_of(graph: Graph, sources: SourceRegistry, target: str) -> float:
    if target in graph.nodes:
        node = graph.nodes[target]
        return node.belief.mean(sources.trust(node.src))
    if target in graph.edges:
        edge = graph.edges[target]
        return edge.belief.mean(sources.trust(edge.source))
    raise NotFoundError(f"no live node or edge {target!r}")


@dataclass
class GraphEditProposal:
    """User-proposed structural change, pending until validated."""

    action: str  # add_node | add_edge | delete_node | delete_edge | split | merge
    args: dict
    proposer: str
    status: str = "pending"
    reason: Optional[str] = None

    ACTIONS = ("add_node", "add_edge", "delete_node", "delete_edge",
               "split", "merge")

    def to_op(self) -> dict:
        """Validate shape and lower to a loggable graph op payload."""
        if self.action not in self.ACTIONS:
            raise ValidationError(f"unknown action {self.action!r}")
        a = self.args
        if self.action == "add_node":
            return {"op": "add_node", "name": a["name"], "type": a["type"],
                    "src": a.get("src", f"user:{self.proposer}"),
                    "media_ref": a.get("media_ref")}
        if self.action == "add_edge":
            return {"op": "add_edge", "src": a["src"], "dst": a["dst"],
                    "edge_type": a["edge_type"],
                    "source": a.get("source", f"user:{self.proposer}")}
        if self.action == "delete_node":
            return {"op": "delete_node", "handle": a["handle"]}
        if self.action == "delete_edge":
            return {"op": "delete_edge", "id": a["id"]}
        if self.action == "split":
            return {"op": "split", "node": a["node"],
                    "assignment": dict(a["assignment"]),
                    "names": list(a["names"]) if a.get("names") else None}
        return {"op": "merge", "a": a["a"], "b": a["b"]}


def check_edit(graph: Graph, op: dict) -> None:
    """Raise if the op cannot apply to the current graph (dry run)."""
    from .store import apply_graph_op

    scratch = graph.clone()
    apply_graph_op(scratch, op, Minter(0))

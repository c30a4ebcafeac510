"""Single-node orchestrator: wires ingest, store, graph, inference, feedback.

All mutation funnels through one writer lock and lands in the log before it
touches the live graph; queries evaluate against a cloned snapshot tagged
with the log position it reflects.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import feedback, inference, store
from .config import Config
from .errors import NotFoundError, ValidationError
from .graph import EdgeTypeRegistry, Graph, Minter
from .ingest import Feed, SourceRegistry, parse_feed_file, parse_feed_text
from .rql import eval as rql_eval
from .rql import parser as rql_parser


@dataclass
class FeedReport:
    feed_id: str
    seq: int
    nodes_added: int
    edges_added: int
    ops_applied: list[dict]


class Engine:
    def __init__(self, data_dir: str | Path, config: Optional[Config] = None):
        self.data_dir = Path(data_dir)
        self.config = config or Config.load(self.data_dir)
        self.store = store.LogStore(self.data_dir)
        self.registry = EdgeTypeRegistry()
        self.sources = SourceRegistry(self.data_dir / "sources.toml")
        self._lock = threading.RLock()
        self.graph = self._restore()
        self.scorers: dict = {}

    def _restore(self) -> Graph:
        base = self.store.latest_snapshot()
        return store.rebuild(self.store, self.registry, base=base)

    # --- feeds -------------------------------------------------------------

    def ingest_file(self, path: str | Path) -> FeedReport:
        feed = parse_feed_file(path, self.registry, self.sources)
        return self.submit_feed(feed)

    def ingest_text(self, text: str) -> FeedReport:
        feed = parse_feed_text(text, self.registry, self.sources)
        return self.submit_feed(feed)

    def submit_feed(self, feed: Feed) -> FeedReport:
        with self._lock:
            seq = self.store.append(store.KIND_FEED, feed.payload())
            delta = self.graph.apply_feed_union(feed, Minter(seq))
            ops = self._run_inference(delta.added_nodes)
            return FeedReport(feed.feed_id, seq, len(delta.added_nodes),
                              len(delta.added_edges), ops)

    def _run_inference(self, new_nodes: list[str]) -> list[dict]:
        applied: list[dict] = []
        fresh = list(new_nodes)
        for _ in range(inference.MAX_ROUNDS):
            proposals = inference.propose_round(self.graph, fresh, self.config)
            if not proposals:
                break
            fresh = []
            for prop in proposals:
                if prop.kind == "split":
                    op = {"op": "split", "node": prop.node,
                          "assignment": prop.assignment,
                          "names": list(prop.names)}
                else:
                    op = {"op": "merge", "a": prop.a, "b": prop.b}
                seq = self.store.append(store.KIND_GRAPH_OP, op)
                created = store.apply_graph_op(self.graph, op, Minter(seq))
                fresh.extend(created)
                applied.append({**op, "seq": seq, "score": prop.score,
                                "rationale": prop.rationale})
        return applied

    # --- feedback and edits ------------------------------------------------

    def record_feedback(self, target: str, verdict: str, user: str) -> float:
        with self._lock:
            rec = feedback.FeedbackRecord.make(target, verdict, user)
            if target in self.graph.nodes:
                belief_state = self.graph.nodes[target].belief
            elif target in self.graph.edges:
                belief_state = self.graph.edges[target].belief
            else:
                raise NotFoundError(f"no live node or edge {target!r}")
            self.store.append(store.KIND_FEEDBACK, rec.payload())
            belief_state.record(user, rec.verdict)
            return self.belief_of(target)

    def belief_of(self, target: str) -> float:
        with self._lock:
            return feedback.belief_of(self.graph, self.sources, target)

    def apply_graph_edit(self, proposal: feedback.GraphEditProposal) -> feedback.GraphEditProposal:
        with self._lock:
            try:
                op = proposal.to_op()
                feedback.check_edit(self.graph, op)
            except (ValidationError, NotFoundError, KeyError) as exc:
                proposal.status = "rejected"
                proposal.reason = str(exc) or repr(exc)
                return proposal
            seq = self.store.append(store.KIND_GRAPH_OP, op)
            store.apply_graph_op(self.graph, op, Minter(seq))
            proposal.status = "applied"
            return proposal

    # --- queries -----------------------------------------------------------

    def snapshot(self) -> tuple[int, Graph]:
        with self._lock:
            return self.store.last_seq, self.graph.clone()

    def query(self, program_text: str, max_results: Optional[int] = None) -> dict:
        program = rql_parser.parse(program_text)
        started = time.perf_counter()
        seq, graph = self.snapshot()
        value = rql_eval.evaluate_program(
            program, graph,
            plugins=self.scorers,
            trust=self.sources.trust,
            max_path_len=self.config.max_path_len)
        ctx = rql_eval.EvalContext(graph, self.scorers, self.sources.trust,
                                   self.config.max_path_len)
        truncated = False
        if max_results is not None and isinstance(value, list) \
                and len(value) > max_results:
            value = value[:max_results]
            truncated = True
        return {
            "values": rql_eval.render_value(value, ctx),
            "elapsed_ms": (time.perf_counter() - started) * 1000.0,
            "snapshot_seq": seq,
            "truncated": truncated,
        }

    def stats(self) -> dict:
        with self._lock:
            return self.graph.degree_stats()

    def node_detail(self, handle: str) -> dict:
        with self._lock:
            node = self.graph.node(handle)
            return {
                "handle": node.handle,
                "name": node.name,
                "type": node.node_type,
                "src": node.src,
                "media_ref": node.media_ref,
                "belief": self.belief_of(handle),
                "approvals": node.belief.approvals,
                "disapprovals": node.belief.disapprovals,
                "degree": len(self.graph.incident(handle)),
            }

    def subgraph(self, center: str, radius: int, limit: int = 100) -> dict:
        """Deterministic BFS ball around ``center`` over the undirected view."""
        if radius < 0:
            raise ValidationError("radius must be >= 0")
        if limit < 1:
            raise ValidationError("limit must be >= 1")
        with self._lock:
            self.graph.node(center)
            selected = [center]
            seen = {center}
            frontier = [center]
            for _ in range(radius):
                nxt = []
                for handle in frontier:
                    neighbors = []
                    for eid in self.graph.incident(handle):
                        edge = self.graph.edge(eid)
                        other = edge.dst if edge.src == handle else edge.src
                        neighbors.append(other)
                    for other in sorted(neighbors):
                        if other not in seen:
                            seen.add(other)
                            nxt.append(other)
                            if len(selected) < limit:
                                selected.append(other)
                frontier = nxt
                if len(selected) >= limit:
                    break
            chosen = set(selected)
            nodes = []
            for handle in selected:
                node = self.graph.node(handle)
                nodes.append({
                    "handle": handle, "name": node.name,
                    "type": node.node_type,
                    "belief": self.belief_of(handle),
                    "degree": len(self.graph.incident(handle)),
                })
            edges = []
            for eid in sorted(self.graph.edges):
                edge = self.graph.edges[eid]
                if edge.src in chosen and edge.dst in chosen:
                    edges.append({
                        "id": eid, "src": edge.src, "dst": edge.dst,
                        "edge_type": edge.edge_type,
                        "belief": self.belief_of(eid),
                    })
            return {"center": center, "radius": radius,
                    "nodes": nodes, "edges": edges}

    # --- maintenance -------------------------------------------------------

    def rebuild(self, exclude_source: Optional[str] = None) -> Graph:
        with self._lock:
            return store.rebuild(self.store, EdgeTypeRegistry(self.registry.entries),
                                 exclude_source=exclude_source)

    def save_snapshot(self) -> Path:
        with self._lock:
            return self.store.snapshot(self.graph, self.store.last_seq)

"""In-memory typed directed concept graph with beliefs.

Nodes are concepts of arbitrary type (words, images, parameter sets...);
edges carry a label from a registered edge-type vocabulary.  Feeds are
folded in with set-union semantics; split/merge repair polysemous or
duplicated concepts.  All mutation goes through a single logical writer,
reads operate on snapshots (``clone``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import EdgeTypeError, NotFoundError, ValidationError

#: Relation vocabulary the engine ships with.  Open registry: sources may
#: register more at runtime.
DEFAULT_EDGE_TYPES = (
    "IsTypeOf",
    "HasAppearance",
    "CanPerformAction",
    "SpatiallyDistributedAs",
    "IsHolonym",
    "CanUse",
    "HasAffordance",
    "HasParameters",
    "HasTrajectory",
    "HasAttribute",
    "HasPriorProb",
)

#: Shape of the trust-derived Beta prior: alpha0 = 1 + KAPPA*trust,
#: beta0 = 1 + KAPPA*(1-trust).
KAPPA = 4.0

APPROVE = "approve"
DISAPPROVE = "disapprove"


class EdgeTypeRegistry:
    """Open set of allowed edge-type strings."""

    def __init__(self, entries: Iterable[str] = DEFAULT_EDGE_TYPES):
        self.entries: set[str] = set(entries)

    def register(self, edge_type: str) -> None:
        if not edge_type:
            raise ValidationError("edge type must be nonempty")
        self.entries.add(edge_type)

    def __contains__(self, edge_type: str) -> bool:
        return edge_type in self.entries


@dataclass
class BeliefState:
    """Per-target crowd verdicts.  One vote per user, latest wins."""

    votes: dict[str, str] = field(default_factory=dict)

    @property
    def approvals(self) -> int:
        return sum(1 for v in self.votes.values() if v == APPROVE)

    @property
    def disapprovals(self) -> int:
        return sum(1 for v in self.votes.values() if v == DISAPPROVE)

    def record(self, user: str, verdict: str) -> None:
        if verdict not in (APPROVE, DISAPPROVE):
            raise ValidationError(f"unknown verdict {verdict!r}")
        self.votes[user] = verdict

    def mean(self, trust: float) -> float:
        """Posterior-mean belief under the trust-shaped Beta prior."""
        alpha0 = 1.0 + KAPPA * trust
        beta0 = 1.0 + KAPPA * (1.0 - trust)
        a, d = self.approvals, self.disapprovals
        return (alpha0 + a) / (alpha0 + beta0 + a + d)

    def copy(self) -> "BeliefState":
        return BeliefState(dict(self.votes))

    def absorb(self, other: "BeliefState") -> None:
        # survivor's own votes win on per-user collision
        merged = dict(other.votes)
        merged.update(self.votes)
        self.votes = merged


@dataclass
class ConceptNode:
    handle: str
    name: str
    node_type: str
    src: str
    media_ref: Optional[str] = None
    belief: BeliefState = field(default_factory=BeliefState)


@dataclass
class TypedEdge:
    id: str
    src: str
    dst: str
    edge_type: str
    source: str
    belief: BeliefState = field(default_factory=BeliefState)


@dataclass
class FeedDelta:
    """New material a feed union actually contributed."""

    added_nodes: list[str] = field(default_factory=list)
    added_edges: list[str] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not self.added_nodes and not self.added_edges


@dataclass(frozen=True)
class Path:
    """Simple directed path; nodes[i] --edges[i]--> nodes[i+1]."""

    nodes: tuple[str, ...]
    edges: tuple[str, ...]

    def sort_key(self):
        return (len(self.edges),) + self.nodes + self.edges


# --- compiled pattern (produced by rql.parser.compile_pattern) ------------

PATTERN_KEYS = ("name", "handle", "type", "src")


@dataclass(frozen=True)
class NodeSpec:
    var: Optional[str]
    constraints: tuple[tuple[str, str], ...]  # (key, value) pairs


@dataclass(frozen=True)
class HopSpec:
    kind: str  # "label" | "any" | "star"
    label: Optional[str] = None
    var: Optional[str] = None


@dataclass(frozen=True)
class CompiledPattern:
    nodes: tuple[NodeSpec, ...]
    hops: tuple[HopSpec, ...]

    @property
    def variables(self) -> tuple[str, ...]:
        """Free variables in left-to-right appearance order."""
        seen: list[str] = []
        for i, ns in enumerate(self.nodes):
            if ns.var and ns.var not in seen:
                seen.append(ns.var)
            if i < len(self.hops):
                hv = self.hops[i].var
                if hv and hv not in seen:
                    seen.append(hv)
        return tuple(seen)


class Minter:
    """Deterministic handle/edge-id factory for one log record.

    Handles are a pure function of (seq, position within the record), so a
    rebuild reproduces them exactly.
    """

    def __init__(self, seq: int):
        self.seq = seq
        self._n = 0
        self._e = 0

    def node_handle(self) -> str:
        h = f"n{self.seq}_{self._n}"
        self._n += 1
        return h

    def edge_id(self) -> str:
        e = f"e{self.seq}_{self._e}"
        self._e += 1
        return e


class Graph:
    """Typed directed multigraph with set-semantic unions and split/merge."""

    def __init__(self, registry: Optional[EdgeTypeRegistry] = None):
        self.registry = registry or EdgeTypeRegistry()
        self.nodes: dict[str, ConceptNode] = {}
        self.edges: dict[str, TypedEdge] = {}
        self.retired: dict[str, dict] = {}
        self._ident: dict[tuple[str, str, str], str] = {}
        self._triple: dict[tuple[str, str, str], str] = {}
        self._out: dict[str, dict[str, None]] = {}
        self._in: dict[str, dict[str, None]] = {}

    # --- basic accessors --------------------------------------------------

    def node(self, handle: str) -> ConceptNode:
        try:
            return self.nodes[handle]
        except KeyError:
            raise NotFoundError(f"no live node {handle!r}") from None

    def edge(self, edge_id: str) -> TypedEdge:
        try:
            return self.edges[edge_id]
        except KeyError:
            raise NotFoundError(f"no live edge {edge_id!r}") from None

    def incident(self, handle: str) -> list[str]:
        """Edge ids touching ``handle``, out-edges first, insertion order."""
        self.node(handle)
        out = list(self._out.get(handle, ()))
        inc = [e for e in self._in.get(handle, ()) if e not in self._out.get(handle, ())]
        return out + inc

    def find_handle(self, name: str, node_type: str, src: str) -> Optional[str]:
        return self._ident.get((name, node_type, src))

    # --- mutation ---------------------------------------------------------

    def add_node(self, name: str, node_type: str, src: str, minter: Minter,
                 media_ref: Optional[str] = None) -> str:
        if not name or not node_type:
            raise ValidationError("node name and type must be nonempty")
        key = (name, node_type, src)
        existing = self._ident.get(key)
        if existing is not None:
            return existing
        handle = minter.node_handle()
        if handle in self.nodes or handle in self.retired:
            raise ValidationError(f"handle {handle!r} already used")
        self.nodes[handle] = ConceptNode(handle, name, node_type, src, media_ref)
        self._ident[key] = handle
        self._out[handle] = {}
        self._in[handle] = {}
        return handle

    def add_edge(self, src: str, dst: str, edge_type: str, minter: Minter,
                 source: str = "") -> str:
        self.node(src)
        self.node(dst)
        if edge_type not in self.registry:
            raise EdgeTypeError(f"edge type {edge_type!r} is not registered")
        key = (src, dst, edge_type)
        existing = self._triple.get(key)
        if existing is not None:
            return existing
        eid = minter.edge_id()
        self.edges[eid] = TypedEdge(eid, src, dst, edge_type, source)
        self._triple[key] = eid
        self._out[src][eid] = None
        self._in[dst][eid] = None
        return eid

    def apply_feed_union(self, feed, minter: Minter) -> FeedDelta:
        """Fold a feed in by set union over nodes and edges (atomic)."""
        bad = sorted({a.edge_type for a in feed.assertions
                      if a.edge_type not in self.registry})
        if bad:
            raise EdgeTypeError(f"feed uses unregistered edge types: {', '.join(bad)}")
        delta = FeedDelta()
        for a in feed.assertions:
            for desc in (a.src, a.dst):
                before = self.find_handle(desc.name, desc.node_type, feed.source)
                h = self.add_node(desc.name, desc.node_type, feed.source, minter,
                                  media_ref=desc.media_ref)
                if before is None:
                    delta.added_nodes.append(h)
            hs = self.find_handle(a.src.name, a.src.node_type, feed.source)
            hd = self.find_handle(a.dst.name, a.dst.node_type, feed.source)
            before = self._triple.get((hs, hd, a.edge_type))
            eid = self.add_edge(hs, hd, a.edge_type, minter, source=feed.source)
            if before is None:
                delta.added_edges.append(eid)
        return delta

    def split(self, handle: str, assignment: dict[str, int], minter: Minter,
              names: Optional[tuple[str, str]] = None) -> tuple[str, str]:
        """Split ``handle`` into two successors.

        ``assignment`` maps every incident edge id to side 0 or 1.  Side 0
        inherits the original name unless ``names`` overrides; successors are
        linked side1 --IsTypeOf--> side0.
        """
        original = self.node(handle)
        incident = self.incident(handle)
        if set(assignment) != set(incident):
            raise ValidationError("assignment must cover exactly the incident edges")
        sides = set(assignment.values())
        if not sides <= {0, 1}:
            raise ValidationError("assignment sides must be 0 or 1")
        if len(sides) < 2:
            raise ValidationError("degenerate split: both sides must receive edges")

        names = names or (original.name, original.name)
        succ = []
        for i in range(2):
            h = minter.node_handle()
            node = ConceptNode(h, names[i], original.node_type, original.src,
                               original.media_ref, original.belief.copy())
            self.nodes[h] = node
            self._out[h] = {}
            self._in[h] = {}
            succ.append(h)

        for eid in incident:
            self._repoint(eid, handle, succ[assignment[eid]])

        self._retire_node(handle, successors=list(succ), reason="split")
        # side 0 keeps the original's feed identity
        self._ident[(original.name, original.node_type, original.src)] = succ[0]
        key1 = (names[1], original.node_type, original.src)
        self._ident.setdefault(key1, succ[1])
        self.add_edge(succ[1], succ[0], "IsTypeOf", minter, source=original.src)
        return succ[0], succ[1]

    def merge(self, a: str, b: str) -> str:
        """Merge ``b`` into ``a``; ``a``'s handle survives."""
        if a == b:
            raise ValidationError("cannot merge a node with itself")
        keep = self.node(a)
        gone = self.node(b)
        for eid in list(self.incident(b)):
            edge = self.edges[eid]
            other = edge.dst if edge.src == b else edge.src
            if other == a or other == b:
                self._drop_edge(eid)  # merge-created self-loop
                continue
            new_key = ((a, edge.dst, edge.edge_type) if edge.src == b
                       else (edge.src, a, edge.edge_type))
            dup = self._triple.get(new_key)
            if dup is not None:
                self.edges[dup].belief.absorb(edge.belief)
                self._drop_edge(eid)
                continue
            self._repoint(eid, b, a)
        keep.belief.absorb(gone.belief)
        # future feeds re-asserting b's identity must land on the survivor
        realias = [key for key, h in self._ident.items() if h == b]
        self._retire_node(b, successors=[a], reason="merge")
        for key in realias:
            self._ident[key] = a
        return a

    def delete_edge(self, edge_id: str) -> None:
        self.edge(edge_id)
        self._drop_edge(edge_id)

    def delete_node(self, handle: str) -> None:
        """Retire a node together with its incident edges."""
        self.node(handle)
        for eid in list(self.incident(handle)):
            self._drop_edge(eid)
        self._retire_node(handle, successors=[], reason="delete")

    # --- internal plumbing ------------------------------------------------

    def _repoint(self, eid: str, old: str, new: str) -> None:
        edge = self.edges[eid]
        del self._triple[(edge.src, edge.dst, edge.edge_type)]
        if edge.src == old:
            self._out[old].pop(eid, None)
            edge.src = new
            self._out[new][eid] = None
        if edge.dst == old:
            self._in[old].pop(eid, None)
            edge.dst = new
            self._in[new][eid] = None
        self._triple[(edge.src, edge.dst, edge.edge_type)] = eid

    def _drop_edge(self, eid: str) -> None:
        edge = self.edges.pop(eid)
        self._triple.pop((edge.src, edge.dst, edge.edge_type), None)
        self._out.get(edge.src, {}).pop(eid, None)
        self._in.get(edge.dst, {}).pop(eid, None)

    def _retire_node(self, handle: str, successors: list[str], reason: str) -> None:
        node = self.nodes.pop(handle)
        self._out.pop(handle, None)
        self._in.pop(handle, None)
        for key, h in list(self._ident.items()):
            if h == handle:
                del self._ident[key]
        self.retired[handle] = {
            "name": node.name,
            "node_type": node.node_type,
            "src": node.src,
            "successors": successors,
            "reason": reason,
        }

    # --- queries ----------------------------------------------------------

    def degree_stats(self) -> dict:
        histogram: dict[int, int] = {}
        for handle in self.nodes:
            d = len(self._out[handle]) + len(self._in[handle])
            histogram[d] = histogram.get(d, 0) + 1
        n, e = len(self.nodes), len(self.edges)
        return {
            "node_count": n,
            "edge_count": e,
            "avg_degree": (2.0 * e / n) if n else 0.0,
            "histogram": dict(sorted(histogram.items())),
        }

    def match_template(self, pattern: CompiledPattern,
                       max_path_len: int = 6) -> list[dict]:
        """All bindings of ``pattern``, sorted deterministically.

        Node constraints: ``name`` case-insensitive, others exact.  Star hops
        bind simple directed paths of length 1..max_path_len.
        """
        results: list[dict] = []
        first = pattern.nodes[0]

        def node_ok(handle: str, spec: NodeSpec) -> bool:
            node = self.nodes[handle]
            for key, value in spec.constraints:
                if key == "name":
                    if node.name.casefold() != value.casefold():
                        return False
                elif key == "handle":
                    if handle != value:
                        return False
                elif key == "type":
                    if node.node_type != value:
                        return False
                elif key == "src":
                    if node.src != value:
                        return False
                else:
                    raise ValidationError(f"unknown constraint key {key!r}")
            return True

        def bind(binding: dict, var: Optional[str], value) -> Optional[dict]:
            if var is None:
                return binding
            if var in binding:
                return binding if binding[var] == value else None
            out = dict(binding)
            out[var] = value
            return out

        def extend(i: int, current: str, binding: dict) -> None:
            if i == len(pattern.hops):
                results.append(binding)
                return
            hop = pattern.hops[i]
            nxt_spec = pattern.nodes[i + 1]
            if hop.kind in ("label", "any"):
                for eid in self._out[current]:
                    edge = self.edges[eid]
                    if hop.kind == "label" and edge.edge_type != hop.label:
                        continue
                    if not node_ok(edge.dst, nxt_spec):
                        continue
                    b = bind(binding, hop.var, eid)
                    if b is None:
                        continue
                    b = bind(b, nxt_spec.var, edge.dst)
                    if b is None:
                        continue
                    extend(i + 1, edge.dst, b)
            else:  # star: simple directed paths, length 1..max_path_len
                def walk(nodes: list[str], edges: list[str]) -> None:
                    here = nodes[-1]
                    if edges and node_ok(here, nxt_spec):
                        path = Path(tuple(nodes), tuple(edges))
                        b = bind(binding, hop.var, path)
                        if b is not None:
                            b2 = bind(b, nxt_spec.var, here)
                            if b2 is not None:
                                extend(i + 1, here, b2)
                    if len(edges) >= max_path_len:
                        return
                    for eid in self._out[here]:
                        dst = self.edges[eid].dst
                        if dst in nodes:
                            continue
                        walk(nodes + [dst], edges + [eid])

                walk([current], [])

        for handle in self.nodes:
            if not node_ok(handle, first):
                continue
            binding = {} if first.var is None else {first.var: handle}
            extend(0, handle, binding)

        def sort_key(binding: dict):
            key = []
            for var in pattern.variables:
                v = binding[var]
                key.append(v.sort_key() if isinstance(v, Path) else (v,))
            return key

        results.sort(key=sort_key)
        # distinct bindings only (same nodes reachable along collapsing routes)
        deduped: list[dict] = []
        for b in results:
            if not deduped or deduped[-1] != b:
                deduped.append(b)
        return deduped

    # --- snapshotting / serialization --------------------------------------

    def clone(self) -> "Graph":
        g = Graph(EdgeTypeRegistry(self.registry.entries))
        for node in self.nodes.values():
            g.nodes[node.handle] = ConceptNode(node.handle, node.name, node.node_type,
                                               node.src, node.media_ref,
                                               node.belief.copy())
            g._out[node.handle] = {}
            g._in[node.handle] = {}
        for edge in self.edges.values():
            g.edges[edge.id] = TypedEdge(edge.id, edge.src, edge.dst, edge.edge_type,
                                         edge.source, edge.belief.copy())
            g._out[edge.src][edge.id] = None
            g._in[edge.dst][edge.id] = None
            g._triple[(edge.src, edge.dst, edge.edge_type)] = edge.id
        g._ident = dict(self._ident)
        g.retired = {h: dict(r) for h, r in self.retired.items()}
        return g

    def canonical_dict(self) -> dict:
        return {
            "edge_types": sorted(self.registry.entries),
            "nodes": [
                {
                    "handle": n.handle,
                    "name": n.name,
                    "node_type": n.node_type,
                    "src": n.src,
                    "media_ref": n.media_ref,
                    "votes": dict(sorted(n.belief.votes.items())),
                }
                for n in sorted(self.nodes.values(), key=lambda n: n.handle)
            ],
            "edges": [
                {
                    "id": e.id,
                    "src": e.src,
                    "dst": e.dst,
                    "edge_type": e.edge_type,
                    "source": e.source,
                    "votes": dict(sorted(e.belief.votes.items())),
                }
                for e in sorted(self.edges.values(), key=lambda e: e.id)
            ],
            "retired": {h: self.retired[h] for h in sorted(self.retired)},
        }

    def canonical_json(self) -> str:
        return json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))

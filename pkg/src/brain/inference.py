"""Context-driven graph repair: split polysemous nodes, merge duplicates.

Every node gets a sparse feature vector over (edge_type, direction,
neighbor-name token) counts.  After a feed lands, candidate nodes are
re-examined: a node whose incident-edge contexts fall into two well-separated
clusters is split (the side that drifted gets renamed after its dominant
context token), and same-named nodes from different sources whose contexts do
not conflict are merged.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from math import sqrt
from typing import Optional

from .config import Config
from .errors import NotFoundError
from .graph import Graph

_TOKEN_RE = re.compile(r"[A-Za-z]+")
_CAMEL_RE = re.compile(r"[A-Z]?[a-z]+|[A-Z]+(?![a-z])")

MAX_ROUNDS = 16


def name_tokens(name: str) -> list[str]:
    """Lowercased alphabetic tokens; camelCase and separators both split."""
    tokens = []
    for chunk in _TOKEN_RE.findall(name):
        tokens.extend(m.group(0).lower() for m in _CAMEL_RE.finditer(chunk))
    return tokens


Vector = dict[tuple[str, str, str], float]


def _normalize(counts: Vector) -> Vector:
    norm = sqrt(sum(w * w for w in counts.values()))
    if norm == 0:
        return {}
    return {k: w / norm for k, w in counts.items()}


def edge_context(graph: Graph, handle: str, edge_id: str) -> Vector:
    """Context of one incident edge as seen from ``handle``."""
    edge = graph.edge(edge_id)
    if edge.src == handle:
        direction, neighbor = "out", edge.dst
    else:
        direction, neighbor = "in", edge.src
    counts: Vector = {}
    for token in name_tokens(graph.node(neighbor).name):
        key = (edge.edge_type, direction, token)
        counts[key] = counts.get(key, 0.0) + 1.0
    return _normalize(counts)


def compute_feature_vector(graph: Graph, handle: str) -> Vector:
    """L2-normalized connectivity features of a node; zero if isolated."""
    if handle not in graph.nodes:
        raise NotFoundError(f"no live node {handle!r}")
    counts: Vector = {}
    for eid in graph.incident(handle):
        edge = graph.edge(eid)
        if edge.src == handle:
            direction, neighbor = "out", edge.dst
        else:
            direction, neighbor = "in", edge.src
        for token in name_tokens(graph.node(neighbor).name):
            key = (edge.edge_type, direction, token)
            counts[key] = counts.get(key, 0.0) + 1.0
    return _normalize(counts)


def similarity(a: Vector, b: Vector) -> float:
    """Cosine; 0.0 when either vector is zero."""
    if not a or not b:
        return 0.0
    return sum(w * b.get(k, 0.0) for k, w in a.items())


def merge_score(a: Vector, b: Vector) -> float:
    """Merge compatibility of two same-named nodes.

    Contexts conflict only where both nodes carry the same (edge_type,
    direction) relation group; the score is the cosine restricted to those
    shared groups.  Fully complementary contexts (no shared group) score 1.0:
    a freshly fed node with one edge says nothing against its twin.
    """
    if not a and not b:
        return 1.0
    if not a or not b:
        return 1.0
    groups_a = {(et, d) for et, d, _ in a}
    groups_b = {(et, d) for et, d, _ in b}
    shared = groups_a & groups_b
    if not shared:
        return 1.0
    ra = _normalize({k: w for k, w in a.items() if (k[0], k[1]) in shared})
    rb = _normalize({k: w for k, w in b.items() if (k[0], k[1]) in shared})
    return similarity(ra, rb)


@dataclass
class GraphOpProposal:
    kind: str  # "split" | "merge"
    score: float
    rationale: str
    # split
    node: Optional[str] = None
    assignment: dict[str, int] = field(default_factory=dict)
    names: Optional[tuple[str, str]] = None
    # merge
    a: Optional[str] = None
    b: Optional[str] = None

    def handles(self) -> tuple[str, ...]:
        return (self.node,) if self.kind == "split" else (self.a, self.b)


def _two_medoid(vectors: dict[str, Vector], tau_split: float):
    """Deterministic 2-medoid clustering of edge-context vectors.

    Edges orthogonal to every other edge carry no clustering evidence and are
    left aside (the caller parks them on the name-keeping side).  Returns
    (side0_ids, side1_ids, separation) or None when the context is coherent.
    """
    ids = sorted(vectors)
    sims = {(x, y): similarity(vectors[x], vectors[y])
            for i, x in enumerate(ids) for y in ids[i + 1:]}

    def sim(x, y):
        return 1.0 if x == y else sims[(x, y)] if (x, y) in sims else sims[(y, x)]

    clustered = [x for x in ids
                 if any(sim(x, y) > 0 for y in ids if y != x)]
    orphans = [x for x in ids if x not in clustered]
    if len(clustered) < 2:
        return None

    pairs = [(x, y) for i, x in enumerate(clustered) for y in clustered[i + 1:]]
    m0, m1 = min(pairs, key=lambda p: (sim(*p), p))
    if sim(m0, m1) >= tau_split:
        return None

    for _ in range(10):
        side0 = [x for x in clustered if sim(x, m0) >= sim(x, m1)]
        side1 = [x for x in clustered if x not in side0]
        if not side1:
            return None

        def medoid(side):
            return min(side, key=lambda x: (-sum(sim(x, y) for y in side), x))

        n0, n1 = medoid(side0), medoid(side1)
        if (n0, n1) == (m0, m1):
            break
        m0, m1 = n0, n1

    separation = sim(m0, m1)
    if separation >= tau_split:
        return None
    return side0 + orphans, side1, separation


def _orient(graph: Graph, handle: str, side0: list[str], side1: list[str]):
    """Keep the original name on the side whose context mentions it."""
    own = set(name_tokens(graph.node(handle).name))

    def own_hits(side):
        hits = 0
        for eid in side:
            edge = graph.edge(eid)
            neighbor = edge.dst if edge.src == handle else edge.src
            hits += sum(1 for t in name_tokens(graph.node(neighbor).name) if t in own)
        return hits

    if own_hits(side1) > own_hits(side0):
        return side1, side0
    return side0, side1


def _rename_for(graph: Graph, handle: str, side: list[str]) -> Optional[str]:
    """Dominant neighbor token of a split-off side, if it is a new concept."""
    own = set(name_tokens(graph.node(handle).name))
    counts: dict[str, int] = {}
    for eid in side:
        edge = graph.edge(eid)
        neighbor = edge.dst if edge.src == handle else edge.src
        for token in name_tokens(graph.node(neighbor).name):
            if token not in own:
                counts[token] = counts.get(token, 0) + 1
    if not counts:
        return None
    return min(counts, key=lambda t: (-counts[t], t))


def propose_round(graph: Graph, new_nodes: list[str], cfg: Config) -> list[GraphOpProposal]:
    """One round of proposals against the current graph.

    ``new_nodes`` are the handles a feed (or a previous round) introduced.
    Every proposal references live handles; applying all of them in order is
    safe (conflicting proposals are filtered within the round).
    """
    fresh = [h for h in new_nodes if h in graph.nodes]
    proposals: list[GraphOpProposal] = []

    # splits: a freshly-arrived concept name echoing inside an established
    # neighborhood is the polysemy signal; brand-new neighborhoods are not
    # re-examined against themselves
    fresh_set = set(fresh)
    split_candidates: list[str] = []
    for nn in fresh:
        trigger = graph.node(nn).name.casefold()
        for handle in graph.nodes:
            if handle == nn or handle in split_candidates:
                continue
            for eid in graph.incident(handle):
                edge = graph.edge(eid)
                neighbor = edge.dst if edge.src == handle else edge.src
                if neighbor in fresh_set:
                    continue
                if trigger in name_tokens(graph.node(neighbor).name):
                    split_candidates.append(handle)
                    break

    for handle in split_candidates:
        incident = graph.incident(handle)
        if len(incident) < 2:
            continue
        vectors = {eid: edge_context(graph, handle, eid) for eid in incident}
        clustering = _two_medoid(vectors, cfg.tau_split)
        if clustering is None:
            continue
        side0, side1, separation = clustering
        side0, side1 = _orient(graph, handle, side0, side1)
        original = graph.node(handle).name
        rename = _rename_for(graph, handle, side1)
        names = (original, rename or original)
        assignment = {eid: 0 for eid in side0}
        assignment.update({eid: 1 for eid in side1})
        proposals.append(GraphOpProposal(
            kind="split",
            score=1.0 - separation,
            rationale=(f"incident contexts of {original!r} separate into two "
                       f"clusters (inter-medoid similarity {separation:.3f})"),
            node=handle, assignment=assignment, names=names))

    # merges: same name, same type, different source, compatible contexts
    order = list(graph.nodes)
    position = {h: i for i, h in enumerate(order)}
    seen_pairs = set()
    for nn in fresh:
        node = graph.nodes[nn]
        for other in order:
            if other == nn:
                continue
            twin = graph.nodes[other]
            if twin.name.casefold() != node.name.casefold():
                continue
            if twin.node_type != node.node_type or twin.src == node.src:
                continue
            a, b = sorted((nn, other), key=position.__getitem__)
            if (a, b) in seen_pairs:
                continue
            seen_pairs.add((a, b))
            score = merge_score(compute_feature_vector(graph, a),
                                compute_feature_vector(graph, b))
            if score >= cfg.tau_merge:
                proposals.append(GraphOpProposal(
                    kind="merge", score=score,
                    rationale=(f"{node.name!r} from sources "
                               f"{graph.nodes[a].src!r} and {graph.nodes[b].src!r} "
                               f"share a compatible context (score {score:.3f})"),
                    a=a, b=b))

    proposals.sort(key=lambda p: (-p.score, p.kind != "split", p.handles()))
    # drop proposals that touch a handle an earlier proposal consumes
    touched: set[str] = set()
    kept = []
    for p in proposals:
        if any(h in touched for h in p.handles()):
            continue
        touched.update(p.handles())
        kept.append(p)
    return kept

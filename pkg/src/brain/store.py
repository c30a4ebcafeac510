"""Append-only knowledge log (the single source of truth) plus snapshots.

The graph database is a pure function of the log: every record either folds
in a feed, applies a structural operation, or records a crowd verdict.
Handles are minted from (seq, position), so replaying the log reproduces the
live graph exactly, handle for handle.

Log file format: one record = ``<payload byte length>\\n<payload>\\n`` with a
JSON payload; a torn tail is detected and truncated on the next append.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

from . import ingest
from .errors import NotFoundError, StoreError, ValidationError
from .graph import EdgeTypeRegistry, Graph, Minter

SNAPSHOT_FORMAT_VERSION = 1

KIND_FEED = "feed"
KIND_FEEDBACK = "feedback"
KIND_GRAPH_OP = "graph_op"


@dataclass(frozen=True)
class KBRecord:
    seq: int
    kind: str
    payload: dict
    recorded_at: str


class LogStore:
    """Single-writer append-only log under ``data_dir/kb.log``."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        (self.data_dir / "snapshots").mkdir(exist_ok=True)
        (self.data_dir / "media").mkdir(exist_ok=True)
        self.log_path = self.data_dir / "kb.log"
        self._last_seq, self._valid_bytes = self._scan()

    @property
    def last_seq(self) -> int:
        return self._last_seq

    def _scan(self) -> tuple[int, int]:
        """Count intact records; remember where the valid prefix ends."""
        if not self.log_path.exists():
            return 0, 0
        data = self.log_path.read_bytes()
        offset = 0
        seq = 0
        while offset < len(data):
            newline = data.find(b"\n", offset)
            if newline < 0:
                break
            try:
                length = int(data[offset:newline])
            except ValueError:
                break
            start = newline + 1
            end = start + length
            if end + 1 > len(data) or data[end:end + 1] != b"\n":
                break
            try:
                json.loads(data[start:end])
            except json.JSONDecodeError:
                break
            seq += 1
            offset = end + 1
        return seq, offset

    def append(self, kind: str, payload: dict, recorded_at: Optional[str] = None) -> int:
        if kind not in (KIND_FEED, KIND_FEEDBACK, KIND_GRAPH_OP):
            raise StoreError(f"unknown record kind {kind!r}")
        seq = self._last_seq + 1
        record = {
            "seq": seq,
            "kind": kind,
            "payload": payload,
            "recorded_at": recorded_at or ingest.utcnow(),
        }
        blob = json.dumps(record, sort_keys=True).encode("utf-8")
        frame = str(len(blob)).encode() + b"\n" + blob + b"\n"
        with open(self.log_path, "ab") as fh:
            if fh.tell() != self._valid_bytes:
                fh.truncate(self._valid_bytes)  # drop a torn tail
                fh.seek(self._valid_bytes)
            fh.write(frame)
            fh.flush()
            os.fsync(fh.fileno())
        self._last_seq = seq
        self._valid_bytes += len(frame)
        return seq

    def records(self) -> Iterator[KBRecord]:
        if not self.log_path.exists():
            return
        data = self.log_path.read_bytes()[:self._valid_bytes]
        offset = 0
        expected = 1
        while offset < len(data):
            newline = data.find(b"\n", offset)
            length = int(data[offset:newline])
            start = newline + 1
            raw = json.loads(data[start:start + length])
            if raw["seq"] != expected:
                raise StoreError(
                    f"log corrupt: expected seq {expected}, found {raw['seq']}")
            yield KBRecord(raw["seq"], raw["kind"], raw["payload"],
                           raw["recorded_at"])
            expected += 1
            offset = start + length + 1

    # --- snapshots ---------------------------------------------------------

    def snapshot(self, graph: Graph, up_to_seq: int) -> Path:
        path = self.data_dir / "snapshots" / f"snap_{up_to_seq:08d}.json"
        blob = {
            "format_version": SNAPSHOT_FORMAT_VERSION,
            "up_to_seq": up_to_seq,
            "graph": graph_state(graph),
        }
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(blob, sort_keys=True), encoding="utf-8")
        tmp.replace(path)
        return path

    def latest_snapshot(self) -> Optional[tuple[int, Graph]]:
        snaps = sorted((self.data_dir / "snapshots").glob("snap_*.json"))
        for path in reversed(snaps):
            try:
                return self.load_snapshot(path)
            except StoreError:
                continue
        return None

    def load_snapshot(self, path: str | Path) -> tuple[int, Graph]:
        try:
            blob = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StoreError(f"unreadable snapshot {path}: {exc}") from None
        if blob.get("format_version") != SNAPSHOT_FORMAT_VERSION:
            raise StoreError(
                f"snapshot {path} has format version "
                f"{blob.get('format_version')!r}, expected {SNAPSHOT_FORMAT_VERSION}")
        return blob["up_to_seq"], graph_from_state(blob["graph"])


# --- record application (shared by the live writer and rebuild) ------------


def apply_record(graph: Graph, record: KBRecord) -> list[str]:
    """Apply one log record; returns handles of nodes it created."""
    minter = Minter(record.seq)
    if record.kind == KIND_FEED:
        feed = ingest.Feed.from_payload(record.payload)
        delta = graph.apply_feed_union(feed, minter)
        return delta.added_nodes
    if record.kind == KIND_FEEDBACK:
        p = record.payload
        target = p["target"]
        if target in graph.nodes:
            graph.nodes[target].belief.record(p["user"], p["verdict"])
        elif target in graph.edges:
            graph.edges[target].belief.record(p["user"], p["verdict"])
        else:
            raise NotFoundError(f"feedback target {target!r} is not live")
        return []
    if record.kind == KIND_GRAPH_OP:
        return apply_graph_op(graph, record.payload, minter)
    raise StoreError(f"unknown record kind {record.kind!r}")


def apply_graph_op(graph: Graph, op: dict, minter: Minter) -> list[str]:
    name = op["op"]
    if name == "split":
        names = tuple(op["names"]) if op.get("names") else None
        s0, s1 = graph.split(op["node"], dict(op["assignment"]), minter, names)
        return [s0, s1]
    if name == "merge":
        graph.merge(op["a"], op["b"])
        return []
    if name == "add_node":
        h = graph.add_node(op["name"], op["type"], op.get("src", "manual"),
                           minter, media_ref=op.get("media_ref"))
        return [h]
    if name == "add_edge":
        graph.add_edge(op["src"], op["dst"], op["edge_type"], minter,
                       source=op.get("source", "manual"))
        return []
    if name == "delete_node":
        graph.delete_node(op["handle"])
        return []
    if name == "delete_edge":
        graph.delete_edge(op["id"])
        return []
    raise ValidationError(f"unknown graph op {name!r}")


def rebuild(store: LogStore, registry: Optional[EdgeTypeRegistry] = None,
            exclude_source: Optional[str] = None,
            base: Optional[tuple[int, Graph]] = None) -> Graph:
    """Replay the log into a fresh graph.

    ``exclude_source`` quarantines one source: its feeds are skipped and any
    later record that no longer applies is dropped.  ``base`` starts from a
    snapshot (seq, graph) and replays only the suffix.
    """
    if base is not None:
        start_seq, graph = base
        graph = graph.clone()
    else:
        start_seq, graph = 0, Graph(registry or EdgeTypeRegistry())
    for record in store.records():
        if record.seq <= start_seq:
            continue
        if exclude_source and record.kind == KIND_FEED and \
                record.payload.get("source") == exclude_source:
            continue
        try:
            apply_record(graph, record)
        except (NotFoundError, ValidationError):
            if exclude_source is None:
                raise
            # records depending on quarantined content no longer apply
    return graph


def graph_state(graph: Graph) -> dict:
    state = graph.canonical_dict()
    state["ident"] = [[name, node_type, src, handle]
                      for (name, node_type, src), handle
                      in sorted(graph._ident.items())]
    return state


def graph_from_state(state: dict) -> Graph:
    graph = Graph(EdgeTypeRegistry(state["edge_types"]))
    minter = _VerbatimMinter()
    for n in state["nodes"]:
        minter.next_node = n["handle"]
        h = graph.add_node(n["name"], n["node_type"], n["src"], minter,
                           media_ref=n.get("media_ref"))
        graph.nodes[h].belief.votes = dict(n.get("votes", {}))
        # identity map is restored from the saved ident table below
        del graph._ident[(n["name"], n["node_type"], n["src"])]
    for e in state["edges"]:
        minter.next_edge = e["id"]
        eid = graph.add_edge(e["src"], e["dst"], e["edge_type"], minter,
                             source=e.get("source", ""))
        graph.edges[eid].belief.votes = dict(e.get("votes", {}))
    graph.retired = {h: dict(r) for h, r in state.get("retired", {}).items()}
    graph._ident = {(name, node_type, src): handle
                    for name, node_type, src, handle in state.get("ident", [])}
    return graph


class _VerbatimMinter:
    """Minter that hands back pre-recorded handles (snapshot restore)."""

    def __init__(self):
        self.next_node = None
        self.next_edge = None

    def node_handle(self) -> str:
        return self.next_node

    def edge_id(self) -> str:
        return self.next_edge

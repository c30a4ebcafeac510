"""Append-only log, snapshots, and deterministic rebuild."""

from __future__ import annotations

import json
import random

import pytest

from brain.graph import EdgeTypeRegistry, Graph, Minter
from brain.errors import StoreError
from brain.store import (KIND_FEED, KIND_FEEDBACK, KIND_GRAPH_OP, LogStore,
                         apply_record, graph_from_state, graph_state, rebuild)

from .test_graph import W, make_feed


def feed_payload(source, triples):
    return make_feed(source, triples).payload()


SIMPLE = [(("Human", W), "CanUse", ("Cup", W)),
          (("Cup", W), "IsTypeOf", ("Crockery", W))]


class TestLogStore:
    def test_append_assigns_dense_seqs(self, tmp_path):
        store = LogStore(tmp_path)
        assert store.append(KIND_FEED, feed_payload("s", SIMPLE)) == 1
        assert store.append(KIND_FEEDBACK,
                            {"target": "n1_0", "verdict": "approve",
                             "user": "u", "at": "t"}) == 2
        assert store.last_seq == 2

    def test_records_roundtrip(self, tmp_path):
        store = LogStore(tmp_path)
        payload = feed_payload("s", SIMPLE)
        store.append(KIND_FEED, payload)
        [rec] = list(store.records())
        assert rec.seq == 1 and rec.kind == KIND_FEED and rec.payload == payload

    def test_reopen_continues_sequence(self, tmp_path):
        LogStore(tmp_path).append(KIND_FEED, feed_payload("s", SIMPLE))
        store = LogStore(tmp_path)
        assert store.last_seq == 1
        assert store.append(KIND_FEED, feed_payload("s", SIMPLE)) == 2

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(StoreError):
            LogStore(tmp_path).append("bogus", {})

    def test_torn_tail_truncated_on_next_append(self, tmp_path):
        store = LogStore(tmp_path)
        store.append(KIND_FEED, feed_payload("s", SIMPLE))
        with open(store.log_path, "ab") as fh:
            fh.write(b"999\n{\"torn")  # partial frame
        store2 = LogStore(tmp_path)
        assert store2.last_seq == 1
        store2.append(KIND_FEED, feed_payload("s", SIMPLE))
        assert [r.seq for r in store2.records()] == [1, 2]

    def test_corrupt_middle_frame_stops_scan(self, tmp_path):
        store = LogStore(tmp_path)
        store.append(KIND_FEED, feed_payload("s", SIMPLE))
        store.append(KIND_FEED, feed_payload("s", SIMPLE))
        data = store.log_path.read_bytes()
        store.log_path.write_bytes(data[: len(data) // 2])
        assert LogStore(tmp_path).last_seq == 1

    def test_non_dense_seq_detected(self, tmp_path):
        store = LogStore(tmp_path)
        store.append(KIND_FEED, feed_payload("s", SIMPLE))
        blob = json.dumps({"seq": 5, "kind": KIND_FEED,
                           "payload": feed_payload("s", SIMPLE),
                           "recorded_at": "t"}).encode()
        with open(store.log_path, "ab") as fh:
            fh.write(str(len(blob)).encode() + b"\n" + blob + b"\n")
        store2 = LogStore(tmp_path)
        with pytest.raises(StoreError):
            list(store2.records())


class TestApplyRecord:
    def test_feed_minting_is_seq_deterministic(self, tmp_path):
        store = LogStore(tmp_path)
        store.append(KIND_FEED, feed_payload("s", SIMPLE))
        g = rebuild(store)
        assert set(g.nodes) == {"n1_0", "n1_1", "n1_2"}
        assert set(g.edges) == {"e1_0", "e1_1"}

    def test_graph_op_records(self, tmp_path):
        store = LogStore(tmp_path)
        store.append(KIND_FEED, feed_payload("s", SIMPLE))
        store.append(KIND_GRAPH_OP, {"op": "add_node", "name": "X", "type": W})
        store.append(KIND_GRAPH_OP, {"op": "add_edge", "src": "n2_0",
                                     "dst": "n1_0", "edge_type": "CanUse"})
        g = rebuild(store)
        assert g.node("n2_0").name == "X"
        assert g.edge("e3_0").dst == "n1_0"

    def test_feedback_on_missing_target_raises(self, tmp_path):
        store = LogStore(tmp_path)
        store.append(KIND_FEEDBACK, {"target": "n9_9", "verdict": "approve",
                                     "user": "u", "at": "t"})
        with pytest.raises(Exception):
            rebuild(store)


def random_log(rng: random.Random, store: LogStore):
    """Drive a live graph while appending; returns the live graph."""
    g = Graph()
    sources = ["alpha", "beta", "gamma"]
    names = ["a", "b", "c", "d", "e", "f"]
    edge_types = ["CanUse", "IsTypeOf", "HasAffordance"]
    for _ in range(rng.randint(1, 50)):
        kind = rng.random()
        if kind < 0.6 or not g.nodes:
            triples = [((rng.choice(names), W), rng.choice(edge_types),
                        (rng.choice(names), W))
                       for _ in range(rng.randint(1, 4))]
            feed = make_feed(rng.choice(sources), triples)
            seq = store.append(KIND_FEED, feed.payload())
            g.apply_feed_union(feed, Minter(seq))
        elif kind < 0.8:
            target = rng.choice(sorted(g.nodes) + sorted(g.edges))
            user = rng.choice(["u1", "u2", "u3"])
            verdict = rng.choice(["approve", "disapprove"])
            seq = store.append(KIND_FEEDBACK, {"target": target,
                                               "verdict": verdict,
                                               "user": user, "at": "t"})
            (g.nodes.get(target) or g.edges[target]).belief.record(user, verdict)
        else:
            live = sorted(g.nodes)
            mergeable = [
                (a, b)
                for i, a in enumerate(live) for b in live[i + 1:]
                if g.nodes[a].name.casefold() == g.nodes[b].name.casefold()
                and g.nodes[a].node_type == g.nodes[b].node_type
                and g.nodes[a].src != g.nodes[b].src
            ]
            if not mergeable:
                continue
            a, b = rng.choice(mergeable)
            seq = store.append(KIND_GRAPH_OP, {"op": "merge", "a": a, "b": b})
            g.merge(a, b)
    return g


class TestRebuild:
    def test_replay_matches_live_100_random_logs(self, tmp_path):
        for i in range(100):
            rng = random.Random(1000 + i)
            store = LogStore(tmp_path / f"log{i}")
            live = random_log(rng, store)
            assert rebuild(store).canonical_json() == live.canonical_json()

    def test_rebuild_twice_is_identical(self, tmp_path):
        store = LogStore(tmp_path)
        random_log(random.Random(7), store)
        assert rebuild(store).canonical_json() == rebuild(store).canonical_json()

    def test_quarantine_removes_all_source_content(self, tmp_path):
        store = LogStore(tmp_path)
        random_log(random.Random(99), store)
        g = rebuild(store, exclude_source="beta")
        assert all(n.src != "beta" for n in g.nodes.values())
        assert all(e.source != "beta" for e in g.edges.values())

    def test_quarantine_drops_dependent_records(self, tmp_path):
        store = LogStore(tmp_path)
        store.append(KIND_FEED, feed_payload("beta", SIMPLE))
        store.append(KIND_FEEDBACK, {"target": "n1_0", "verdict": "approve",
                                     "user": "u", "at": "t"})
        g = rebuild(store, exclude_source="beta")
        assert g.nodes == {}

    def test_rebuild_from_snapshot_base(self, tmp_path):
        store = LogStore(tmp_path)
        store.append(KIND_FEED, feed_payload("s", SIMPLE))
        mid = rebuild(store)
        store.snapshot(mid, store.last_seq)
        store.append(KIND_FEED, feed_payload(
            "s", [(("Cup", W), "HasAffordance", ("pourable", "Affordance"))]))
        base = store.latest_snapshot()
        assert base is not None
        full = rebuild(store)
        resumed = rebuild(store, base=base)
        assert resumed.canonical_json() == full.canonical_json()


class TestSnapshots:
    def roundtrip(self, g: Graph):
        return graph_from_state(json.loads(json.dumps(graph_state(g))))

    def test_state_roundtrip_preserves_everything(self, tmp_path):
        store = LogStore(tmp_path)
        g = random_log(random.Random(3), store)
        g2 = self.roundtrip(g)
        assert g2.canonical_json() == g.canonical_json()
        assert g2._ident == g._ident

    def test_snapshot_file_roundtrip(self, tmp_path):
        store = LogStore(tmp_path)
        g = random_log(random.Random(5), store)
        path = store.snapshot(g, store.last_seq)
        seq, loaded = store.load_snapshot(path)
        assert seq == store.last_seq
        assert loaded.canonical_json() == g.canonical_json()

    def test_latest_snapshot_skips_corrupt(self, tmp_path):
        store = LogStore(tmp_path)
        g = random_log(random.Random(6), store)
        store.snapshot(g, store.last_seq)
        bad = store.data_dir / "snapshots" / f"snap_{store.last_seq + 1:08d}.json"
        bad.write_text("{broken", encoding="utf-8")
        seq, loaded = store.latest_snapshot()
        assert seq == store.last_seq

    def test_format_version_checked(self, tmp_path):
        store = LogStore(tmp_path)
        g = random_log(random.Random(8), store)
        path = store.snapshot(g, store.last_seq)
        blob = json.loads(path.read_text())
        blob["format_version"] = 99
        path.write_text(json.dumps(blob))
        with pytest.raises(StoreError):
            store.load_snapshot(path)

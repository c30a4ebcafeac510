"""Query evaluation: builtins, beliefs, plugins, representation selection."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brain.errors import RqlEvalError
from brain.graph import Graph, Minter
from brain.rql import eval as E
from brain.rql import parser as P

from .conftest import to_oracle_value
from .oracle import Oracle
from .test_graph import W, make_feed

TRUST9 = 0.9


def run(src, graph, **kw):
    return E.evaluate_program(P.parse(src), graph, **kw)


def world():
    g = Graph()
    g.apply_feed_union(make_feed("base", [
        (("Human", W), "CanUse", ("Cup", W)),
        (("Human", W), "CanUse", ("Shoe", W)),
        (("Human", W), "CanPerformAction", ("Drinking", W)),
        (("Drinking", W), "CanUse", ("Cup", W)),
        (("Cup", W), "HasAffordance", ("pourable", "Affordance")),
    ]), Minter(1))
    return g


def names(g, v):
    if isinstance(v, E.NodeRef):
        return g.node(v.handle).name
    if isinstance(v, E.PathRef):
        return [g.node(h).name for h in v.path.nodes]
    if isinstance(v, (list, tuple)):
        return [names(g, x) for x in v]
    return v


class TestFetch:
    def test_single_variable_returns_values(self):
        g = world()
        out = run("fetch ({name:'Human'})->['CanUse']->(v)", g)
        assert names(g, out) == ["Cup", "Shoe"]

    def test_multi_variable_returns_tuples(self):
        g = world()
        out = run("fetch (u{name:'Human'})->['CanUse']->(v)", g)
        assert names(g, out) == [["Human", "Cup"], ["Human", "Shoe"]]

    def test_name_constraint_case_insensitive(self):
        g = world()
        assert names(g, run("fetch ({name:'hUmAn'})->['CanUse']->(v)", g)) == \
            ["Cup", "Shoe"]

    def test_edge_variable(self):
        g = world()
        out = run("fetch ({name:'Human'})->[e]->(v)", g)
        assert all(isinstance(t[0], E.EdgeRef) for t in out)
        assert len(out) == 3

    def test_star_paths(self):
        g = world()
        out = run("fetch ({name:'Human'})->[r *]->({name:'Cup'})", g)
        assert names(g, out) == [["Human", "Cup"], ["Human", "Drinking", "Cup"]]

    def test_handle_constraint_via_variable(self):
        g = world()
        cup = g.find_handle("Cup", W, "base")
        out = run("fetch (u)->['CanUse']->({handle:h})", g,
                  env={"h": E.NodeRef(cup)})
        assert names(g, out) == ["Human", "Drinking"]  # canonical handle order

    def test_unknown_key_rejected(self):
        with pytest.raises(Exception) as exc:
            run("fetch ({color:'red'})->['CanUse']->(v)", world())
        assert "color" in str(exc.value)

    def test_empty_result(self):
        assert run("fetch ({name:'Ghost'})->['CanUse']->(v)", world()) == []


class TestBuiltins:
    def test_len(self):
        g = world()
        assert run("Len fetch ({name:'Human'})->['CanUse']->(v)", g) == 2.0

    def test_len_gt_empty_graph(self):
        assert run("Len fetch ({name:'x'})->['CanUse']->(v) > 0", Graph()) is False

    def test_map_with_lambda(self):
        g = world()
        out = run("objects := fetch ({name:'Human'})->['CanUse']->(v)\n"
                  "map(\\u -> Belief u) objects", g)
        assert out == [0.5, 0.5]

    def test_filter(self):
        g = world()
        out = run("filter (\\u -> Len fetch ({handle:u})->['HasAffordance']->(v) > 0) "
                  "(fetch ({name:'Human'})->['CanUse']->(v))", g)
        assert names(g, out) == ["Cup"]

    def test_find_returns_first_or_empty(self):
        g = world()
        found = run("find (\\u -> Belief u > 0) fetch ({name:'Human'})->['CanUse']->(v)", g)
        assert names(g, found) == "Cup"
        missing = run("find (\\u -> Belief u > 1) fetch ({name:'Human'})->['CanUse']->(v)", g)
        assert missing == []

    def test_composition_via_juxtaposition(self):
        g = world()
        out = run("parents n := fetch (v)->['CanUse']->({handle:n})\n"
                  "map (\\u -> Len parents u) fetch ({name:'Human'})->['CanUse']->(v)", g)
        assert out == [2.0, 1.0]

    def test_sortby_descending_with_canonical_ties(self):
        g = world()
        out = run("SortBy(\\u -> Belief u) fetch ({name:'Human'})->['CanUse']->(v)", g)
        # equal scores: canonical handle order
        handles = [v.handle for v in out]
        assert handles == sorted(handles)

    def test_argmax_tie_canonical(self):
        g = world()
        out = run("ArgMax(\\u -> Belief u) fetch ({name:'Human'})->['CanUse']->(v)", g)
        assert names(g, out) == "Cup"

    def test_argmax_empty_errors(self):
        with pytest.raises(RqlEvalError):
            run("ArgMax(\\u -> Belief u) fetch ({name:'x'})->['CanUse']->(v)", world())

    def test_map_tuple_lambda_rewrites_last_slot(self):
        g = world()
        out = run("map(\\(u, v) -> Belief v) fetch (u{name:'Human'})->['CanUse']->(v)", g)
        assert all(isinstance(t, tuple) and isinstance(t[1], float) for t in out)

    def test_len_on_non_list_errors(self):
        with pytest.raises(RqlEvalError):
            run("Len 'text'", world())

    def test_unbound_variable(self):
        with pytest.raises(RqlEvalError):
            run("nonesuch 1", world())


class TestBeliefs:
    def test_default_prior_mean(self):
        g = world()
        assert run("Belief find (\\u -> Belief u > 0) "
                   "fetch ({name:'Human'})->['CanUse']->(v)", g) == pytest.approx(0.5)

    def test_trust_shapes_prior(self):
        g = world()
        cup = g.find_handle("Cup", W, "base")
        ctx = E.EvalContext(g, {}, lambda s: TRUST9, 6)
        assert ctx.belief(E.NodeRef(cup)) == pytest.approx(4.6 / 6.0, abs=1e-12)

    def test_votes_move_posterior(self):
        g = world()
        cup = g.find_handle("Cup", W, "base")
        for u in ("u1", "u2", "u3"):
            g.node(cup).belief.record(u, "approve")
        g.node(cup).belief.record("u4", "disapprove")
        ctx = E.EvalContext(g, {}, lambda s: 0.5, 6)
        assert ctx.belief(E.NodeRef(cup)) == pytest.approx(0.6, abs=1e-12)

    def test_path_belief_is_product_with_interior_nodes(self):
        g = world()
        [direct, hop2] = run("fetch ({name:'Human'})->[r *]->({name:'Cup'})", g)
        ctx = E.EvalContext(g, {}, lambda s: 0.5, 6)
        assert ctx.belief(direct) == pytest.approx(0.5)
        # two edges (0.5 each) and one interior node (0.5)
        assert ctx.belief(hop2) == pytest.approx(0.125)

    def test_path_belief_at_most_min_edge(self):
        g = world()
        paths = run("fetch ({name:'Human'})->[r *]->({name:'Cup'})", g)
        ctx = E.EvalContext(g, {}, lambda s: 0.5, 6)
        for p in paths:
            edge_beliefs = [ctx.belief(E.EdgeRef(e)) for e in p.path.edges]
            assert ctx.belief(p) <= min(edge_beliefs) + 1e-12

    def test_belief_on_number_errors(self):
        with pytest.raises(RqlEvalError):
            run("Belief 3", world())


def grounding_graph(priors=("0.5", "0.7")):
    g = Graph()
    g.apply_feed_union(make_feed("grounding", [
        (("AlgA", "GroundingAlgorithm"), "HasParameters", ("weights_a", "Params")),
        (("AlgB", "GroundingAlgorithm"), "HasParameters", ("weights_b", "Params")),
        (("AlgA", "GroundingAlgorithm"), "HasPriorProb", ((priors[0]), "Prior")),
        (("AlgB", "GroundingAlgorithm"), "HasPriorProb", ((priors[1]), "Prior")),
    ]), Minter(1))
    return g


PLUGINS = {"AlgA": lambda L, e, p: 0.6, "AlgB": lambda L, e, p: 0.5}


class TestSelectRepresentation:
    def test_prior_flips_winner(self):
        g = grounding_graph()
        node, score = E.select_representation("cmd", "env", g, PLUGINS)
        assert g.node(node.handle).name == "AlgB"
        assert score == pytest.approx(0.35)

    def test_single_algorithm_wins_regardless_of_prior(self):
        g = Graph()
        g.apply_feed_union(make_feed("grounding", [
            (("AlgA", "GroundingAlgorithm"), "HasParameters", ("weights_a", "Params")),
            (("AlgA", "GroundingAlgorithm"), "HasPriorProb", ("0.01", "Prior")),
        ]), Minter(1))
        node, _ = E.select_representation("cmd", "env", g, PLUGINS)
        assert g.node(node.handle).name == "AlgA"

    def test_tie_resolved_by_canonical_order(self):
        g = grounding_graph(priors=("0.5", "0.6"))
        plugins = {"AlgA": lambda L, e, p: 0.6, "AlgB": lambda L, e, p: 0.5}
        # products: A 0.30, B 0.30 -> first canonical handle wins (AlgA)
        node, score = E.select_representation("cmd", "env", g, plugins)
        assert g.node(node.handle).name == "AlgA"
        assert score == pytest.approx(0.30)

    def test_missing_prior_defaults_to_one_with_warning(self, caplog):
        g = Graph()
        g.apply_feed_union(make_feed("grounding", [
            (("AlgA", "GroundingAlgorithm"), "HasParameters", ("weights_a", "Params")),
        ]), Minter(1))
        with caplog.at_level("WARNING"):
            node, score = E.select_representation("cmd", "env", g, PLUGINS)
        assert score == pytest.approx(0.6)
        assert any("1.0" in r.message for r in caplog.records)

    def test_no_algorithms_is_error(self):
        with pytest.raises(RqlEvalError):
            E.select_representation("cmd", "env", Graph(), PLUGINS)

    def test_unregistered_plugin_is_error(self):
        g = grounding_graph()
        with pytest.raises(RqlEvalError):
            E.select_representation("cmd", "env", g, {"AlgA": PLUGINS["AlgA"]})

    def test_plugin_score_range_enforced(self):
        g = grounding_graph()
        bad = {"AlgA": lambda L, e, p: 1.5, "AlgB": lambda L, e, p: 0.5}
        with pytest.raises(RqlEvalError):
            E.select_representation("cmd", "env", g, bad)

    @given(st.floats(min_value=0.01, max_value=100.0,
                     allow_nan=False, allow_infinity=False))
    @settings(max_examples=30, deadline=None)
    def test_prior_rescaling_invariance(self, c):
        base = grounding_graph()
        scaled = grounding_graph(priors=(repr(0.5 * c), repr(0.7 * c)))
        n1, _ = E.select_representation("cmd", "env", base, PLUGINS)
        n2, _ = E.select_representation("cmd", "env", scaled, PLUGINS)
        assert base.node(n1.handle).name == scaled.node(n2.handle).name


class TestProperties:
    @given(st.integers(min_value=0, max_value=2 ** 30))
    @settings(max_examples=30, deadline=None)
    def test_sortby_is_permutation(self, seed):
        g = world()
        out = run("SortBy(\\(u, e, v) -> Belief e) fetch (u)->[e]->(v)", g)
        xs = run("fetch (u)->[e]->(v)", g)
        assert sorted(map(repr, out)) == sorted(map(repr, xs))

    def test_evaluation_pure(self):
        g = world()
        src = "SortBy(\\P -> Belief P) fetch ({name:'Human'})->[r *]->({name:'Cup'})"
        assert run(src, g) == run(src, g)

    def test_argmax_element_of_input(self):
        g = world()
        xs = run("fetch ({name:'Human'})->['CanUse']->(v)", g)
        best = run("ArgMax(\\u -> Belief u) fetch ({name:'Human'})->['CanUse']->(v)", g)
        assert best in xs


# --- random-program agreement with the brute-force oracle -------------------

PROGRAM_POOL = [
    "fetch ({name:'Human'})->['CanUse']->(v)",
    "fetch (u)->[e]->(v)",
    "fetch (u)->['CanUse']->(v)",
    "fetch ({name:'Human'})->[r *]->(v)",
    "Len fetch (u)->['HasAffordance']->(v)",
    "SortBy(\\P -> Belief P) fetch ({name:'Human'})->[r *]->({name:'Cup'})",
    "map(\\u -> Belief u) fetch ({name:'Human'})->['CanUse']->(v)",
    "filter(\\u -> Belief u > 0.4) fetch ({name:'a'})->['CanUse']->(v)",
    "map(\\(u, v) -> Belief v) fetch (u)->['CanUse']->(v)",
    "find(\\u -> Len fetch ({handle:u})->['HasAffordance']->(w) > 0) "
    "fetch ({name:'Human'})->['CanUse']->(v)",
    "objects := fetch ({name:'Human'})->['CanUse']->(v)\n"
    "map(\\u -> fetch ({handle:u})->['HasAffordance']->(w)) objects",
]

small_feed = st.lists(
    st.tuples(st.tuples(st.sampled_from(["Human", "Cup", "Shoe", "a", "b"]),
                        st.just(W)),
              st.sampled_from(["CanUse", "HasAffordance", "IsTypeOf"]),
              st.tuples(st.sampled_from(["Cup", "Shoe", "pourable", "a", "c"]),
                        st.just(W))),
    min_size=1, max_size=8)


@given(small_feed, st.sampled_from(PROGRAM_POOL))
@settings(max_examples=120, deadline=None)
def test_oracle_equivalence(triples, src):
    g = Graph()
    g.apply_feed_union(make_feed("rand", triples), Minter(1))
    program = P.parse(src)
    mine = E.evaluate_program(program, g, max_path_len=4)
    theirs, _ = Oracle(g, max_path_len=4).run_program(program)
    assert to_oracle_value(mine) == theirs

"""Evaluator for parsed query programs against a graph snapshot.

Functions are curried; application is left-associative.  An arity-complete
function applied to another function composes instead (``Len parents u``
means ``Len (parents u)``), which is what makes the juxtaposition style of
the query corpus work out.  ``map`` with a tuple-destructuring lambda
rewrites the last tuple slot, so pipelines like ``argMaxBy(\\(u, v) -> v)
map(\\(u, v) -> score) pairs`` keep carrying the paired-up first components.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..errors import NotFoundError, RqlEvalError
from ..graph import Graph, Path
from . import parser as P

log = logging.getLogger(__name__)

DEFAULT_TRUST = 0.5


# --- runtime values --------------------------------------------------------


@dataclass(frozen=True)
class NodeRef:
    handle: str


@dataclass(frozen=True)
class EdgeRef:
    id: str


@dataclass(frozen=True)
class PathRef:
    path: Path


@dataclass(frozen=True)
class Closure:
    params: tuple[str, ...]
    body: P.Expr
    env: "Env"
    tuple_param: bool = False


@dataclass(frozen=True)
class Builtin:
    name: str
    arity: int
    args: tuple = ()


@dataclass(frozen=True)
class NodeCall:
    """An algorithm node being applied: dispatches to a scorer plugin."""

    handle: str
    args: tuple = ()


@dataclass(frozen=True)
class Composed:
    outer: object
    inner: object


def is_callable(v) -> bool:
    return isinstance(v, (Closure, Builtin, NodeCall, Composed))


def remaining_arity(v) -> int:
    if isinstance(v, Closure):
        return 1 if v.tuple_param else len(v.params)
    if isinstance(v, Builtin):
        return v.arity - len(v.args)
    if isinstance(v, NodeCall):
        return 3 - len(v.args)
    if isinstance(v, Composed):
        return 1
    return 0


class Env:
    def __init__(self, bindings: Optional[dict] = None, parent: Optional["Env"] = None):
        self.bindings = bindings or {}
        self.parent = parent

    def lookup(self, name: str):
        env = self
        while env is not None:
            if name in env.bindings:
                return env.bindings[name]
            env = env.parent
        raise RqlEvalError(f"unbound variable {name!r}")

    def child(self, bindings: dict) -> "Env":
        return Env(bindings, self)


BUILTIN_ARITIES = {
    "map": 2,
    "filter": 2,
    "find": 2,
    "SortBy": 2,
    "Len": 1,
    "Belief": 1,
    "ArgMax": 2,
    "argMaxBy": 2,
}


def base_env() -> Env:
    return Env({name: Builtin(name, arity)
                for name, arity in BUILTIN_ARITIES.items()})


@dataclass
class EvalContext:
    graph: Graph
    plugins: dict[str, Callable] = field(default_factory=dict)
    trust: Callable[[str], float] = lambda src: DEFAULT_TRUST
    max_path_len: int = 6

    def belief(self, target) -> float:
        if isinstance(target, NodeRef):
            node = self.graph.node(target.handle)
            return node.belief.mean(self.trust(node.src))
        if isinstance(target, EdgeRef):
            edge = self.graph.edge(target.id)
            return edge.belief.mean(self.trust(edge.source))
        if isinstance(target, PathRef):
            p = target.path
            value = 1.0
            for eid in p.edges:
                value *= self.belief(EdgeRef(eid))
            for handle in p.nodes[1:-1]:  # endpoints are fixed by the query
                value *= self.belief(NodeRef(handle))
            return value
        raise RqlEvalError("Belief expects a node, edge or path")


# --- canonical ordering ----------------------------------------------------


def canon_key(v):
    if isinstance(v, NodeRef):
        return (0, v.handle)
    if isinstance(v, EdgeRef):
        return (1, v.id)
    if isinstance(v, PathRef):
        return (2, v.path.sort_key())
    if isinstance(v, bool):
        return (3, v)
    if isinstance(v, float):
        return (4, v)
    if isinstance(v, str):
        return (5, v)
    if isinstance(v, tuple):
        return (6, tuple(canon_key(x) for x in v))
    if isinstance(v, list):
        return (7, tuple(canon_key(x) for x in v))
    return (9, repr(v))


def _as_number(v, what="value") -> float:
    if isinstance(v, bool):
        raise RqlEvalError(f"{what} is a boolean, expected a number")
    if isinstance(v, float):
        return v
    if isinstance(v, NodeRef):
        raise RqlEvalError(f"{what}: node must be coerced via its context")
    raise RqlEvalError(f"{what} is not a number: {v!r}")


# --- evaluation ------------------------------------------------------------


def evaluate(expr: P.Expr, ctx: EvalContext, env: Env):
    if isinstance(expr, P.Var):
        value = env.lookup(expr.name)
        if isinstance(value, _Thunk):
            return evaluate(value.body, ctx, value.env)
        return value
    if isinstance(expr, P.StrLit):
        return expr.value
    if isinstance(expr, P.NumLit):
        return expr.value
    if isinstance(expr, P.Lambda):
        return Closure(expr.params, expr.body, env, expr.tuple_param)
    if isinstance(expr, P.Fetch):
        return _fetch(expr.pattern, ctx, env)
    if isinstance(expr, P.Apply):
        fn = evaluate(expr.fn, ctx, env)
        arg = evaluate(expr.arg, ctx, env)
        return apply_value(fn, arg, ctx)
    if isinstance(expr, P.BinOp):
        return _binop(expr, ctx, env)
    raise RqlEvalError(f"cannot evaluate {expr!r}")


@dataclass(frozen=True)
class _Thunk:
    """Zero-parameter definition; re-evaluated at each reference."""

    body: P.Expr
    env: Env


def apply_value(fn, arg, ctx: EvalContext):
    if not is_callable(fn):
        if isinstance(fn, NodeRef):
            fn = NodeCall(fn.handle)
        else:
            raise RqlEvalError(f"value is not callable: {fn!r}")
    if remaining_arity(fn) == 1 and is_callable(arg):
        return Composed(fn, arg)
    if isinstance(fn, Composed):
        return apply_value(fn.outer, apply_value(fn.inner, arg, ctx), ctx)
    if isinstance(fn, Closure):
        if fn.tuple_param:
            if not isinstance(arg, tuple) or len(arg) != len(fn.params):
                raise RqlEvalError(
                    f"expected a {len(fn.params)}-tuple argument, got {arg!r}")
            env = fn.env.child(dict(zip(fn.params, arg)))
            return evaluate(fn.body, ctx, env)
        env = fn.env.child({fn.params[0]: arg})
        if len(fn.params) > 1:
            return Closure(fn.params[1:], fn.body, env)
        return evaluate(fn.body, ctx, env)
    if isinstance(fn, Builtin):
        args = fn.args + (arg,)
        if len(args) < fn.arity:
            return Builtin(fn.name, fn.arity, args)
        return _call_builtin(fn.name, args, ctx)
    if isinstance(fn, NodeCall):
        args = fn.args + (arg,)
        if len(args) < 3:
            return NodeCall(fn.handle, args)
        return _call_plugin(fn.handle, args, ctx)
    raise RqlEvalError(f"value is not callable: {fn!r}")


def _call_plugin(handle: str, args: tuple, ctx: EvalContext) -> float:
    node = ctx.graph.node(handle)
    plugin = ctx.plugins.get(node.name)
    if plugin is None:
        raise RqlEvalError(f"no scorer plugin registered for {node.name!r}")
    command, environment, params = args
    params_node = ctx.graph.node(params.handle) if isinstance(params, NodeRef) else params
    score = float(plugin(command, environment, params_node))
    if not 0.0 <= score <= 1.0:
        raise RqlEvalError(f"plugin {node.name!r} returned {score} outside [0,1]")
    return score


def _truthy(v) -> bool:
    if isinstance(v, bool):
        return v
    raise RqlEvalError(f"condition must be a boolean, got {v!r}")


def _call1(fn, x, ctx):
    return apply_value(fn, x, ctx)


def _call_builtin(name: str, args: tuple, ctx: EvalContext):
    if name == "Len":
        (xs,) = args
        if is_callable(xs):
            raise RqlEvalError("Len expects a list")
        if not isinstance(xs, list):
            raise RqlEvalError(f"Len expects a list, got {xs!r}")
        return float(len(xs))
    if name == "Belief":
        (target,) = args
        return ctx.belief(target)
    f, xs = args
    if not isinstance(xs, list):
        raise RqlEvalError(f"{name} expects a list, got {xs!r}")
    if name == "map":
        out = []
        for elem in xs:
            r = _call1(f, elem, ctx)
            if (isinstance(f, Closure) and f.tuple_param
                    and isinstance(elem, tuple) and not isinstance(r, tuple)):
                r = elem[:-1] + (r,)
            out.append(r)
        return out
    if name == "filter":
        return [elem for elem in xs if _truthy(_call1(f, elem, ctx))]
    if name == "find":
        for elem in xs:
            if _truthy(_call1(f, elem, ctx)):
                return elem
        return []
    if name == "SortBy":
        scored = [(_as_number(_call1(f, elem, ctx), "sort key"), elem) for elem in xs]
        return [elem for _, elem in
                sorted(scored, key=lambda p: (-p[0], canon_key(p[1])))]
    if name in ("ArgMax", "argMaxBy"):
        if not xs:
            raise RqlEvalError(f"{name} over an empty list")
        scored = [(_as_number(_call1(f, elem, ctx), "score"), elem) for elem in xs]
        best = max(s for s, _ in scored)
        ties = [elem for s, elem in scored if s == best]
        return min(ties, key=canon_key)
    raise RqlEvalError(f"unknown builtin {name!r}")


def _binop(expr: P.BinOp, ctx: EvalContext, env: Env):
    lhs = evaluate(expr.lhs, ctx, env)
    rhs = evaluate(expr.rhs, ctx, env)
    op = expr.op
    if op == "*":
        return _coerce_number(lhs, ctx) * _coerce_number(rhs, ctx)
    if op == "=":
        return lhs == rhs
    if op in (">", "<"):
        a, b = _as_number(lhs, "comparison"), _as_number(rhs, "comparison")
        return a > b if op == ">" else a < b
    if op == "in":
        if not isinstance(rhs, list):
            raise RqlEvalError("'in' expects a list on the right")
        return lhs in rhs
    if op == "and":
        return _truthy(lhs) and _truthy(rhs)
    raise RqlEvalError(f"unknown operator {op!r}")


def _coerce_number(v, ctx: EvalContext) -> float:
    """Numeric coercion for '*': numbers pass through, number-bearing nodes
    contribute their name, an empty fetch result defaults to 1.0 (missing
    prior) with a warning."""
    if isinstance(v, bool):
        raise RqlEvalError("cannot multiply a boolean")
    if isinstance(v, float):
        return v
    if isinstance(v, NodeRef):
        name = ctx.graph.node(v.handle).name
        try:
            return float(name)
        except ValueError:
            raise RqlEvalError(f"node {name!r} does not carry a numeric value")
    if isinstance(v, list):
        if not v:
            log.warning("empty list in numeric position; defaulting to 1.0")
            return 1.0
        if len(v) == 1:
            return _coerce_number(v[0], ctx)
        raise RqlEvalError("cannot multiply a list with more than one element")
    raise RqlEvalError(f"cannot use {v!r} as a number")


def _fetch(pattern: P.Pattern, ctx: EvalContext, env: Env):
    def resolve(var_name: str, key: str) -> str:
        value = env.lookup(var_name)
        if isinstance(value, _Thunk):
            value = evaluate(value.body, ctx, value.env)
        if isinstance(value, str):
            return value
        if isinstance(value, NodeRef):
            node = ctx.graph.node(value.handle)
            return node.handle if key == "handle" else node.name
        if isinstance(value, float):
            return str(int(value)) if value == int(value) else str(value)
        raise RqlEvalError(
            f"constraint variable {var_name!r} must name a string or node")

    compiled = P.compile_pattern(pattern, resolve)
    variables = compiled.variables
    kinds = {}
    for ns in compiled.nodes:
        if ns.var:
            kinds[ns.var] = "node"
    for hop in compiled.hops:
        if hop.var:
            kinds[hop.var] = "path" if hop.kind == "star" else "edge"

    def wrap(var, raw):
        kind = kinds[var]
        if kind == "node":
            return NodeRef(raw)
        if kind == "edge":
            return EdgeRef(raw)
        return PathRef(raw)

    bindings = ctx.graph.match_template(compiled, ctx.max_path_len)
    out = []
    for b in bindings:
        values = tuple(wrap(v, b[v]) for v in variables)
        if len(variables) == 1:
            out.append(values[0])
        else:
            out.append(values)
    return out


# --- program driver --------------------------------------------------------


def evaluate_program(program: P.Program, graph: Graph, *,
                     env: Optional[dict] = None,
                     plugins: Optional[dict] = None,
                     trust: Optional[Callable[[str], float]] = None,
                     max_path_len: int = 6,
                     with_env: bool = False):
    """Run a program; the result is the value of its last statement.

    A trailing zero-parameter definition evaluates to its body's value; a
    parameterized one evaluates to a closure.  With ``with_env`` the return
    is ``(value, env)`` so callers can apply the program's definitions.
    """
    ctx = EvalContext(graph, plugins or {},
                      trust or (lambda src: DEFAULT_TRUST), max_path_len)
    top = base_env().child(dict(env or {}))
    names = set()
    result = None
    for stmt in program.stmts:
        if isinstance(stmt, P.FunDef):
            if stmt.name in names:
                raise RqlEvalError(f"duplicate definition of {stmt.name!r}")
            names.add(stmt.name)
            if stmt.params:
                value = Closure(stmt.params, stmt.body, top)
            else:
                value = _Thunk(stmt.body, top)
            top.bindings[stmt.name] = value
            result = value
        else:
            result = evaluate(stmt, ctx, top)
    if isinstance(result, _Thunk):
        result = evaluate(result.body, ctx, result.env)
    if with_env:
        return result, top
    return result


REPRESENTATION_QUERY = """\
algParam := fetch (u{type:'GroundingAlgorithm'})->['HasParameters']->(v)
prior n := fetch ({name:n})->['HasPriorProb']->(v)
groundings L,E := argMaxBy(\\(u, v) -> v) map(\\(u, v) -> u(L,E,v)*prior u) algParam
"""


def select_representation(command, environment, graph: Graph, plugins: dict, *,
                          trust: Optional[Callable[[str], float]] = None,
                          max_path_len: int = 6):
    """Pick the algorithm node maximizing score(L,E,params) * prior.

    Runs the shared representation-selection query, not a bespoke path.
    Returns (NodeRef of the winning algorithm, winning product).
    """
    program = P.parse(REPRESENTATION_QUERY)
    ctx = EvalContext(graph, plugins,
                      trust or (lambda src: DEFAULT_TRUST), max_path_len)
    groundings = evaluate_program(program, graph, plugins=plugins,
                                  trust=trust, max_path_len=max_path_len)
    partial = apply_value(groundings, command, ctx)
    try:
        result = apply_value(partial, environment, ctx)
    except RqlEvalError as exc:
        if "empty list" in str(exc):
            raise RqlEvalError("no grounding algorithms in the graph") from exc
        raise
    algorithm, score = result
    return algorithm, score


# --- result rendering ------------------------------------------------------


def render_value(value, ctx: EvalContext):
    """Stable structured form of a result for the wire."""
    if isinstance(value, NodeRef):
        node = ctx.graph.node(value.handle)
        return {"kind": "node", "handle": node.handle, "name": node.name,
                "type": node.node_type, "src": node.src,
                "belief": ctx.belief(value)}
    if isinstance(value, EdgeRef):
        edge = ctx.graph.edge(value.id)
        return {"kind": "edge", "id": edge.id, "src": edge.src, "dst": edge.dst,
                "edge_type": edge.edge_type, "belief": ctx.belief(value)}
    if isinstance(value, PathRef):
        return {"kind": "path",
                "nodes": [render_value(NodeRef(h), ctx) for h in value.path.nodes],
                "edges": [render_value(EdgeRef(e), ctx) for e in value.path.edges],
                "belief": ctx.belief(value)}
    if isinstance(value, bool):
        return {"kind": "bool", "value": value}
    if isinstance(value, float):
        return {"kind": "number", "value": value}
    if isinstance(value, str):
        return {"kind": "string", "value": value}
    if isinstance(value, tuple):
        return {"kind": "tuple", "items": [render_value(v, ctx) for v in value]}
    if isinstance(value, list):
        return {"kind": "list", "items": [render_value(v, ctx) for v in value]}
    if is_callable(value):
        return {"kind": "function"}
    raise RqlEvalError(f"cannot serialize {value!r}")

"""Query-language front end: lexer, recursive-descent parser, pretty-printer.

Grammar (EBNF)::

    program  := stmt (NEWLINE stmt)*
    stmt     := IDENT param* ":=" expr | expr
    param    := IDENT | ","
    expr     := cmp ("and" cmp)*
    cmp      := sum (("=" | ">" | "<" | "in") sum)*
    sum      := app ("*" app)*
    app      := atom (atom | "(" expr ("," expr)* ")")*
    atom     := "fetch" pattern | lambda | IDENT | STRING | NUMBER | "(" expr ")"
    lambda   := ("λ" | "\\") lparams "->" expr
    lparams  := IDENT+ | "(" IDENT ("," IDENT)* ")"
    pattern  := nodePat ("->" edgePat "->" nodePat)*
    nodePat  := "(" IDENT? ("{" prop ("," prop)* "}")? ")"
    edgePat  := "[" (STRING | IDENT "*"?) "]"
    prop     := IDENT ":" (STRING | IDENT)

Application is by juxtaposition (left-associative) or by a parenthesized
argument list; both build the same ``Apply`` chain.  String literals accept
the typeset quoting style ```X'`` and normalize it to ``'X'``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from ..errors import RqlSyntaxError
from ..graph import PATTERN_KEYS, CompiledPattern, HopSpec, NodeSpec

MAX_DEPTH = 200

# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class NumLit:
    value: float


@dataclass(frozen=True)
class PatternNode:
    var: Optional[str]
    props: tuple[tuple[str, Union[StrLit, Var]], ...]


@dataclass(frozen=True)
class PatternEdge:
    kind: str  # "label" | "any" | "star"
    label: Optional[str] = None
    var: Optional[str] = None


@dataclass(frozen=True)
class Pattern:
    nodes: tuple[PatternNode, ...]
    hops: tuple[PatternEdge, ...]


@dataclass(frozen=True)
class Fetch:
    pattern: Pattern


@dataclass(frozen=True)
class Lambda:
    params: tuple[str, ...]
    body: "Expr"
    tuple_param: bool = False  # \(u, v) -> ... destructures one tuple arg


@dataclass(frozen=True)
class Apply:
    fn: "Expr"
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: "Expr"
    rhs: "Expr"


Expr = Union[Var, StrLit, NumLit, Fetch, Lambda, Apply, BinOp]


@dataclass(frozen=True)
class FunDef:
    name: str
    params: tuple[str, ...]
    body: Expr


Stmt = Union[FunDef, Expr]


@dataclass(frozen=True)
class Program:
    stmts: tuple[Stmt, ...]


# --- lexer -----------------------------------------------------------------

CMP_OPS = ("=", ">", "<", "in", "and")

_SYMBOLS = (":=", "->", "(", ")", "[", "]", "{", "}", ",", ":", "*", "=", ">", "<")
# a newline after one of these cannot end a statement; treat as continuation
_CONTINUE_AFTER = {":=", "->", "(", "[", "{", ",", ":", "*", "=", ">", "<",
                   "LAMBDA", "KW:fetch", "KW:in", "KW:and"}


@dataclass(frozen=True)
class Token:
    kind: str  # NEWLINE, IDENT, STRING, NUMBER, LAMBDA, EOF, or a symbol
    value: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(source)

    def emit(kind, value, l, c):
        tokens.append(Token(kind, value, l, c))

    def last_significant() -> Optional[Token]:
        for t in reversed(tokens):
            if t.kind != "NEWLINE":
                return t
        return None

    while i < n:
        ch = source[i]
        if ch == "\n":
            prev = last_significant()
            key = None
            if prev is not None:
                key = ("LAMBDA" if prev.kind == "LAMBDA"
                       else f"KW:{prev.value}" if prev.kind == "IDENT"
                       and prev.value in ("fetch", "in", "and")
                       else prev.kind)
            if prev is not None and key in _CONTINUE_AFTER:
                pass  # wrapped statement, swallow the newline
            elif tokens and tokens[-1].kind != "NEWLINE":
                emit("NEWLINE", "\n", line, col)
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch in ("λ", "\\"):
            emit("LAMBDA", ch, line, col)
            i += 1
            col += 1
            continue
        if ch in ("'", "`", "‘"):
            closers = {"'": "'", "`": "'", "‘": "’"}
            # `X' typeset quoting closes with a plain quote
            close = closers[ch]
            j = i + 1
            start_l, start_c = line, col
            while j < n and source[j] not in (close, "\n", "’"):
                j += 1
            if j >= n or source[j] == "\n":
                raise RqlSyntaxError("unterminated string literal", start_l, start_c,
                                     expected=["'"])
            emit("STRING", source[i + 1:j], start_l, start_c)
            col += j + 1 - i
            i = j + 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (source[j].isdigit() or (source[j] == "." and not seen_dot)):
                seen_dot = seen_dot or source[j] == "."
                j += 1
            emit("NUMBER", source[i:j], line, col)
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            emit("IDENT", source[i:j], line, col)
            col += j - i
            i = j
            continue
        matched = None
        for sym in _SYMBOLS:
            if source.startswith(sym, i):
                matched = sym
                break
        if matched is None:
            # typeset arrow
            if source.startswith("→", i):
                matched_len = 1
                emit("->", "->", line, col)
                i += matched_len
                col += matched_len
                continue
            raise RqlSyntaxError(f"unexpected character {ch!r}", line, col)
        emit(matched, matched, line, col)
        i += len(matched)
        col += len(matched)
    emit("EOF", "", line, col)
    return tokens


# --- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.depth = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "EOF":
            self.pos += 1
        return t

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise self.error(f"expected {kind!r}, found {t.kind!r}", [kind])
        return self.advance()

    def error(self, message: str, expected=()) -> RqlSyntaxError:
        t = self.peek()
        return RqlSyntaxError(message, t.line, t.col, expected)

    def _enter(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise self.error("expression nesting too deep")

    def skip_newlines(self):
        while self.peek().kind == "NEWLINE":
            self.advance()

    def program(self) -> Program:
        stmts: list[Stmt] = []
        self.skip_newlines()
        while self.peek().kind != "EOF":
            stmts.append(self.stmt())
            if self.peek().kind not in ("NEWLINE", "EOF"):
                raise self.error(
                    f"unexpected {self.peek().kind!r} after statement",
                    ["NEWLINE"])
            self.skip_newlines()
        if not stmts:
            raise self.error("empty program")
        return Program(tuple(stmts))

    def stmt(self) -> Stmt:
        start = self.pos
        if self.peek().kind == "IDENT":
            name = self.advance().value
            params: list[str] = []
            while True:
                t = self.peek()
                if t.kind == "IDENT":
                    params.append(self.advance().value)
                elif t.kind == ",":
                    self.advance()
                else:
                    break
            if self.peek().kind == ":=":
                self.advance()
                body = self.expr()
                return FunDef(name, tuple(params), body)
            self.pos = start  # not a definition, reparse as expression
        return self.expr()

    def expr(self) -> Expr:
        self._enter()
        try:
            lhs = self.cmp()
            while self.peek().kind == "IDENT" and self.peek().value == "and":
                self.advance()
                lhs = BinOp("and", lhs, self.cmp())
            return lhs
        finally:
            self.depth -= 1

    def cmp(self) -> Expr:
        lhs = self.sum()
        while self.peek().kind in ("=", ">", "<") or (
                self.peek().kind == "IDENT" and self.peek().value == "in"):
            op = self.advance().value
            rhs = self.sum()
            lhs = BinOp(op, lhs, rhs)
        return lhs

    def sum(self) -> Expr:
        lhs = self.app()
        while self.peek().kind == "*":
            self.advance()
            lhs = BinOp("*", lhs, self.app())
        return lhs

    _ATOM_START = ("IDENT", "STRING", "NUMBER", "LAMBDA", "(")

    def app(self) -> Expr:
        # operand := atom ("(" args ")")*  -- call parens bind to their atom
        fn = self.operand()
        while True:
            t = self.peek()
            if t.kind in ("IDENT", "STRING", "NUMBER", "LAMBDA", "("):
                if t.kind == "IDENT" and t.value in ("in", "and"):
                    break
                fn = Apply(fn, self.operand())
            else:
                break
        return fn

    def operand(self) -> Expr:
        e = self.atom()
        while self.peek().kind == "(" and not isinstance(e, (StrLit, NumLit)):
            self.advance()
            args = [self.expr()]
            while self.peek().kind == ",":
                self.advance()
                args.append(self.expr())
            self.expect(")")
            for a in args:
                e = Apply(e, a)
        return e

    def atom(self) -> Expr:
        t = self.peek()
        if t.kind == "IDENT" and t.value == "fetch":
            self.advance()
            return Fetch(self.pattern())
        if t.kind == "LAMBDA":
            return self.lam()
        if t.kind == "IDENT":
            return Var(self.advance().value)
        if t.kind == "STRING":
            return StrLit(self.advance().value)
        if t.kind == "NUMBER":
            raw = self.advance().value
            return NumLit(float(raw))
        if t.kind == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        raise self.error(f"expected an expression, found {t.kind!r}",
                         self._ATOM_START)

    def lam(self) -> Lambda:
        self.expect("LAMBDA")
        params: list[str] = []
        tuple_param = False
        if self.peek().kind == "(":
            self.advance()
            params.append(self.expect("IDENT").value)
            while self.peek().kind == ",":
                self.advance()
                params.append(self.expect("IDENT").value)
            self.expect(")")
            tuple_param = len(params) > 1
        else:
            params.append(self.expect("IDENT").value)
            while self.peek().kind == "IDENT" and self.peek(1).kind in (
                    "IDENT", "->"):
                if self.peek().value in ("in", "and"):
                    break
                params.append(self.advance().value)
        self.expect("->")
        return Lambda(tuple(params), self.expr(), tuple_param)

    def pattern(self) -> Pattern:
        nodes = [self.node_pat()]
        hops: list[PatternEdge] = []
        while self.peek().kind == "->":
            self.advance()
            hops.append(self.edge_pat())
            self.expect("->")
            nodes.append(self.node_pat())
        return Pattern(tuple(nodes), tuple(hops))

    def node_pat(self) -> PatternNode:
        self.expect("(")
        var = None
        if self.peek().kind == "IDENT":
            var = self.advance().value
        props: list[tuple[str, Union[StrLit, Var]]] = []
        if self.peek().kind == "{":
            self.advance()
            while True:
                key = self.expect("IDENT").value
                self.expect(":")
                t = self.peek()
                if t.kind == "STRING":
                    value: Union[StrLit, Var] = StrLit(self.advance().value)
                elif t.kind == "IDENT":
                    value = Var(self.advance().value)
                else:
                    raise self.error("expected a string or identifier "
                                     "constraint value", ["STRING", "IDENT"])
                props.append((key, value))
                if self.peek().kind != ",":
                    break
                self.advance()
            self.expect("}")
        self.expect(")")
        return PatternNode(var, tuple(props))

    def edge_pat(self) -> PatternEdge:
        self.expect("[")
        t = self.peek()
        if t.kind == "STRING":
            label = self.advance().value
            self.expect("]")
            return PatternEdge("label", label=label)
        if t.kind == "IDENT":
            var = self.advance().value
            if self.peek().kind == "*":
                self.advance()
                self.expect("]")
                return PatternEdge("star", var=var)
            self.expect("]")
            return PatternEdge("any", var=var)
        if t.kind == "*":
            self.advance()
            self.expect("]")
            return PatternEdge("star")
        raise self.error("expected an edge label, variable or '*'",
                         ["STRING", "IDENT", "*"])


def parse(source: str) -> Program:
    """Parse UTF-8 query text into a Program, or raise RqlSyntaxError."""
    if isinstance(source, bytes):
        source = source.decode("utf-8", errors="replace")
    try:
        tokens = tokenize(source)
        return _Parser(tokens).program()
    except RqlSyntaxError:
        raise
    except RecursionError:
        raise RqlSyntaxError("expression nesting too deep", 1, 1) from None


def parse_expr(source: str) -> Expr:
    program = parse(source)
    stmt = program.stmts[-1]
    if isinstance(stmt, FunDef):
        raise RqlSyntaxError("expected an expression, found a definition", 1, 1)
    return stmt


# --- pretty printer --------------------------------------------------------


def _atomish(e: Expr) -> bool:
    return isinstance(e, (Var, StrLit, NumLit))


def _p_expr(e: Expr) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, StrLit):
        return "'" + e.value + "'"
    if isinstance(e, NumLit):
        v = e.value
        return str(int(v)) if v == int(v) else repr(v)
    if isinstance(e, Fetch):
        return "fetch " + _p_pattern(e.pattern)
    if isinstance(e, Lambda):
        if e.tuple_param:
            head = "(" + ", ".join(e.params) + ")"
        else:
            head = " ".join(e.params)
        return "\\" + head + " -> " + _p_expr(e.body)
    if isinstance(e, Apply):
        fn = _p_expr(e.fn)
        arg = _p_expr(e.arg)
        arg_parens = not _atomish(e.arg)
        # a parenthesized argument reads as a call bound to the preceding
        # atom, so an Apply-chain function must be parenthesized as a unit
        if not (_atomish(e.fn) or isinstance(e.fn, Apply)) or \
                (arg_parens and isinstance(e.fn, Apply)):
            fn = "(" + fn + ")"
        if arg_parens:
            arg = "(" + arg + ")"
        return fn + " " + arg
    if isinstance(e, BinOp):
        def side(s: Expr) -> str:
            txt = _p_expr(s)
            if isinstance(s, (BinOp, Lambda)):
                return "(" + txt + ")"
            return txt
        return f"{side(e.lhs)} {e.op} {side(e.rhs)}"
    raise TypeError(f"not an expression: {e!r}")


def _p_pattern(p: Pattern) -> str:
    parts = [_p_node(p.nodes[0])]
    for hop, node in zip(p.hops, p.nodes[1:]):
        parts.append(_p_hop(hop))
        parts.append(_p_node(node))
    return "->".join(parts)


def _p_node(n: PatternNode) -> str:
    body = n.var or ""
    if n.props:
        inner = ", ".join(
            f"{k}:{_p_expr(v)}" for k, v in n.props)
        body += "{" + inner + "}"
    return "(" + body + ")"


def _p_hop(h: PatternEdge) -> str:
    if h.kind == "label":
        return "['" + h.label + "']"
    if h.kind == "any":
        return "[" + h.var + "]"
    return "[" + (h.var or "") + " *]"


def pretty(node) -> str:
    """Canonical text form; ``parse(pretty(x))`` reproduces ``x``."""
    if isinstance(node, Program):
        return "\n".join(pretty(s) for s in node.stmts)
    if isinstance(node, FunDef):
        head = node.name + ("" if not node.params else " " + " ".join(node.params))
        return head + " := " + _p_expr(node.body)
    return _p_expr(node)


# --- pattern compilation ---------------------------------------------------


def compile_pattern(p: Pattern, resolve=None) -> CompiledPattern:
    """Lower a parsed pattern to the graph matcher's form.

    ``resolve(var_name, key)`` supplies values for constraints written as
    variables (e.g. ``{name:n}``); omitting it restricts the pattern to
    literal constraints.
    """
    nodes = []
    for n in p.nodes:
        constraints = []
        for key, value in n.props:
            if key not in PATTERN_KEYS:
                raise RqlSyntaxError(
                    f"unknown constraint key {key!r}; allowed: "
                    + ", ".join(PATTERN_KEYS), 1, 1)
            if isinstance(value, StrLit):
                constraints.append((key, value.value))
            else:
                if resolve is None:
                    raise RqlSyntaxError(
                        f"constraint {key!r} references variable {value.name!r} "
                        "but no environment was provided", 1, 1)
                constraints.append((key, resolve(value.name, key)))
        nodes.append(NodeSpec(n.var, tuple(constraints)))
    # edge-type labels are spelled with or without internal spaces in query
    # text ('HasAffordance' / 'Has Affordance'); the registry form has none
    hops = tuple(
        HopSpec(h.kind, h.label.replace(" ", "") if h.label else h.label, h.var)
        for h in p.hops)
    return CompiledPattern(tuple(nodes), hops)

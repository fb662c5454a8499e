"""Query layer: the SPARQL subset used by view places.

Supported: basic graph patterns, JOIN (adjacent groups), UNION, FILTER with
term (in)equality, SELECT and ASK forms, set-based answers under simple
entailment. Variables may occupy any triple position, including the
predicate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import MMNetError, ParseError, UnboundAnswerVariable
from .rdf import MetadataGraph, Term, format_term, iri, literal, parse_term


@dataclass(frozen=True, order=True)
class Var:
    name: str  # without the leading '?'

    def __repr__(self):
        return "?" + self.name


@dataclass(frozen=True)
class TriplePattern:
    s: Term | Var
    p: Term | Var
    o: Term | Var

    def __post_init__(self):
        if isinstance(self.p, Term) and self.p.kind != "iri":
            raise MMNetError("predicate position holds an IRI or a variable")

    def positions(self):
        return (self.s, self.p, self.o)


@dataclass(frozen=True)
class BGP:
    patterns: tuple[TriplePattern, ...]  # ordered as written


@dataclass(frozen=True)
class Join:
    left: object
    right: object


@dataclass(frozen=True)
class Union:
    left: object
    right: object


@dataclass(frozen=True)
class Condition:
    op: str  # "=" | "!="
    left: Term | Var
    right: Term | Var


@dataclass(frozen=True)
class Filter:
    pattern: object
    condition: Condition


@dataclass(frozen=True)
class Query:
    form: str  # "select" | "ask"
    answer_vars: tuple[Var, ...]
    pattern: object
    star: bool = False


def pattern_vars(node) -> list[Var]:
    """Variables in first-occurrence order."""
    out: list[Var] = []

    def walk(n):
        if isinstance(n, BGP):
            for tp in n.patterns:
                for pos in tp.positions():
                    if isinstance(pos, Var) and pos not in out:
                        out.append(pos)
        elif isinstance(n, (Join, Union)):
            walk(n.left)
            walk(n.right)
        elif isinstance(n, Filter):
            walk(n.pattern)
        else:
            raise MMNetError(f"unknown pattern node {n!r}")

    walk(node)
    return out


# -- parsing ------------------------------------------------------------------

_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"#[^\n]*"),
    ("VAR", r"\?[A-Za-z_][\w]*"),
    ("IRIREF", r"<[^<>\s]*>"),
    ("STRING", r'"[^"\n]*"'),
    ("PNAME", r"[A-Za-z_][\w-]*:[A-Za-z_][\w.-]*"),
    ("NEQ", r"!="),
    ("WORD", r"[A-Za-z_][\w]*"),
    ("PUNCT", r"[{}().=*]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{n}>{p})" for n, p in _TOKEN_SPEC))

_KEYWORDS = {"select", "ask", "where", "filter", "union"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        tok_text = m.group()
        if kind not in ("WS", "COMMENT"):
            if kind == "WORD" and tok_text.lower() in _KEYWORDS:
                kind = tok_text.lower().upper()
            toks.append(_Tok(kind, tok_text, line, col))
        newlines = tok_text.count("\n")
        if newlines:
            line += newlines
            col = len(tok_text) - tok_text.rfind("\n")
        else:
            col += len(tok_text)
        pos = m.end()
    toks.append(_Tok("EOF", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg):
        tok = self.peek()
        raise ParseError(msg, tok.line, tok.col)

    def expect(self, kind, text=None) -> _Tok:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            self.fail(f"expected {text or kind}, found {tok.text or 'end of input'!r}")
        return self.next()

    def parse_query(self) -> Query:
        tok = self.peek()
        if tok.kind == "SELECT":
            self.next()
            star = False
            answer: list[Var] = []
            if self.peek().kind == "PUNCT" and self.peek().text == "*":
                self.next()
                star = True
            else:
                while self.peek().kind == "VAR":
                    answer.append(Var(self.next().text[1:]))
                if not answer:
                    self.fail("SELECT needs answer variables or *")
            self.expect("WHERE")
            pattern = self.parse_group()
            self.expect("EOF")
            pvars = pattern_vars(pattern)
            if star:
                answer = pvars
            else:
                for v in answer:
                    if v not in pvars:
                        raise UnboundAnswerVariable(
                            f"answer variable ?{v.name} not in pattern")
            return Query("select", tuple(answer), pattern, star)
        if tok.kind == "ASK":
            self.next()
            self.expect("WHERE")
            pattern = self.parse_group()
            self.expect("EOF")
            return Query("ask", (), pattern)
        self.fail("query must start with SELECT or ASK")

    def parse_group(self):
        self.expect("PUNCT", "{")
        current = None
        run: list[TriplePattern] = []
        filters: list[Condition] = []

        def flush():
            nonlocal current
            if run:
                bgp = BGP(tuple(run))
                run.clear()
                current = bgp if current is None else Join(current, bgp)

        while True:
            tok = self.peek()
            if tok.kind == "PUNCT" and tok.text == "}":
                self.next()
                break
            if tok.kind == "EOF":
                self.fail("unterminated group: expected }")
            if tok.kind == "FILTER":
                self.next()
                self.expect("PUNCT", "(")
                filters.append(self.parse_condition())
                self.expect("PUNCT", ")")
            elif tok.kind == "UNION":
                self.next()
                flush()
                if current is None:
                    self.fail("UNION needs a left-hand pattern")
                current = Union(current, self.parse_group())
            elif tok.kind == "PUNCT" and tok.text == "{":
                flush()
                sub = self.parse_group()
                current = sub if current is None else Join(current, sub)
            else:
                run.append(self.parse_triple_pattern())
                if self.peek().kind == "PUNCT" and self.peek().text == ".":
                    self.next()
        flush()
        if current is None:
            current = BGP(())
        for cond in filters:
            pvars = set(pattern_vars(current))
            for side in (cond.left, cond.right):
                if isinstance(side, Var) and side not in pvars:
                    raise ParseError(
                        f"FILTER references ?{side.name} outside its pattern")
            current = Filter(current, cond)
        return current

    def parse_term_or_var(self, predicate=False):
        tok = self.peek()
        if tok.kind == "VAR":
            self.next()
            return Var(tok.text[1:])
        if tok.kind == "IRIREF":
            self.next()
            return parse_term(tok.text)
        if tok.kind == "PNAME":
            self.next()
            return iri(tok.text)
        if tok.kind == "STRING" and not predicate:
            self.next()
            return literal(tok.text[1:-1])
        self.fail("expected a variable or RDF term")

    def parse_triple_pattern(self) -> TriplePattern:
        s = self.parse_term_or_var()
        p = self.parse_term_or_var(predicate=True)
        o = self.parse_term_or_var()
        return TriplePattern(s, p, o)

    def parse_condition(self) -> Condition:
        left = self.parse_term_or_var()
        tok = self.peek()
        if tok.kind == "NEQ":
            op = "!="
            self.next()
        elif tok.kind == "PUNCT" and tok.text == "=":
            op = "="
            self.next()
        else:
            self.fail("expected = or != in FILTER condition")
        right = self.parse_term_or_var()
        return Condition(op, left, right)


def parse_query(text: str) -> Query:
    return _Parser(text).parse_query()


def _fmt_pos(pos) -> str:
    return f"?{pos.name}" if isinstance(pos, Var) else format_term(pos)


def _unparse_pattern(node) -> str:
    if isinstance(node, BGP):
        return " ".join(f"{_fmt_pos(t.s)} {_fmt_pos(t.p)} {_fmt_pos(t.o)} ."
                        for t in node.patterns)
    if isinstance(node, Join):
        return "{ %s } { %s }" % (_unparse_pattern(node.left),
                                  _unparse_pattern(node.right))
    if isinstance(node, Union):
        return "{ %s } UNION { %s }" % (_unparse_pattern(node.left),
                                        _unparse_pattern(node.right))
    if isinstance(node, Filter):
        cond = node.condition
        return "%s FILTER(%s %s %s)" % (_unparse_pattern(node.pattern),
                                        _fmt_pos(cond.left), cond.op,
                                        _fmt_pos(cond.right))
    raise MMNetError(f"unknown pattern node {node!r}")


def unparse(q: Query) -> str:
    if q.form == "ask":
        return "ASK WHERE { %s }" % _unparse_pattern(q.pattern)
    heads = "*" if q.star else " ".join(f"?{v.name}" for v in q.answer_vars)
    return "SELECT %s WHERE { %s }" % (heads, _unparse_pattern(q.pattern))


# -- evaluation ----------------------------------------------------------------

Mapping = dict  # Var -> Term


def _freeze(mapping: Mapping):
    return tuple(sorted(mapping.items(), key=lambda kv: kv[0].name))


def _thaw(frozen) -> Mapping:
    return dict(frozen)


def eval_bgp(g: MetadataGraph, bgp: BGP) -> set:
    """All mappings total on Vars(bgp) with every instantiated pattern in g.
    Returned as frozen (sorted tuple) mappings; the empty BGP yields the
    singleton empty mapping."""
    results = [{}]
    for tp in bgp.patterns:
        next_results = []
        for theta in results:
            s = theta.get(tp.s, tp.s) if isinstance(tp.s, Var) else tp.s
            p = theta.get(tp.p, tp.p) if isinstance(tp.p, Var) else tp.p
            o = theta.get(tp.o, tp.o) if isinstance(tp.o, Var) else tp.o
            s_c = s if isinstance(s, Term) else None
            p_c = p if isinstance(p, Term) else None
            o_c = o if isinstance(o, Term) else None
            for t in g.match(s_c, p_c, o_c):
                ext = dict(theta)
                ok = True
                for pos, val in ((s, t.s), (p, t.p), (o, t.o)):
                    if isinstance(pos, Var):
                        if pos in ext and ext[pos] != val:
                            ok = False
                            break
                        ext[pos] = val
                if ok:
                    next_results.append(ext)
        results = next_results
        if not results:
            break
    return {_freeze(m) for m in results}


def _compatible(m1: Mapping, m2: Mapping):
    merged = dict(m1)
    for k, v in m2.items():
        if k in merged and merged[k] != v:
            return None
        merged[k] = v
    return merged


def _eval_condition(cond: Condition, theta: Mapping) -> bool:
    def resolve(side):
        if isinstance(side, Var):
            if side not in theta:
                raise MMNetError(f"FILTER variable ?{side.name} unbound")
            return theta[side]
        return side

    left, right = resolve(cond.left), resolve(cond.right)
    return (left == right) if cond.op == "=" else (left != right)


def eval_pattern(g: MetadataGraph, node) -> set:
    if isinstance(node, BGP):
        return eval_bgp(g, node)
    if isinstance(node, Join):
        left = eval_pattern(g, node.left)
        right = eval_pattern(g, node.right)
        out = set()
        for f1 in left:
            m1 = _thaw(f1)
            for f2 in right:
                merged = _compatible(m1, _thaw(f2))
                if merged is not None:
                    out.add(_freeze(merged))
        return out
    if isinstance(node, Union):
        return eval_pattern(g, node.left) | eval_pattern(g, node.right)
    if isinstance(node, Filter):
        return {f for f in eval_pattern(g, node.pattern)
                if _eval_condition(node.condition, _thaw(f))}
    raise MMNetError(f"unknown pattern node {node!r}")


def answer(g: MetadataGraph, q: Query):
    """SELECT: duplicate-free set of answer tuples in declared variable
    order. ASK: whether the pattern has any mapping."""
    mappings = eval_pattern(g, q.pattern)
    if q.form == "ask":
        return bool(mappings)
    out = set()
    for frozen in mappings:
        theta = _thaw(frozen)
        row = []
        for v in q.answer_vars:
            if v not in theta:
                raise MMNetError(
                    f"answer variable ?{v.name} unbound in some mapping")
            row.append(theta[v])
        out.add(tuple(row))
    return frozenset(out)

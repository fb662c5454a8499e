"""Inscription terms and guard formulas: AST, evaluation, parsing, rendering.

One expression language serves arc inscriptions, guard arguments, action
actual arguments and action templates. Variables spelled with a `nu_` prefix
are fresh variables; `-` is integer subtraction; `::` is the cast operator.
Guards are predicate applications closed under not/and/or with `true`;
the outermost predicate always comes from a non-media type.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import MMNetError, ParseError, TypeMismatch, UnknownPredicate
from .rdf import compact_iri
from .values import (
    EQUALITY_BY_KIND,
    INT_T,
    IRI_T,
    LITERAL_T,
    OID_T,
    RECT_T,
    SET,
    STR_T,
    DataType,
    TypeDomain,
    Value,
    mk_int,
    mk_iri,
    mk_oid,
    mk_str,
    parse_rect,
    render_value,
)

FRESH_PREFIX = "nu_"


# -- AST ------------------------------------------------------------------------

@dataclass(frozen=True)
class VarRef:
    name: str

    @property
    def fresh(self) -> bool:
        return self.name.startswith(FRESH_PREFIX)


@dataclass(frozen=True)
class Const:
    value: Value


@dataclass(frozen=True)
class EmptySetLit:
    """`{}` before its element type is known from a cast or place color."""


@dataclass(frozen=True)
class Cast:
    expr: object
    target: DataType


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


@dataclass(frozen=True)
class TrueGuard:
    pass


@dataclass(frozen=True)
class Cmp:
    op: str  # "=", "!=", "<", ">"
    left: object
    right: object


@dataclass(frozen=True)
class PredCall:
    name: str
    args: tuple


@dataclass(frozen=True)
class Not:
    inner: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


def expr_vars(expr) -> set[str]:
    if isinstance(expr, VarRef):
        return {expr.name}
    if isinstance(expr, Cast):
        return expr_vars(expr.expr)
    if isinstance(expr, Call):
        out = set()
        for a in expr.args:
            out |= expr_vars(a)
        return out
    return set()


def guard_vars(g) -> set[str]:
    if isinstance(g, (TrueGuard, type(None))):
        return set()
    if isinstance(g, Cmp):
        return expr_vars(g.left) | expr_vars(g.right)
    if isinstance(g, PredCall):
        out = set()
        for a in g.args:
            out |= expr_vars(a)
        return out
    if isinstance(g, Not):
        return guard_vars(g.inner)
    if isinstance(g, (And, Or)):
        return guard_vars(g.left) | guard_vars(g.right)
    raise MMNetError(f"unknown guard node {g!r}")


# -- evaluation -------------------------------------------------------------------

def eval_expr(expr, env: dict, domain: TypeDomain, store=None):
    """Evaluate to a Value, or to a tuple of Values when a set accessor
    returns a multi-component element."""
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, VarRef):
        if expr.name not in env:
            raise MMNetError(f"unbound variable {expr.name!r}")
        return env[expr.name]
    if isinstance(expr, EmptySetLit):
        raise TypeMismatch("empty set literal needs a set type from context")
    if isinstance(expr, Cast):
        if isinstance(expr.expr, EmptySetLit):
            if expr.target.kind != SET:
                raise TypeMismatch("cast of {} must target a set type")
            return Value(expr.target, ())
        inner = eval_expr(expr.expr, env, domain, store)
        if isinstance(inner, tuple):
            raise TypeMismatch("cannot cast a tuple result")
        from .values import cast
        return cast(inner, expr.target)
    if isinstance(expr, Call):
        args = [eval_expr(a, env, domain, store) for a in expr.args]
        return domain.eval_function(expr.func, args, store)
    raise MMNetError(f"unknown expression node {expr!r}")


def _single(v, where):
    if isinstance(v, tuple):
        raise TypeMismatch(f"{where} got a tuple where one value was expected")
    return v


def eval_guard(g, env: dict, domain: TypeDomain, store=None) -> bool:
    if g is None or isinstance(g, TrueGuard):
        return True
    if isinstance(g, Not):
        return not eval_guard(g.inner, env, domain, store)
    if isinstance(g, And):
        return (eval_guard(g.left, env, domain, store)
                and eval_guard(g.right, env, domain, store))
    if isinstance(g, Or):
        return (eval_guard(g.left, env, domain, store)
                or eval_guard(g.right, env, domain, store))
    if isinstance(g, PredCall):
        args = [_single(eval_expr(a, env, domain, store), g.name) for a in g.args]
        return domain.eval_predicate(g.name, args)
    if isinstance(g, Cmp):
        left = _single(eval_expr(g.left, env, domain, store), g.op)
        right = _single(eval_expr(g.right, env, domain, store), g.op)
        if g.op in ("=", "!="):
            if left.type != right.type:
                raise TypeMismatch(
                    f"comparison between {left.type.name} and {right.type.name}")
            sym = EQUALITY_BY_KIND.get(left.type.kind)
            if sym is None:
                raise UnknownPredicate(
                    f"no equality predicate for {left.type.name}")
            eq = domain.eval_predicate(sym, [left, right])
            return eq if g.op == "=" else not eq
        if g.op == "<":
            return domain.eval_predicate("<_int", [left, right])
        if g.op == ">":
            return domain.eval_predicate("<_int", [right, left])
    raise MMNetError(f"unknown guard node {g!r}")


# -- static component typing -------------------------------------------------------

def expr_component_types(expr, var_types: dict, domain: TypeDomain):
    """Component types the expression contributes to an inscription tuple,
    or None when not statically known. Normally one component; a set
    accessor over a multi-component set contributes several."""
    if isinstance(expr, Const):
        return [expr.value.type]
    if isinstance(expr, VarRef):
        t = var_types.get(expr.name)
        return [t] if t is not None else None
    if isinstance(expr, Cast):
        return [expr.target]
    if isinstance(expr, EmptySetLit):
        return None
    if isinstance(expr, Call):
        if expr.func in ("ins", "rem"):
            return (expr_component_types(expr.args[0], var_types, domain)
                    if expr.args else None)
        if expr.func == "getL":
            inner = (expr_component_types(expr.args[0], var_types, domain)
                     if expr.args else None)
            if inner and len(inner) == 1 and inner[0].kind == SET:
                return list(inner[0].element)
            return None
        if expr.func == "detectIMG":
            return [domain.set_type((RECT_T,))]
        sig = domain.functions.get(expr.func)
        if sig is not None and sig.result is not None:
            return [sig.result]
        return None
    return None


# -- lexer (shared with the net-definition parser) ---------------------------------

_RECT_SRC = r"\(\s*-?\d+\s*,\s*-?\d+\s*\)\s*\.\.\s*\(\s*-?\d+\s*,\s*-?\d+\s*\)"

_TOKEN_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"#[^\n]*"),
    ("TRIPLESTRING", r'"""(?:[^"]|"(?!""))*"""'),
    ("STRING", r'"[^"\n]*"'),
    ("RECT", _RECT_SRC),
    ("ARROW", r"->"),
    ("CAST", r"::"),
    ("NEQ", r"!="),
    ("OIDLIT", r"@[A-Za-z_][\w.-]*"),
    ("IRIREF", r"<[^<>\s]*>"),
    ("PNAME", r"[A-Za-z_][\w-]*:[A-Za-z_][\w.-]*"),
    ("INT", r"\d+"),
    ("IDENT", r"[A-Za-z_][\w]*"),
    ("PUNCT", r"[{}()\[\],:*=<>\-.]"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{n}>{p})" for n, p in _TOKEN_SPEC))


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        tok_text = m.group()
        if kind not in ("WS", "COMMENT"):
            toks.append(Token(kind, tok_text, line, col))
        newlines = tok_text.count("\n")
        if newlines:
            line += newlines
            col = len(tok_text) - tok_text.rfind("\n")
        else:
            col += len(tok_text)
        pos = m.end()
    toks.append(Token("EOF", "", line, col))
    return toks


class TokenStream:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    def peek(self, ahead=0) -> Token:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.toks[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def at(self, kind, text=None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def at_punct(self, text) -> bool:
        return self.at("PUNCT", text)

    def accept(self, kind, text=None):
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind, text=None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            shown = tok.text if tok.kind != "EOF" else "end of input"
            self.fail(f"expected {text or kind}, found {shown!r}")
        return self.next()

    def fail(self, msg):
        tok = self.peek()
        raise ParseError(msg, tok.line, tok.col)


COMPARATORS = ("=", "<", ">")


class ExprParser:
    """Recursive-descent parser for expressions and guards over a stream."""

    def __init__(self, stream: TokenStream, domain: TypeDomain):
        self.s = stream
        self.domain = domain

    # type references: IDENT | set(IDENT, ...)
    def parse_typeref(self) -> DataType:
        tok = self.s.expect("IDENT")
        if tok.text == "set":
            self.s.expect("PUNCT", "(")
            comps = [self.domain.type_named(self.s.expect("IDENT").text)]
            while self.s.accept("PUNCT", ","):
                comps.append(self.domain.type_named(self.s.expect("IDENT").text))
            self.s.expect("PUNCT", ")")
            return self.domain.set_type(tuple(comps))
        try:
            return self.domain.type_named(tok.text)
        except TypeMismatch as exc:
            raise ParseError(str(exc), tok.line, tok.col)

    def parse_expr(self):
        left = self.parse_postfix()
        while self.s.at_punct("-"):
            self.s.next()
            right = self.parse_postfix()
            left = Call("minus", (left, right))
        return left

    def parse_postfix(self):
        e = self.parse_primary()
        while self.s.accept("CAST"):
            target = self.parse_typeref()
            e = Cast(e, target)
        return e

    def parse_primary(self):
        s = self.s
        tok = s.peek()
        if tok.kind == "INT":
            s.next()
            return Const(mk_int(int(tok.text)))
        if tok.kind == "PUNCT" and tok.text == "-" and s.peek(1).kind == "INT":
            s.next()
            return Const(mk_int(-int(s.next().text)))
        if tok.kind == "STRING":
            s.next()
            return Const(mk_str(tok.text[1:-1]))
        if tok.kind == "OIDLIT":
            s.next()
            return Const(mk_oid(tok.text[1:]))
        if tok.kind == "IRIREF":
            s.next()
            return Const(mk_iri(compact_iri(tok.text[1:-1])))
        if tok.kind == "PNAME":
            s.next()
            return Const(mk_iri(tok.text))
        if tok.kind == "RECT":
            s.next()
            return Const(Value(RECT_T, parse_rect(tok.text)))
        if tok.kind == "PUNCT" and tok.text == "{":
            return self.parse_set_literal()
        if tok.kind == "IDENT":
            s.next()
            if s.at_punct("("):
                s.next()
                args = []
                if not s.at_punct(")"):
                    args.append(self.parse_expr())
                    while s.accept("PUNCT", ","):
                        args.append(self.parse_expr())
                s.expect("PUNCT", ")")
                return Call(tok.text, tuple(args))
            return VarRef(tok.text)
        if tok.kind == "PUNCT" and tok.text == "(":
            s.next()
            e = self.parse_expr()
            s.expect("PUNCT", ")")
            return e
        s.fail(f"expected an expression, found {tok.text or 'end of input'!r}")

    def parse_set_literal(self):
        s = self.s
        s.expect("PUNCT", "{")
        if s.accept("PUNCT", "}"):
            return EmptySetLit()
        elements = []
        while True:
            if s.at_punct("("):
                s.next()
                comps = [self._const_component()]
                while s.accept("PUNCT", ","):
                    comps.append(self._const_component())
                s.expect("PUNCT", ")")
                elements.append(tuple(comps))
            else:
                elements.append((self._const_component(),))
            if not s.accept("PUNCT", ","):
                break
        s.expect("PUNCT", "}")
        comp_types = tuple(v.type for v in elements[0])
        st = self.domain.set_type(comp_types)
        return Const(Value(st, tuple(elements)))

    def _const_component(self) -> Value:
        tok = self.s.peek()
        e = self.parse_postfix()
        v = _fold_const(e)
        if v is None:
            raise ParseError("set literal elements must be constants",
                             tok.line, tok.col)
        return v

    # guards
    def parse_guard(self):
        left = self.parse_guard_and()
        while self.s.at("IDENT", "or"):
            self.s.next()
            left = Or(left, self.parse_guard_and())
        return left

    def parse_guard_and(self):
        left = self.parse_guard_unary()
        while self.s.at("IDENT", "and"):
            self.s.next()
            left = And(left, self.parse_guard_unary())
        return left

    def parse_guard_unary(self):
        if self.s.at("IDENT", "not"):
            self.s.next()
            return Not(self.parse_guard_unary())
        return self.parse_guard_atom()

    def parse_guard_atom(self):
        s = self.s
        if s.at("IDENT", "true"):
            s.next()
            return TrueGuard()
        if s.at_punct("("):
            mark = s.i
            try:
                s.next()
                inner = self.parse_guard()
                s.expect("PUNCT", ")")
                if not (s.at_punct("=") or s.at("NEQ") or s.at_punct("<")
                        or s.at_punct(">") or s.at("CAST") or s.at_punct("-")):
                    return inner
            except ParseError:
                pass
            s.i = mark  # it was a parenthesized expression after all
        tok = s.peek()
        e = self.parse_expr()
        if s.at("NEQ"):
            s.next()
            return Cmp("!=", e, self.parse_expr())
        for op in COMPARATORS:
            if s.at_punct(op):
                s.next()
                return Cmp(op, e, self.parse_expr())
        if isinstance(e, Call) and e.func in self.domain.predicates:
            return PredCall(e.func, e.args)
        s.fail(f"expected a comparison or predicate, found {tok.text!r}")


def _fold_const(expr):
    """Constant-fold a parse-time expression (casts over constants)."""
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Cast):
        inner = _fold_const(expr.expr)
        if inner is None:
            return None
        from .values import cast
        return cast(inner, expr.target)
    return None


def parse_expr_text(text: str, domain: TypeDomain):
    stream = TokenStream(text)
    e = ExprParser(stream, domain).parse_expr()
    stream.expect("EOF")
    return e


def parse_guard_text(text: str, domain: TypeDomain):
    stream = TokenStream(text)
    g = ExprParser(stream, domain).parse_guard()
    stream.expect("EOF")
    return g


# -- rendering ---------------------------------------------------------------------

def render_expr(expr) -> str:
    if isinstance(expr, Const):
        return render_value(expr.value)
    if isinstance(expr, VarRef):
        return expr.name
    if isinstance(expr, EmptySetLit):
        return "{}"
    if isinstance(expr, Cast):
        if isinstance(expr.expr, (Const, VarRef, Call, Cast, EmptySetLit)):
            inner = render_expr(expr.expr)
        else:
            inner = f"({render_expr(expr.expr)})"
        return f"{inner}::{expr.target.name}"
    if isinstance(expr, Call):
        if expr.func == "minus" and len(expr.args) == 2:
            return f"{render_expr(expr.args[0])} - {render_expr(expr.args[1])}"
        return "%s(%s)" % (expr.func, ", ".join(render_expr(a) for a in expr.args))
    raise MMNetError(f"unknown expression node {expr!r}")


def render_guard(g) -> str:
    if g is None or isinstance(g, TrueGuard):
        return "true"
    if isinstance(g, Cmp):
        return f"{render_expr(g.left)} {g.op} {render_expr(g.right)}"
    if isinstance(g, PredCall):
        return "%s(%s)" % (g.name, ", ".join(render_expr(a) for a in g.args))
    if isinstance(g, Not):
        inner = render_guard(g.inner)
        if isinstance(g.inner, (And, Or)):
            inner = f"({inner})"
        return f"not {inner}"
    if isinstance(g, And):
        parts = []
        for side in (g.left, g.right):
            txt = render_guard(side)
            parts.append(f"({txt})" if isinstance(side, Or) else txt)
        return " and ".join(parts)
    if isinstance(g, Or):
        return f"{render_guard(g.left)} or {render_guard(g.right)}"
    raise MMNetError(f"unknown guard node {g!r}")

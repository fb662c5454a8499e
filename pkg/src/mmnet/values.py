"""Typed value universe, multiset algebra, casting, and the symbol registry.

Data types split into a plain domain (str, int, oid, L, I, rect, set types)
and a disjoint media domain (e.g. jpg). Tokens, guards and inscriptions work
over the plain domain; media values only ever flow through function terms.
Predicate and function symbols are interpreted through a write-once registry
held by a TypeDomain.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import (
    ArityMismatch,
    CastFailure,
    EmptySetAccess,
    MMNetError,
    NoCastRule,
    NotSubset,
    StoreRequired,
    TypeMismatch,
    UnknownFunction,
    UnknownPredicate,
)

# type kinds
STRING = "string"
INT = "int"
LITERAL = "literal"
IRI = "iri"
OID = "oid"
RECT = "rect"
SET = "set"
MEDIA = "media"

SCALAR_KINDS = (STRING, INT, LITERAL, IRI, OID, RECT)


@dataclass(frozen=True)
class DataType:
    name: str
    kind: str
    element: tuple["DataType", ...] | None = None  # set element component types
    media_format: str | None = None

    @property
    def is_media(self) -> bool:
        return self.kind == MEDIA

    def __repr__(self):
        return f"DataType({self.name})"


STR_T = DataType("str", STRING)
INT_T = DataType("int", INT)
OID_T = DataType("oid", OID)
LITERAL_T = DataType("L", LITERAL)
IRI_T = DataType("I", IRI)
RECT_T = DataType("rect", RECT)
JPG_T = DataType("jpg", MEDIA, media_format="jpg")


def set_type(element: tuple[DataType, ...]) -> DataType:
    for comp in element:
        if comp.kind in (SET, MEDIA):
            raise TypeMismatch(f"set element component cannot be {comp.name}")
    name = "set(%s)" % ", ".join(c.name for c in element)
    return DataType(name, SET, element=element)


RECT_RE = re.compile(
    r"^\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)\s*\.\.\s*\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)$"
)


def parse_rect(text: str) -> tuple[int, int, int, int]:
    m = RECT_RE.match(text.strip())
    if not m:
        raise CastFailure(f"not a rectangle: {text!r}")
    x1, y1, x2, y2 = (int(g) for g in m.groups())
    if x1 > x2 or y1 > y2:
        raise CastFailure(f"rectangle corners out of order: {text!r}")
    return (x1, y1, x2, y2)


def format_rect(box: tuple[int, int, int, int]) -> str:
    x1, y1, x2, y2 = box
    return f"({x1},{y1})..({x2},{y2})"


@dataclass(frozen=True)
class Value:
    """A typed constant. Payload shape is pinned by the type kind:

    string/literal/iri/oid -> str, int -> int, rect -> (x1,y1,x2,y2),
    set -> tuple of element tuples of Value (insertion-ordered, duplicate
    free), media -> an opaque hashable object from the media module.
    """

    type: DataType
    payload: object

    def __post_init__(self):
        k = self.type.kind
        p = self.payload
        if k in (STRING, LITERAL, IRI, OID):
            if not isinstance(p, str):
                raise TypeMismatch(f"{self.type.name} payload must be text")
        elif k == INT:
            if not isinstance(p, int) or isinstance(p, bool):
                raise TypeMismatch("int payload must be an integer")
        elif k == RECT:
            if not (isinstance(p, tuple) and len(p) == 4 and all(isinstance(c, int) for c in p)):
                raise TypeMismatch("rect payload must be a 4-tuple of ints")
            if p[0] > p[2] or p[1] > p[3]:
                raise TypeMismatch(f"rect corners out of order: {p}")
        elif k == SET:
            if not isinstance(p, tuple):
                raise TypeMismatch("set payload must be a tuple of element tuples")
            seen = set()
            for elem in p:
                if not (isinstance(elem, tuple) and len(elem) == len(self.type.element)):
                    raise TypeMismatch("set element arity mismatch")
                for comp, ct in zip(elem, self.type.element):
                    if not isinstance(comp, Value) or comp.type != ct:
                        raise TypeMismatch(
                            f"set element component must be {ct.name}")
                if elem in seen:
                    raise TypeMismatch("duplicate set element")
                seen.add(elem)

    def __repr__(self):
        return f"<{render_value(self)}>"


def mk_str(text: str) -> Value:
    return Value(STR_T, text)


def mk_int(n: int) -> Value:
    return Value(INT_T, n)


def mk_oid(text: str) -> Value:
    return Value(OID_T, text)


def mk_literal(text: str) -> Value:
    return Value(LITERAL_T, text)


def mk_iri(text: str) -> Value:
    return Value(IRI_T, text)


def mk_rect(x1, y1, x2, y2) -> Value:
    return Value(RECT_T, (x1, y1, x2, y2))


def mk_set(typ: DataType, elements=()) -> Value:
    return Value(typ, tuple(elements))


def render_value(v: Value) -> str:
    """Textual literal syntax: strings quoted, ints bare, oids @name,
    IRIs by name, rects (x1,y1)..(x2,y2), sets in braces."""
    k = v.type.kind
    if k == STRING:
        return '"%s"' % v.payload
    if k == LITERAL:
        return '"%s"::L' % v.payload
    if k == IRI:
        return str(v.payload)
    if k == INT:
        return str(v.payload)
    if k == OID:
        return "@%s" % v.payload
    if k == RECT:
        return format_rect(v.payload)
    if k == SET:
        elems = []
        for elem in v.payload:
            if len(elem) == 1:
                elems.append(render_value(elem[0]))
            else:
                elems.append("(%s)" % ", ".join(render_value(c) for c in elem))
        return "{%s}" % ", ".join(elems)
    return f"<{v.type.name}>"


def render_tuple(tup: tuple[Value, ...]) -> str:
    return "(%s)" % ", ".join(render_value(v) for v in tup)


# -- casting ------------------------------------------------------------------

def _to_literal(v: Value) -> str:
    k = v.type.kind
    if k in (STRING, LITERAL, IRI, OID):
        return v.payload
    if k == INT:
        return str(v.payload)
    if k == RECT:
        return format_rect(v.payload)
    raise NoCastRule(f"no conversion from {v.type.name}")


def _from_literal(text: str, target: DataType) -> object:
    k = target.kind
    if k in (STRING, LITERAL, IRI, OID):
        return text
    if k == INT:
        try:
            return int(text, 10)
        except ValueError:
            raise CastFailure(f"literal {text!r} is not an integer")
    if k == RECT:
        return parse_rect(text)
    raise NoCastRule(f"no conversion to {target.name}")


# kinds convertible with literal in either direction
_LITERAL_CONVERTIBLE = {STRING, OID, INT, RECT, IRI}


def cast(v: Value, target: DataType) -> Value:
    """The :: conversion. Registered pairs: identity, and string/oid/int/
    rect/iri paired with literal (lossless both ways)."""
    if v.type == target:
        return v
    src_k, dst_k = v.type.kind, target.kind
    if dst_k == LITERAL and src_k in _LITERAL_CONVERTIBLE:
        return Value(target, _to_literal(v))
    if src_k == LITERAL and dst_k in _LITERAL_CONVERTIBLE:
        return Value(target, _from_literal(v.payload, target))
    raise NoCastRule(f"no cast rule {v.type.name} -> {target.name}")


def can_cast(src: DataType, dst: DataType) -> bool:
    if src == dst:
        return True
    if dst.kind == LITERAL and src.kind in _LITERAL_CONVERTIBLE:
        return True
    return src.kind == LITERAL and dst.kind in _LITERAL_CONVERTIBLE


# -- multisets ----------------------------------------------------------------

class Multiset:
    """Immutable multiset of token tuples; counts strictly positive."""

    __slots__ = ("_entries",)

    def __init__(self, entries=None):
        items = {}
        if entries:
            for key, count in (entries.items() if isinstance(entries, dict) else entries):
                if count < 0:
                    raise MMNetError("negative multiset count")
                if count:
                    items[key] = items.get(key, 0) + count
        self._entries = items

    @classmethod
    def from_tokens(cls, tokens) -> "Multiset":
        return cls((tok, 1) for tok in tokens)

    def count(self, key) -> int:
        return self._entries.get(key, 0)

    def items(self):
        return self._entries.items()

    def tokens(self):
        """All tokens with multiplicity, in a deterministic order."""
        for key in sorted(self._entries, key=render_tuple):
            for _ in range(self._entries[key]):
                yield key

    def support(self):
        return self._entries.keys()

    def __len__(self):
        return sum(self._entries.values())

    def __bool__(self):
        return bool(self._entries)

    def __eq__(self, other):
        return isinstance(other, Multiset) and self._entries == other._entries

    def __hash__(self):
        return hash(frozenset(self._entries.items()))

    def __le__(self, other: "Multiset") -> bool:
        return all(other.count(k) >= n for k, n in self._entries.items())

    def __add__(self, other: "Multiset") -> "Multiset":
        merged = dict(self._entries)
        for k, n in other._entries.items():
            merged[k] = merged.get(k, 0) + n
        return Multiset(merged)

    def __sub__(self, other: "Multiset") -> "Multiset":
        if not other <= self:
            raise NotSubset("multiset difference requires containment")
        left = dict(self._entries)
        for k, n in other._entries.items():
            left[k] -= n
            if not left[k]:
                del left[k]
        return Multiset(left)

    def scale(self, k: int) -> "Multiset":
        if k < 0:
            raise MMNetError("negative scale factor")
        return Multiset({key: n * k for key, n in self._entries.items()} if k else {})

    def __repr__(self):
        inner = ", ".join(
            f"{render_tuple(k)}^{n}" for k, n in sorted(
                self._entries.items(), key=lambda kv: render_tuple(kv[0])))
        return "{%s}" % inner


EMPTY_MS = Multiset()


# -- symbol registry ----------------------------------------------------------

@dataclass(frozen=True)
class PredicateSig:
    name: str
    arg_types: tuple[DataType, ...] | None  # None: checked by the impl
    fn: object = field(compare=False)


@dataclass(frozen=True)
class FunctionSig:
    name: str
    arg_types: tuple[DataType, ...] | None
    result: DataType | None  # None: depends on arguments (set functions)
    fn: object = field(compare=False)
    needs_store: bool = False


class TypeDomain:
    """Finite set of data types plus the interpretation of predicate and
    function symbols. Write-once: freeze() before sharing."""

    def __init__(self):
        self.types: dict[str, DataType] = {}
        self.predicates: dict[str, PredicateSig] = {}
        self.functions: dict[str, FunctionSig] = {}
        self._frozen = False

    def _check_open(self):
        if self._frozen:
            raise MMNetError("type domain is frozen")

    def freeze(self):
        self._frozen = True
        return self

    def add_type(self, t: DataType) -> DataType:
        self._check_open()
        if t.name in self.types and self.types[t.name] != t:
            raise MMNetError(f"type {t.name} already registered differently")
        self.types[t.name] = t
        return t

    def type_named(self, name: str) -> DataType:
        if name not in self.types:
            raise TypeMismatch(f"unknown type {name!r}")
        return self.types[name]

    def set_type(self, element: tuple[DataType, ...]) -> DataType:
        t = set_type(element)
        if t.name not in self.types:
            if self._frozen:
                # set types are structural; minting one mutates nothing shared
                self.types = dict(self.types)
                self.types[t.name] = t
            else:
                self.types[t.name] = t
        return self.types[t.name]

    @property
    def media_types(self):
        return [t for t in self.types.values() if t.is_media]

    def add_predicate(self, name, arg_types, fn):
        self._check_open()
        self.predicates[name] = PredicateSig(name, arg_types, fn)

    def add_function(self, name, arg_types, result, fn, needs_store=False):
        self._check_open()
        self.functions[name] = FunctionSig(name, arg_types, result, fn, needs_store)

    def has_function(self, name) -> bool:
        return name in self.functions

    def eval_predicate(self, sym: str, args: list[Value]) -> bool:
        if sym not in self.predicates:
            raise UnknownPredicate(f"unknown predicate {sym!r}")
        sig = self.predicates[sym]
        if sig.arg_types is not None:
            if len(args) != len(sig.arg_types):
                raise ArityMismatch(f"{sym} expects {len(sig.arg_types)} arguments")
            for a, t in zip(args, sig.arg_types):
                if not isinstance(a, Value) or a.type != t:
                    raise TypeMismatch(f"{sym} argument must be {t.name}")
        return bool(sig.fn(*args))

    def eval_function(self, sym: str, args: list, object_store=None) -> object:
        if sym not in self.functions:
            raise UnknownFunction(f"unknown function {sym!r}")
        sig = self.functions[sym]
        if sig.arg_types is not None:
            if len(args) != len(sig.arg_types):
                raise ArityMismatch(f"{sym} expects {len(sig.arg_types)} arguments")
            for a, t in zip(args, sig.arg_types):
                if not isinstance(a, Value) or a.type != t:
                    raise TypeMismatch(f"{sym} argument must be {t.name}")
        if sig.needs_store:
            if object_store is None:
                raise StoreRequired(f"{sym} requires the object store")
            return sig.fn(object_store, *args)
        return sig.fn(*args)


# -- built-in scalar and set symbols -------------------------------------------

def _eq(a: Value, b: Value) -> bool:
    return a == b


def _require_set(v, sym):
    if not isinstance(v, Value) or v.type.kind != SET:
        raise TypeMismatch(f"{sym} expects a set value")
    return v


def _normalize_element(set_v: Value, parts, sym):
    """Accept getL-style results (single value or tuple) or spread components."""
    arity = len(set_v.type.element)
    if len(parts) == 1 and isinstance(parts[0], tuple):
        elem = parts[0]
    else:
        elem = tuple(parts)
    if len(elem) != arity:
        raise ArityMismatch(f"{sym}: element arity {len(elem)} != {arity}")
    for comp, ct in zip(elem, set_v.type.element):
        if not isinstance(comp, Value) or comp.type != ct:
            raise TypeMismatch(f"{sym}: element component must be {ct.name}")
    return elem


def _ins(set_v, *parts):
    set_v = _require_set(set_v, "ins")
    elem = _normalize_element(set_v, parts, "ins")
    if elem in set_v.payload:
        return set_v
    return Value(set_v.type, set_v.payload + (elem,))


def _get_last(set_v):
    set_v = _require_set(set_v, "getL")
    if not set_v.payload:
        raise EmptySetAccess("getL on empty set")
    elem = set_v.payload[-1]
    return elem[0] if len(elem) == 1 else elem


def _rem(set_v, *parts):
    set_v = _require_set(set_v, "rem")
    if not set_v.payload:
        raise EmptySetAccess("rem on empty set")
    elem = _normalize_element(set_v, parts, "rem")
    return Value(set_v.type, tuple(e for e in set_v.payload if e != elem))


def _empty(set_v):
    _require_set(set_v, "empty")
    return not set_v.payload


def standard_domain(extra_media: tuple[DataType, ...] = ()) -> TypeDomain:
    """Default type domain: scalar types, the jpg media type, equality and
    order predicates per type, succ/minus arithmetic and the set functions.
    Media functions are registered by the media module."""
    dom = TypeDomain()
    for t in (STR_T, INT_T, OID_T, LITERAL_T, IRI_T, RECT_T, JPG_T, *extra_media):
        dom.add_type(t)

    dom.add_predicate("=_s", (STR_T, STR_T), _eq)
    dom.add_predicate("=_int", (INT_T, INT_T), _eq)
    dom.add_predicate("<_int", (INT_T, INT_T), lambda a, b: a.payload < b.payload)
    dom.add_predicate("=_oid", (OID_T, OID_T), _eq)
    dom.add_predicate("=_L", (LITERAL_T, LITERAL_T), _eq)
    dom.add_predicate("=_I", (IRI_T, IRI_T), _eq)
    dom.add_predicate("=_rect", (RECT_T, RECT_T), _eq)
    dom.add_predicate("empty", None, _empty)

    dom.add_function("succ", (INT_T,), INT_T, lambda a: mk_int(a.payload + 1))
    dom.add_function("minus", (INT_T, INT_T), INT_T,
                     lambda a, b: mk_int(a.payload - b.payload))
    dom.add_function("ins", None, None, _ins)
    dom.add_function("getL", None, None, _get_last)
    dom.add_function("rem", None, None, _rem)

    from . import media  # deferred: media registers its function symbols
    media.register_media_functions(dom)
    return dom.freeze()


# equality predicate per scalar kind, used by the generic "=" guard operator
EQUALITY_BY_KIND = {
    STRING: "=_s",
    INT: "=_int",
    OID: "=_oid",
    LITERAL: "=_L",
    IRI: "=_I",
    RECT: "=_rect",
}

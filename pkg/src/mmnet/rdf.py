"""Ground RDF graph with insert/delete deltas and an N-Triples-subset format.

No blank nodes anywhere. Subjects and objects may be IRIs or literals
(identifiers are routinely cast to literals by actions); predicates must be
IRIs. Graphs are immutable snapshots indexed by subject, predicate and
(subject, predicate) for pattern matching.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import MMNetError, ParseError
from .values import IRI_T, LITERAL_T, Value, mk_iri, mk_literal

MMDB_PREFIX = "mmdb"
MMDB_BASE = "http://mmdb.example/ns#"
DEFAULT_PREFIXES = {MMDB_PREFIX: MMDB_BASE}

ADDRESS_PRED = "mmdb:address"


@dataclass(frozen=True, order=True)
class Term:
    kind: str  # "iri" | "literal"
    text: str

    def __post_init__(self):
        if self.kind not in ("iri", "literal"):
            raise MMNetError(f"bad term kind {self.kind!r}")

    def __repr__(self):
        return format_term(self)


def iri(text: str) -> Term:
    return Term("iri", text)


def literal(text: str) -> Term:
    return Term("literal", text)


@dataclass(frozen=True, order=True)
class Triple:
    s: Term
    p: Term
    o: Term

    def __post_init__(self):
        if self.p.kind != "iri":
            raise MMNetError(f"predicate must be an IRI, got {self.p!r}")

    def __repr__(self):
        return f"({self.s!r} {self.p!r} {self.o!r})"


def term_to_value(t: Term) -> Value:
    return mk_iri(t.text) if t.kind == "iri" else mk_literal(t.text)


def value_to_term(v: Value) -> Term:
    if v.type == IRI_T:
        return iri(v.payload)
    if v.type == LITERAL_T:
        return literal(v.payload)
    raise MMNetError(f"RDF term positions take L or I values, got {v.type.name}")


class MetadataGraph:
    """Immutable set of ground triples."""

    __slots__ = ("_triples", "_by_s", "_by_p", "_by_sp")

    def __init__(self, triples=()):
        self._triples = frozenset(triples)
        by_s, by_p, by_sp = {}, {}, {}
        for t in self._triples:
            by_s.setdefault(t.s, set()).add(t)
            by_p.setdefault(t.p, set()).add(t)
            by_sp.setdefault((t.s, t.p), set()).add(t)
        self._by_s = by_s
        self._by_p = by_p
        self._by_sp = by_sp

    @property
    def triples(self) -> frozenset:
        return self._triples

    def insert(self, triples) -> "MetadataGraph":
        new = self._triples | set(triples)
        return self if new == self._triples else MetadataGraph(new)

    def delete(self, triples) -> "MetadataGraph":
        new = self._triples - set(triples)
        return self if new == self._triples else MetadataGraph(new)

    def match(self, s: Term | None = None, p: Term | None = None,
              o: Term | None = None):
        """Triples matching the given constant positions (None = wildcard)."""
        if s is not None and p is not None:
            cand = self._by_sp.get((s, p), ())
        elif s is not None:
            cand = self._by_s.get(s, ())
        elif p is not None:
            cand = self._by_p.get(p, ())
        else:
            cand = self._triples
        for t in cand:
            if o is not None and t.o != o:
                continue
            yield t

    def terms(self):
        out = set()
        for t in self._triples:
            out.add(t.s)
            out.add(t.p)
            out.add(t.o)
        return out

    def __contains__(self, t: Triple) -> bool:
        return t in self._triples

    def __len__(self):
        return len(self._triples)

    def __iter__(self):
        return iter(self._triples)

    def __eq__(self, other):
        return isinstance(other, MetadataGraph) and self._triples == other._triples

    def __hash__(self):
        return hash(self._triples)

    def __repr__(self):
        return f"MetadataGraph({len(self._triples)} triples)"


EMPTY_GRAPH = MetadataGraph()


# -- text format ----------------------------------------------------------------

_PREFIXED_RE = re.compile(r"^([A-Za-z_][\w-]*):([A-Za-z_][\w.-]*)$")


def compact_iri(text: str, prefixes=None) -> str:
    """Canonical IRI text: prefixed form whenever a declared prefix matches."""
    table = dict(DEFAULT_PREFIXES)
    if prefixes:
        table.update(prefixes)
    for pfx, base in table.items():
        if text.startswith(base):
            local = text[len(base):]
            if re.match(r"^[A-Za-z_][\w.-]*$", local):
                return f"{pfx}:{local}"
    return text


def parse_term(token: str, prefixes=None) -> Term:
    token = token.strip()
    if token.startswith('"') and token.endswith('"') and len(token) >= 2:
        return literal(token[1:-1])
    if token.startswith("<") and token.endswith(">"):
        return iri(compact_iri(token[1:-1], prefixes))
    if _PREFIXED_RE.match(token):
        return iri(token)
    raise ParseError(f"cannot parse RDF term {token!r}")


def format_term(t: Term) -> str:
    if t.kind == "literal":
        return '"%s"' % t.text
    if _PREFIXED_RE.match(t.text):
        return t.text
    return "<%s>" % t.text


_TOKEN_RE = re.compile(r'"[^"]*"|<[^>]*>|[^\s]+')


def _strip_comment(line: str) -> str:
    """Cut at the first # that is outside quotes and angle brackets."""
    in_quote = in_angle = False
    for i, ch in enumerate(line):
        if ch == '"' and not in_angle:
            in_quote = not in_quote
        elif ch == "<" and not in_quote:
            in_angle = True
        elif ch == ">" and not in_quote:
            in_angle = False
        elif ch == "#" and not in_quote and not in_angle:
            return line[:i]
    return line


def parse_ntriples(text: str) -> MetadataGraph:
    """One `subject predicate object .` statement per line; `@prefix` lines
    declare the prefix table; `#` starts a comment. mmdb: is pre-declared."""
    prefixes = dict(DEFAULT_PREFIXES)
    triples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("@prefix"):
            m = re.match(r"^@prefix\s+([A-Za-z_][\w-]*):\s*<([^>]*)>\s*\.?$", line)
            if not m:
                raise ParseError("malformed @prefix line", lineno, 1)
            prefixes[m.group(1)] = m.group(2)
            continue
        if not line.endswith("."):
            raise ParseError("statement must end with '.'", lineno, len(raw))
        tokens = _TOKEN_RE.findall(line[:-1])
        if len(tokens) != 3:
            raise ParseError(
                f"expected 3 terms per statement, got {len(tokens)}", lineno, 1)
        try:
            s, p, o = (parse_term(tok, prefixes) for tok in tokens)
            triples.append(Triple(s, p, o))
        except MMNetError as exc:
            raise ParseError(str(exc), lineno, 1)
    return MetadataGraph(triples)


def serialize_ntriples(g: MetadataGraph) -> str:
    lines = [f"{format_term(t.s)} {format_term(t.p)} {format_term(t.o)} ."
             for t in g]
    return "\n".join(sorted(lines)) + ("\n" if lines else "")

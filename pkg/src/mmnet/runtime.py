"""Execution semantics: snapshots, binding enumeration, firing, exploration.

A snapshot pairs the storage instance with a marking; view-place markings are
always the answers of their queries against the current metadata, recomputed
after every firing. Fresh (`nu_`) variables receive deterministically minted
values absent from the whole snapshot and from everything minted earlier on
the same run, so traces replay bit-for-bit.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .actions import StorageInstance, apply_action, instantiate
from .errors import (
    MMNetError,
    NoSupply,
    NotEnabled,
    TypeMismatch,
    UnknownPlace,
)
from .media import format_rect
from .net import MMNet
from .rdf import format_term, term_to_value
from .sparql import answer
from .terms import VarRef, eval_expr, eval_guard
from .values import (
    EMPTY_MS,
    INT_T,
    IRI_T,
    LITERAL_T,
    OID_T,
    STR_T,
    DataType,
    Multiset,
    Value,
    mk_int,
    parse_rect,
    render_tuple,
    render_value,
)

FRESH_COUNTER_START = 1


# -- snapshots ------------------------------------------------------------------

class Snapshot:
    """One global state: storage instance, marking, and the ledger of values
    minted for fresh variables along the run."""

    __slots__ = ("storage", "marking", "minted", "_key")

    def __init__(self, storage: StorageInstance, marking: dict, minted=()):
        self.storage = storage
        self.marking = dict(marking)
        self.minted = tuple(minted)
        self._key = None

    def marking_of(self, place: str) -> Multiset:
        return self.marking.get(place, EMPTY_MS)

    def key(self) -> str:
        if self._key is None:
            parts = []
            for p in sorted(self.marking):
                parts.append(f"m {p} {self.marking[p]!r}")
            for t in sorted(self.storage.metadata):
                parts.append(f"t {format_term(t.s)} {format_term(t.p)} "
                             f"{format_term(t.o)}")
            for addr, img in sorted(self.storage.objects.items()):
                parts.append(f"o {addr} {_image_text(img)}")
            parts.append("minted " + ",".join(self.minted))
            self._key = "\n".join(parts)
        return self._key

    def __eq__(self, other):
        return isinstance(other, Snapshot) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Snapshot({marking_summary(self)})"


def _image_text(img) -> str:
    regions = ";".join(f"{r.tag}@{format_rect(r.box)}" for r in img.regions)
    decs = ";".join(f"{d.shape}/{d.color}@{format_rect(d.box)}"
                    for d in img.decorations)
    off = f"{img.source_offset}" if img.source_offset else "-"
    return f"{img.width}x{img.height}[{regions}][{decs}]{off}"


def make_snapshot(net: MMNet, storage: StorageInstance, control_marking: dict,
                  minted=()) -> Snapshot:
    """Assemble a snapshot: control places as given (absent means empty),
    view places recomputed from their queries, answer tuples with
    multiplicity one."""
    marking = {}
    for name, place in net.places.items():
        if place.is_view:
            marking[name] = _view_marking(place, storage)
        else:
            marking[name] = control_marking.get(name, EMPTY_MS)
    for name in control_marking:
        if name not in net.places:
            raise UnknownPlace(f"marking references unknown place {name!r}")
    return Snapshot(storage, marking, minted)


def _view_marking(place, storage: StorageInstance) -> Multiset:
    rows = answer(storage.metadata, place.query)
    tokens = []
    for row in rows:
        token = []
        for term, comp in zip(row, place.color):
            val = term_to_value(term)
            if val.type != comp:
                raise TypeMismatch(
                    f"view {place.name}: query answer term {term!r} has kind "
                    f"{val.type.name}, color says {comp.name}")
            token.append(val)
        tokens.append(tuple(token))
    return Multiset.from_tokens(tokens)


def values_of(snap: Snapshot) -> set[str]:
    """All constants occurring in the marking and the storage instance,
    as comparable texts (the freshness reference set)."""
    out: set[str] = set()

    def add_value(v: Value):
        k = v.type.kind
        if k == "int":
            out.add(str(v.payload))
        elif k == "rect":
            out.add(format_rect(v.payload))
        elif k == "set":
            for elem in v.payload:
                for comp in elem:
                    add_value(comp)
        elif k == "media":
            pass
        else:
            out.add(v.payload)

    for ms in snap.marking.values():
        for tok, _ in ms.items():
            for v in tok:
                add_value(v)
    for t in snap.storage.metadata:
        out.update((t.s.text, t.p.text, t.o.text))
    for addr, img in snap.storage.objects.items():
        out.add(addr)
        for r in img.regions:
            out.add(r.tag)
            out.add(format_rect(r.box))
        for d in img.decorations:
            out.add(d.shape)
            out.add(d.color)
            out.add(format_rect(d.box))
    return out


def marking_summary(snap: Snapshot) -> str:
    parts = [f"{p}={len(ms)}" for p, ms in sorted(snap.marking.items()) if ms]
    parts.append(f"|M|={len(snap.storage.metadata)}")
    parts.append(f"|O|={len(snap.storage.objects)}")
    return " ".join(parts)


# -- bindings ----------------------------------------------------------------------

@dataclass(frozen=True)
class Binding:
    items: tuple  # ((name, Value), ...) sorted by name

    @classmethod
    def from_env(cls, env: dict) -> "Binding":
        return cls(tuple(sorted(env.items())))

    def env(self) -> dict:
        return dict(self.items)

    def render(self) -> str:
        return " ".join(f"{k}={render_value(v)}" for k, v in self.items)

    def __repr__(self):
        return f"Binding({self.render()})"


class Supply:
    """Finite per-variable value lists for external-input variables.
    alternatives() returns the list rotated by the variable's consumption
    counter; advance() implements the round-robin."""

    def __init__(self, lists: dict | None = None):
        self.lists = {k: list(v) for k, v in (lists or {}).items()}
        self.offsets: dict[str, int] = {}

    def merged_under(self, defaults: dict) -> "Supply":
        merged = {k: list(v) for k, v in defaults.items()}
        merged.update(self.lists)
        return Supply(merged)

    def has(self, var: str) -> bool:
        return bool(self.lists.get(var))

    def alternatives(self, var: str) -> list[str]:
        if not self.has(var):
            raise NoSupply(f"external-input variable {var!r} has no supply")
        values = self.lists[var]
        k = self.offsets.get(var, 0) % len(values)
        return values[k:] + values[:k]

    def advance(self, var: str):
        self.offsets[var] = self.offsets.get(var, 0) + 1


def value_from_text(text: str, typ: DataType) -> Value:
    if typ == STR_T or typ == LITERAL_T or typ == IRI_T:
        return Value(typ, text)
    if typ == OID_T:
        return Value(typ, text[1:] if text.startswith("@") else text)
    if typ == INT_T:
        return mk_int(int(text))
    if typ.kind == "rect":
        return Value(typ, parse_rect(text))
    raise TypeMismatch(f"cannot read a {typ.name} value from text {text!r}")


def _value_text(v: Value) -> str:
    if v.type.kind == "int":
        return str(v.payload)
    if v.type.kind == "rect":
        return format_rect(v.payload)
    return str(v.payload)


def mint_fresh(typ: DataType, forbidden: set[str], counters: dict) -> Value:
    """Deterministic fresh values: `img-<n>` for oids, `ν:<kind>:<n>`
    otherwise; the counter skips forward over collisions."""
    n = counters.get(typ.name, FRESH_COUNTER_START)
    while True:
        if typ == OID_T:
            text = f"img-{n}"
            candidate = Value(OID_T, text)
        elif typ == INT_T:
            text = str(n)
            candidate = mk_int(n)
        elif typ.kind in ("string", "literal", "iri"):
            text = f"ν:{typ.name}:{n}"
            candidate = Value(typ, text)
        else:
            raise TypeMismatch(f"cannot mint fresh values of type {typ.name}")
        n += 1
        if text not in forbidden:
            counters[typ.name] = n
            return candidate


def _unify(env: dict, items, token) -> dict | None:
    if len(items) != len(token):
        return None
    ext = dict(env)
    for item, val in zip(items, token):
        name = item.name  # validated: input inscriptions are variables
        if name in ext:
            if ext[name] != val:
                return None
        else:
            ext[name] = val
    return ext


def enabled_bindings(net: MMNet, t: str, snap: Snapshot,
                     supply: Supply | None = None) -> list[Binding]:
    """Every binding enabling t in the snapshot: token selections satisfying
    multiset containment per place, view rows matched by read arcs, guard
    true, external-input variables drawn from the supply and fresh variables
    minted off-snapshot. Complete and deterministically ordered."""
    tr = net.transitions[t]
    domain = net.domain
    store = snap.storage.objects

    # consuming arcs: per-place usage must stay within the marking
    states = [({}, {})]
    for p, ins in net.input_arcs(t):
        ms = snap.marking_of(p)
        new_states = []
        for env, used in states:
            for tok in sorted(ms.support(), key=render_tuple):
                taken = used.get((p, tok), 0)
                if taken + 1 > ms.count(tok):
                    continue
                ext = _unify(env, ins.items, tok)
                if ext is None:
                    continue
                u2 = dict(used)
                u2[(p, tok)] = taken + 1
                new_states.append((ext, u2))
        states = new_states
        if not states:
            return []

    envs = [env for env, _ in states]
    for p, ins in net.read_arcs(t):
        ms = snap.marking_of(p)
        new_envs = []
        for env in envs:
            for tok in sorted(ms.support(), key=render_tuple):
                ext = _unify(env, ins.items, tok)
                if ext is not None:
                    new_envs.append(ext)
        envs = new_envs
        if not envs:
            return []

    envs = [env for env in envs
            if eval_guard(tr.guard, env, domain, store)]
    if not envs:
        return []

    var_types = net.var_types(t)
    ext_vars = sorted(net.external_vars(t))
    for v in ext_vars:
        if supply is None or not supply.has(v):
            raise NoSupply(f"external-input variable {v!r} of transition "
                           f"{t} has no supply")

    base = values_of(snap) | set(snap.minted)
    out = []
    seen = set()
    for env in envs:
        alternative_lists = [
            [value_from_text(text, var_types[v]) for text in supply.alternatives(v)]
            for v in ext_vars
        ]
        for combo in itertools.product(*alternative_lists) if ext_vars else [()]:
            env2 = dict(env)
            supplied_texts = set()
            for v, val in zip(ext_vars, combo):
                env2[v] = val
                supplied_texts.add(_value_text(val))
            counters = {}
            forbidden = base | supplied_texts
            ok = True
            for v in sorted(net.fresh_out_vars(t)):
                typ = var_types.get(v)
                if typ is None:
                    raise TypeMismatch(
                        f"fresh variable {v!r} of {t} has no inferable type")
                try:
                    val = mint_fresh(typ, forbidden, counters)
                except MMNetError:
                    ok = False
                    break
                env2[v] = val
                forbidden.add(_value_text(val))
            if not ok:
                continue
            binding = Binding.from_env(env2)
            if binding not in seen:
                seen.add(binding)
                out.append(binding)
    return out


# -- firing -------------------------------------------------------------------------

def _ground_input(net, t, env):
    """Per control place, the multiset the binding consumes."""
    per_place: dict[str, list] = {}
    for p, ins in net.input_arcs(t):
        tok = tuple(env[item.name] for item in ins.items)
        per_place.setdefault(p, []).append(tok)
    return {p: Multiset.from_tokens(toks) for p, toks in per_place.items()}


def _eval_inscription(net, ins, env, store, place):
    domain = net.domain
    out = []
    for item in ins.items:
        got = eval_expr(item, env, domain, store)
        if isinstance(got, tuple):
            out.extend(got)
        else:
            out.append(got)
    color = place.color
    if len(out) != len(color):
        raise TypeMismatch(
            f"inscription into {place.name} yields {len(out)} components, "
            f"color has {len(color)}")
    for v, comp in zip(out, color):
        if v.type != comp:
            raise TypeMismatch(
                f"inscription into {place.name}: component {render_value(v)} "
                f"is {v.type.name}, color says {comp.name}")
    return tuple(out)


def check_enabled(net: MMNet, t: str, binding: Binding, snap: Snapshot) -> None:
    """Raise NotEnabled unless the binding satisfies token containment,
    read-arc membership, the guard, and ν-freshness in this snapshot."""
    env = binding.env()
    try:
        for p, need in _ground_input(net, t, env).items():
            if not need <= snap.marking_of(p):
                raise NotEnabled(f"tokens {need!r} not available in {p}")
        for p, ins in net.read_arcs(t):
            tok = tuple(env[item.name] for item in ins.items)
            if snap.marking_of(p).count(tok) < 1:
                raise NotEnabled(f"view row {render_tuple(tok)} absent from {p}")
        if not eval_guard(net.transitions[t].guard, env, net.domain,
                          snap.storage.objects):
            raise NotEnabled(f"guard of {t} is false under the binding")
        taboo = values_of(snap) | set(snap.minted)
        fresh_texts = set()
        for v in net.fresh_out_vars(t):
            if v not in env:
                raise NotEnabled(f"fresh variable {v!r} unbound")
            text = _value_text(env[v])
            if text in taboo or text in fresh_texts:
                raise NotEnabled(f"fresh value {text!r} is not fresh")
            fresh_texts.add(text)
    except KeyError as exc:
        raise NotEnabled(f"binding does not cover variable {exc}")


def fire(net: MMNet, t: str, binding: Binding, snap: Snapshot,
         check: bool = True) -> Snapshot:
    """One firing: marking gets m - σ(in) + σ(out) on control places with
    output terms evaluated against the pre-firing storage, the action applies
    to the storage, and view places re-derive from the new metadata."""
    if check:
        check_enabled(net, t, binding, snap)
    env = binding.env()
    tr = net.transitions[t]
    store0 = snap.storage.objects

    control = {p: ms for p, ms in snap.marking.items()
               if not net.places[p].is_view}
    for p, need in _ground_input(net, t, env).items():
        control[p] = control[p] - need
    for p, ins in net.output_arcs(t):
        tok = _eval_inscription(net, ins, env, store0, net.places[p])
        control[p] = control.get(p, EMPTY_MS) + Multiset.from_tokens([tok])

    storage = snap.storage
    if tr.action:
        action = net.actions[tr.action]
        sigma = {}
        for arg, param in zip(tr.action_args, action.params):
            got = eval_expr(arg, env, net.domain, store0)
            if isinstance(got, tuple):
                if len(got) != 1:
                    raise TypeMismatch(
                        f"action argument for {param.name} is a "
                        f"{len(got)}-tuple")
                got = got[0]
            sigma[param.name] = got
        inst = instantiate(action, sigma, net.domain, store0)
        storage = apply_action(inst, storage)

    minted = list(snap.minted)
    for v in sorted(net.fresh_out_vars(t)):
        minted.append(_value_text(env[v]))
    return make_snapshot(net, storage, control, minted)


# -- runs and traces -----------------------------------------------------------------

@dataclass(frozen=True)
class TraceStep:
    index: int
    transition: str
    binding: Binding
    summary: str

    def render(self) -> str:
        return (f"{self.index}. {self.transition} "
                f"[{self.binding.render()}] |m|: {self.summary}")


def initial_snapshot(net: MMNet, storage: StorageInstance | None = None,
                     marking_overrides: dict | None = None) -> Snapshot:
    from .rdf import EMPTY_GRAPH
    from .media import EMPTY_STORE
    storage = storage or StorageInstance(EMPTY_GRAPH, EMPTY_STORE)
    control = net.marking_from_init()
    for p, tokens in (marking_overrides or {}).items():
        control[p] = (tokens if isinstance(tokens, Multiset)
                      else Multiset.from_tokens(tokens))
    return make_snapshot(net, storage, control)


def run_to_quiescence(net: MMNet, snap: Snapshot, supply: Supply | None = None,
                      max_steps: int = 1000):
    """Deterministic auto-run: at each step fire the least (transition,
    binding); supply alternatives rank in round-robin order. Returns the
    trace, the final snapshot, and notes about transitions lacking supply."""
    supply = supply or Supply()
    trace: list[TraceStep] = []
    notes: list[str] = []
    no_supply_reported = set()
    step = 0
    while step < max_steps:
        choice = None
        for t in sorted(net.transitions):
            try:
                bindings = enabled_bindings(net, t, snap, supply)
            except NoSupply as exc:
                if t not in no_supply_reported:
                    notes.append(f"transition {t} not auto-firable: {exc}")
                    no_supply_reported.add(t)
                continue
            if bindings:
                choice = (t, bindings[0])
                break
        if choice is None:
            break
        t, binding = choice
        snap = fire(net, t, binding, snap, check=False)
        for v in net.external_vars(t):
            supply.advance(v)
        step += 1
        trace.append(TraceStep(step, t, binding, marking_summary(snap)))
    return trace, snap, notes


def replay_trace(net: MMNet, snap: Snapshot, steps) -> Snapshot:
    """Re-fire a recorded trace; every step is re-checked for enablement."""
    for st in steps:
        snap = fire(net, st.transition, st.binding, snap, check=True)
    return snap


# -- exploration ----------------------------------------------------------------------

@dataclass
class Bounds:
    max_depth: int = 60
    max_states: int = 20000
    max_tokens_per_place: int = 100
    max_triples: int = 2000
    max_objects: int = 200


@dataclass
class LTS:
    initial: str
    states: dict
    edges: list  # (source key, transition, Binding, target key)
    depths: dict
    truncations: list = field(default_factory=list)
    canonical: bool = False
    notes: list = field(default_factory=list)

    @property
    def truncated(self) -> bool:
        return bool(self.truncations)

    def to_dot(self) -> str:
        ids = {k: f"s{i}" for i, k in enumerate(sorted(self.states))}
        lines = ["digraph lts {", "  rankdir=LR;", "  node [shape=box];"]
        for k in sorted(self.states):
            label = marking_summary(self.states[k]).replace('"', "'")
            style = ', style=bold' if k == self.initial else ""
            lines.append(f'  {ids[k]} [label="{label}"{style}];')
        for src, t, _binding, dst in self.edges:
            lines.append(f'  {ids[src]} -> {ids[dst]} [label="{t}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _within_resource_bounds(net, snap: Snapshot, bounds: Bounds):
    for p, ms in snap.marking.items():
        if not net.places[p].is_view and len(ms) > bounds.max_tokens_per_place:
            return f"place {p} exceeds {bounds.max_tokens_per_place} tokens"
    if len(snap.storage.metadata) > bounds.max_triples:
        return f"metadata exceeds {bounds.max_triples} triples"
    if len(snap.storage.objects) > bounds.max_objects:
        return f"object store exceeds {bounds.max_objects} objects"
    return None


def _successors(net, snap: Snapshot, supply):
    out = []
    missing = []
    for t in sorted(net.transitions):
        try:
            for binding in enabled_bindings(net, t, snap, supply):
                out.append((t, binding, fire(net, t, binding, snap, check=False)))
        except NoSupply as exc:
            missing.append(str(exc))
    return out, missing


def explore(net: MMNet, snap: Snapshot, bounds: Bounds | None = None,
            canonicalize: bool = False, parallel: bool = False,
            supply: Supply | None = None) -> LTS:
    """Breadth-first reachable fragment within bounds. With canonicalize on,
    states equal up to a consistent renaming of minted fresh values collapse.
    Parallel evaluation of the frontier merges deterministically, so the
    result is identical to the sequential one."""
    bounds = bounds or Bounds()
    supply = supply or Supply()
    keyfun = canonical_key if canonicalize else (lambda s: s.key())

    k0 = keyfun(snap)
    states = {k0: snap}
    depths = {k0: 0}
    edges = []
    truncations = []
    notes = []
    frontier = [k0]
    depth = 0

    def expand(keys):
        snaps = [states[k] for k in keys]
        if parallel and len(snaps) > 1:
            with ThreadPoolExecutor(max_workers=4) as pool:
                return list(pool.map(lambda s: _successors(net, s, supply), snaps))
        return [_successors(net, s, supply) for s in snaps]

    while frontier:
        if depth >= bounds.max_depth:
            truncations.append(f"depth bound {bounds.max_depth} reached with "
                               f"{len(frontier)} unexpanded states")
            break
        next_frontier = []
        for key, (succs, missing) in zip(frontier, expand(frontier)):
            for m in missing:
                if m not in notes:
                    notes.append(m)
            for t, binding, s2 in succs:
                reason = _within_resource_bounds(net, s2, bounds)
                if reason:
                    if reason not in truncations:
                        truncations.append(reason)
                    continue
                k2 = keyfun(s2)
                if k2 not in states:
                    if len(states) >= bounds.max_states:
                        msg = f"state bound {bounds.max_states} reached"
                        if msg not in truncations:
                            truncations.append(msg)
                        continue
                    states[k2] = s2
                    depths[k2] = depth + 1
                    next_frontier.append(k2)
                edges.append((key, t, binding, k2))
        frontier = next_frontier
        depth += 1

    return LTS(k0, states, edges, depths, truncations, canonicalize, notes)


@dataclass
class ReachVerdict:
    status: str  # "reachable" | "not-reachable-within-bounds" | "truncated"
    witness: list | None = None  # [(transition, Binding)]
    states_explored: int = 0

    @property
    def reachable(self) -> bool:
        return self.status == "reachable"


def reachable_nonempty(net: MMNet, snap: Snapshot, place: str,
                       bounds: Bounds | None = None,
                       supply: Supply | None = None) -> ReachVerdict:
    """Search for a snapshot with a nonempty marking of the place; the
    witness is the firing sequence with its bindings."""
    net.place(place)
    bounds = bounds or Bounds()
    supply = supply or Supply()
    if snap.marking_of(place):
        return ReachVerdict("reachable", [], 1)

    k0 = snap.key()
    states = {k0: snap}
    parents = {k0: None}
    depths = {k0: 0}
    frontier = [k0]
    truncated = False
    depth = 0
    while frontier:
        if depth >= bounds.max_depth:
            truncated = True
            break
        next_frontier = []
        for key in frontier:
            succs, _missing = _successors(net, states[key], supply)
            for t, binding, s2 in succs:
                if _within_resource_bounds(net, s2, bounds):
                    truncated = True
                    continue
                k2 = s2.key()
                if k2 in states:
                    continue
                if len(states) >= bounds.max_states:
                    truncated = True
                    continue
                states[k2] = s2
                parents[k2] = (key, t, binding)
                depths[k2] = depth + 1
                if s2.marking_of(place):
                    witness = []
                    cur = k2
                    while parents[cur] is not None:
                        prev, tt, bb = parents[cur]
                        witness.append((tt, bb))
                        cur = prev
                    witness.reverse()
                    return ReachVerdict("reachable", witness, len(states))
                next_frontier.append(k2)
        frontier = next_frontier
        depth += 1
    status = "truncated" if truncated else "not-reachable-within-bounds"
    return ReachVerdict(status, None, len(states))


# -- canonicalization -----------------------------------------------------------------

def _masked_value(v: Value, mapping: dict, slots: list) -> str:
    k = v.type.kind
    if k == "set":
        inner = []
        for elem in v.payload:
            inner.append("(%s)" % ",".join(
                _masked_value(c, mapping, slots) for c in elem))
        return "{%s}" % ",".join(inner)
    text = _value_text(v)
    if text in mapping:
        slots.append(text)
        return f"<{mapping[text]}>"
    return render_value(v)


def _masked_text(text: str, mapping: dict, slots: list) -> str:
    if text in mapping:
        slots.append(text)
        return f"<{mapping[text]}>"
    return text


def _canonical_entries(snap: Snapshot, mapping: dict):
    """(rendered entry, minted values it touches in occurrence order)."""
    entries = []
    for p in sorted(snap.marking):
        for tok, n in snap.marking[p].items():
            slots: list = []
            body = ",".join(_masked_value(v, mapping, slots) for v in tok)
            entries.append((f"m {p} ({body}) x{n}", slots))
    for t in snap.storage.metadata:
        slots = []
        body = " ".join((t.s.kind[0] + _masked_text(t.s.text, mapping, slots),
                         _masked_text(t.p.text, mapping, slots),
                         t.o.kind[0] + _masked_text(t.o.text, mapping, slots)))
        entries.append((f"t {body}", slots))
    for addr, img in snap.storage.objects.items():
        slots = []
        body = _masked_text(addr, mapping, slots) + " " + _image_text(img)
        entries.append((f"o {body}", slots))
    return entries


def canonical_key(snap: Snapshot) -> str:
    """Snapshot key invariant under consistent renaming of minted values.

    Each minted value gets a structural signature: the multiset of masked
    entries it occurs in, with every minted value rendered by its current
    signature. Refining to a fixpoint separates values by their role (the
    objects they address, the triples naming them); the final names ν0, ν1,
    ... follow the signature order, so renaming-equivalent snapshots
    serialize identically. Values the refinement cannot tell apart keep
    their minting order, which can only keep isomorphic states apart, never
    merge distinct ones."""
    minted = list(dict.fromkeys(snap.minted))
    if not minted:
        return snap.key()
    ledger_pos = {v: i for i, v in enumerate(minted)}
    sig = {v: "0" for v in minted}
    for _ in range(len(minted) + 2):
        entries = _canonical_entries(snap, sig)
        occ = {v: [] for v in minted}
        for text, slots in entries:
            for i, v in enumerate(slots):
                occ[v].append(f"{text}#{i}")
        raw = {v: "|".join(sorted(occ[v])) for v in minted}
        uniq = {s: str(j) for j, s in enumerate(sorted(set(raw.values())))}
        new_sig = {v: uniq[raw[v]] for v in minted}
        if new_sig == sig:
            break
        sig = new_sig
    order = sorted(minted, key=lambda v: (sig[v], ledger_pos[v]))
    mapping = {v: f"ν{i}" for i, v in enumerate(order)}
    entries = sorted(text for text, _ in _canonical_entries(snap, mapping))
    entries.append(f"minted {len(snap.minted)}")
    return "\n".join(entries)

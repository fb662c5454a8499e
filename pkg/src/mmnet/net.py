"""Net structure: places, transitions, flows, and static validation.

Places are control places (token-holding) or view places (marking derived
from a query over the metadata store, connected through non-consuming read
arcs only). Input arcs carry variable-only inscriptions; output arcs may
carry variables, constants and terms, including fresh (`nu_`) variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .actions import ActionDef
from .errors import UnknownPlace, UnknownTransition
from .sparql import Query
from .terms import (
    Call,
    Cast,
    Cmp,
    Const,
    PredCall,
    VarRef,
    expr_component_types,
    expr_vars,
    guard_vars,
)
from .values import IRI_T, LITERAL_T, DataType, Multiset, TypeDomain, Value, can_cast

VIEW_COLOR_KINDS = (LITERAL_T, IRI_T)


@dataclass(frozen=True)
class Place:
    name: str
    kind: str  # "control" | "view"
    color: tuple[DataType, ...]
    query: Query | None = None
    query_text: str | None = None

    @property
    def is_view(self) -> bool:
        return self.kind == "view"


@dataclass(frozen=True)
class Inscription:
    items: tuple  # expression nodes

    def __len__(self):
        return len(self.items)


@dataclass(frozen=True)
class Transition:
    name: str
    guard: object = None
    action: str | None = None
    action_args: tuple = ()


@dataclass
class MMNet:
    name: str
    domain: TypeDomain
    places: dict[str, Place] = field(default_factory=dict)
    transitions: dict[str, Transition] = field(default_factory=dict)
    actions: dict[str, ActionDef] = field(default_factory=dict)
    # (place, transition) -> inscription multiset (one entry per arc)
    in_flow: dict = field(default_factory=dict)
    read_flow: dict = field(default_factory=dict)
    # (transition, place) -> inscription multiset
    out_flow: dict = field(default_factory=dict)
    init_marking: dict = field(default_factory=dict)  # place -> [token tuples]
    init_supply: dict = field(default_factory=dict)   # variable -> [raw texts]
    triples_file: str | None = None
    objects_file: str | None = None
    channel_in: str | None = None
    channel_out: str | None = None

    # -- construction helpers --

    def add_place(self, place: Place) -> Place:
        self.places[place.name] = place
        return place

    def add_transition(self, t: Transition) -> Transition:
        self.transitions[t.name] = t
        return t

    def add_action(self, a: ActionDef) -> ActionDef:
        self.actions[a.name] = a
        return a

    def add_arc(self, kind: str, place: str, transition: str, inscription: Inscription):
        if kind == "in":
            key, flow = (place, transition), self.in_flow
        elif kind == "read":
            key, flow = (place, transition), self.read_flow
        elif kind == "out":
            key, flow = (transition, place), self.out_flow
        else:
            raise ValueError(f"bad arc kind {kind!r}")
        flow.setdefault(key, [])
        flow[key].append(inscription)

    def _check_transition(self, t: str):
        if t not in self.transitions:
            raise UnknownTransition(f"no transition {t!r}")

    # -- incidence --

    def input_arcs(self, t: str):
        """(place, inscription) pairs for consuming arcs of t."""
        self._check_transition(t)
        out = []
        for (p, tt), inscriptions in sorted(self.in_flow.items()):
            if tt == t:
                out.extend((p, ins) for ins in inscriptions)
        return out

    def read_arcs(self, t: str):
        self._check_transition(t)
        out = []
        for (p, tt), inscriptions in sorted(self.read_flow.items()):
            if tt == t:
                out.extend((p, ins) for ins in inscriptions)
        return out

    def output_arcs(self, t: str):
        self._check_transition(t)
        out = []
        for (tt, p), inscriptions in sorted(self.out_flow.items()):
            if tt == t:
                out.extend((p, ins) for ins in inscriptions)
        return out

    def in_vars(self, t: str) -> set[str]:
        out = set()
        for _, ins in self.input_arcs(t) + self.read_arcs(t):
            for item in ins.items:
                out |= expr_vars(item)
        return out

    def out_vars(self, t: str) -> set[str]:
        """Output-side variables: output inscriptions plus action actual
        arguments (the latter so external-input variables are covered)."""
        out = set()
        for _, ins in self.output_arcs(t):
            for item in ins.items:
                out |= expr_vars(item)
        for a in self.transitions[t].action_args:
            out |= expr_vars(a)
        return out

    def fresh_out_vars(self, t: str) -> set[str]:
        return {v for v in self.out_vars(t) if v.startswith("nu_")}

    def external_vars(self, t: str) -> set[str]:
        """Non-fresh output variables unbound by any input arc: they model
        system input and need a value supply at runtime."""
        return self.out_vars(t) - self.in_vars(t) - self.fresh_out_vars(t)

    # -- variable typing --

    def var_types(self, t: str) -> dict[str, DataType]:
        """Variable types inferred from arc positions and action parameters.
        Input positions are authoritative; conflicts surface in validate()."""
        types: dict[str, DataType] = {}

        def note(name, typ):
            if typ is not None and name not in types:
                types[name] = typ

        for p, ins in self.input_arcs(t) + self.read_arcs(t):
            color = self.places[p].color
            if len(ins.items) != len(color):
                continue
            for item, comp in zip(ins.items, color):
                if isinstance(item, VarRef):
                    note(item.name, comp)
        tr = self.transitions[t]
        if tr.action and tr.action in self.actions:
            for arg, param in zip(tr.action_args, self.actions[tr.action].params):
                if isinstance(arg, VarRef):
                    note(arg.name, param.type)
        for p, ins in self.output_arcs(t):
            color = self.places[p].color
            if len(ins.items) != len(color):
                continue
            for item, comp in zip(ins.items, color):
                if isinstance(item, VarRef):
                    note(item.name, comp)
        return types

    def marking_from_init(self) -> dict[str, Multiset]:
        marking = {}
        for pname, tokens in self.init_marking.items():
            marking[pname] = Multiset.from_tokens(tokens)
        return marking

    def place(self, name: str) -> Place:
        if name not in self.places:
            raise UnknownPlace(f"no place {name!r}")
        return self.places[name]

    def renamed(self, prefix: str) -> "MMNet":
        """Copy with every place, transition and action name prefixed."""
        def pn(n):
            return prefix + n

        net = MMNet(
            name=pn(self.name),
            domain=self.domain,
            places={pn(n): replace(p, name=pn(n)) for n, p in self.places.items()},
            transitions={},
            actions={pn(n): replace(a, name=pn(n)) for n, a in self.actions.items()},
            in_flow={(pn(p), pn(t)): list(v) for (p, t), v in self.in_flow.items()},
            read_flow={(pn(p), pn(t)): list(v) for (p, t), v in self.read_flow.items()},
            out_flow={(pn(t), pn(p)): list(v) for (t, p), v in self.out_flow.items()},
            init_marking={pn(p): list(v) for p, v in self.init_marking.items()},
            init_supply={v: list(vals) for v, vals in self.init_supply.items()},
            triples_file=self.triples_file,
            objects_file=self.objects_file,
            channel_in=pn(self.channel_in) if self.channel_in else None,
            channel_out=pn(self.channel_out) if self.channel_out else None,
        )
        for n, t in self.transitions.items():
            net.transitions[pn(n)] = replace(
                t, name=pn(n), action=pn(t.action) if t.action else None)
        return net


# -- validation ---------------------------------------------------------------------

def _guard_predicates(g):
    if g is None or not hasattr(g, "__dataclass_fields__"):
        return
    if isinstance(g, PredCall):
        yield g.name
    if isinstance(g, Cmp):
        return
    for f in g.__dataclass_fields__.values():
        sub = getattr(g, f.name)
        if hasattr(sub, "__dataclass_fields__"):
            yield from _guard_predicates(sub)


def validate(net: MMNet) -> list[str]:
    """All Def.-style typing conditions; empty list iff the net is well
    formed. Messages carry a [clause] tag and the offending location."""
    errors = []

    clash = set(net.places) & set(net.transitions)
    for n in sorted(clash):
        errors.append(f"[disjoint-names] {n!r} is both a place and a transition")

    for pname, place in sorted(net.places.items()):
        if not place.color:
            errors.append(f"[place-color] place {pname}: empty color")
        for comp in place.color:
            if comp.is_media:
                errors.append(
                    f"[place-color] place {pname}: media type {comp.name} "
                    f"cannot color a place")
        if place.is_view:
            if place.query is None:
                errors.append(f"[view-query] view place {pname} has no query")
            else:
                if place.query.form != "select":
                    errors.append(
                        f"[view-query] view place {pname}: query must be SELECT")
                elif len(place.query.answer_vars) != len(place.color):
                    errors.append(
                        f"[query-color] view place {pname}: query answers "
                        f"{len(place.query.answer_vars)} columns, color has "
                        f"{len(place.color)}")
                for comp in place.color:
                    if comp not in VIEW_COLOR_KINDS:
                        errors.append(
                            f"[query-color] view place {pname}: color component "
                            f"{comp.name} is not an RDF term type (L or I)")
        else:
            if place.query is not None:
                errors.append(
                    f"[view-query] control place {pname} carries a query")

    for (p, t), inscriptions in sorted(net.in_flow.items()):
        if p not in net.places:
            errors.append(f"[arc-place] input arc from unknown place {p!r}")
            continue
        if net.places[p].is_view:
            errors.append(
                f"[view-read-only] view place {p} feeds {t} through a "
                f"consuming arc; view places connect via read arcs only")
        _check_input_inscriptions(net, p, t, inscriptions, errors)

    for (p, t), inscriptions in sorted(net.read_flow.items()):
        if p not in net.places:
            errors.append(f"[arc-place] read arc from unknown place {p!r}")
            continue
        if not net.places[p].is_view:
            errors.append(
                f"[view-read-only] read arc from control place {p} to {t}; "
                f"read arcs attach to view places")
        _check_input_inscriptions(net, p, t, inscriptions, errors)

    for (t, p), inscriptions in sorted(net.out_flow.items()):
        if p not in net.places:
            errors.append(f"[arc-place] output arc into unknown place {p!r}")
            continue
        if net.places[p].is_view:
            errors.append(
                f"[view-read-only] output arc from {t} into view place {p}")
            continue
        color = net.places[p].color
        var_types = net.var_types(t) if t in net.transitions else {}
        for ins in inscriptions:
            comps = []
            known = True
            for item in ins.items:
                got = expr_component_types(item, var_types, net.domain)
                if got is None:
                    known = False
                    break
                comps.extend(got)
            if known:
                if len(comps) != len(color):
                    errors.append(
                        f"[inscription-color] arc {t} -> {p}: inscription "
                        f"yields {len(comps)} components, color has {len(color)}")
                else:
                    for i, (got, want) in enumerate(zip(comps, color)):
                        if got != want:
                            errors.append(
                                f"[inscription-color] arc {t} -> {p} component "
                                f"{i}: {got.name} where color says {want.name}")

    for tname, tr in sorted(net.transitions.items()):
        _check_var_agreement(net, tname, errors)
        in_vars = net.in_vars(tname)
        for v in sorted(guard_vars(tr.guard)):
            if v not in in_vars:
                errors.append(
                    f"[guard-vars] transition {tname}: guard variable {v!r} "
                    f"is not bound by any input arc")
        for pred in _guard_predicates(tr.guard):
            if pred not in net.domain.predicates:
                errors.append(
                    f"[guard-predicate] transition {tname}: unknown predicate "
                    f"{pred!r}")
        if tr.action is not None:
            if tr.action not in net.actions:
                errors.append(
                    f"[action-ref] transition {tname}: unknown action "
                    f"{tr.action!r}")
            else:
                action = net.actions[tr.action]
                if len(tr.action_args) != len(action.params):
                    errors.append(
                        f"[action-args] transition {tname}: {tr.action} takes "
                        f"{len(action.params)} arguments, got "
                        f"{len(tr.action_args)}")
                else:
                    var_types = net.var_types(tname)
                    for arg, param in zip(tr.action_args, action.params):
                        got = expr_component_types(arg, var_types, net.domain)
                        if got and len(got) == 1 and not can_cast(got[0], param.type):
                            errors.append(
                                f"[action-args] transition {tname}: argument "
                                f"for {param.name} has type {got[0].name}, "
                                f"not castable to {param.type.name}")
        for v in sorted(net.external_vars(tname)):
            if v not in net.var_types(tname):
                errors.append(
                    f"[external-input] transition {tname}: external-input "
                    f"variable {v!r} has no inferable type")

    for pname, tokens in sorted(net.init_marking.items()):
        if pname not in net.places:
            errors.append(f"[init-marking] unknown place {pname!r}")
            continue
        place = net.places[pname]
        if place.is_view:
            errors.append(
                f"[init-marking] view place {pname} cannot be seeded; its "
                f"marking is derived")
            continue
        for tok in tokens:
            if len(tok) != len(place.color) or any(
                    not isinstance(v, Value) or v.type != c
                    for v, c in zip(tok, place.color)):
                errors.append(
                    f"[init-marking] token {tok!r} does not match color of "
                    f"{pname}")
    return errors


def _check_input_inscriptions(net, p, t, inscriptions, errors):
    color = net.places[p].color
    for ins in inscriptions:
        if len(ins.items) != len(color):
            errors.append(
                f"[inscription-color] arc {p} -> {t}: inscription arity "
                f"{len(ins.items)} != color arity {len(color)}")
        for item in ins.items:
            if not isinstance(item, VarRef):
                errors.append(
                    f"[input-vars] arc {p} -> {t}: input inscriptions carry "
                    f"variables only")
            elif item.fresh:
                errors.append(
                    f"[input-vars] arc {p} -> {t}: fresh variable "
                    f"{item.name!r} cannot appear on an input arc")


def _check_var_agreement(net, t, errors):
    seen: dict[str, DataType] = {}
    for pp, ins in net.input_arcs(t) + net.read_arcs(t):
        ccolor = net.places[pp].color
        if len(ins.items) != len(ccolor):
            continue
        for item, comp in zip(ins.items, ccolor):
            if isinstance(item, VarRef):
                if item.name in seen and seen[item.name] != comp:
                    errors.append(
                        f"[input-vars] transition {t}: variable {item.name!r} "
                        f"bound at types {seen[item.name].name} and {comp.name}")
                seen.setdefault(item.name, comp)

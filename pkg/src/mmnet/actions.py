"""Parameterized actions over the two-part storage and their application.

An action deletes/adds metadata triples through templates and deletes,
creates or updates addressed objects through generator expressions. Additions
win over deletions on the metadata side; on the object side a generator
targeting a deleted-and-existing address keeps the address alive with the
freshly generated object.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    MissingParameter,
    MMNetError,
    StoreRequired,
    TypeMismatch,
)
from .media import ObjectStore, SyntheticImage
from .rdf import ADDRESS_PRED, MetadataGraph, Triple, iri, value_to_term
from .terms import Call, Cast, Const, VarRef, eval_expr, expr_vars, render_expr
from .values import OID_T, DataType, TypeDomain, Value, cast


@dataclass(frozen=True)
class Param:
    name: str
    type: DataType


@dataclass(frozen=True)
class TripleTemplate:
    s: object
    p: object
    o: object

    def positions(self):
        return (self.s, self.p, self.o)


@dataclass(frozen=True)
class Generator:
    """`target -> func(args)`: create or update the object at target."""
    target: object
    func: str
    args: tuple


@dataclass(frozen=True)
class ActionDef:
    name: str
    params: tuple[Param, ...]
    mm_minus: tuple[TripleTemplate, ...] = ()
    mm_plus: tuple[TripleTemplate, ...] = ()
    mo_minus: tuple = ()
    mo_plus: tuple[Generator, ...] = ()

    def __post_init__(self):
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise MMNetError(f"action {self.name}: parameters must be distinct")
        allowed = set(names)
        for tpl in self.mm_minus + self.mm_plus:
            for pos in tpl.positions():
                for v in expr_vars(pos):
                    if v not in allowed:
                        raise MMNetError(
                            f"action {self.name}: template variable {v!r} "
                            f"is not a parameter")
        for e in self.mo_minus:
            self._check_addr(e, allowed, "delete")
        for gen in self.mo_plus:
            self._check_addr(gen.target, allowed, "generator target")
            for a in gen.args:
                for v in expr_vars(a):
                    if v not in allowed:
                        raise MMNetError(
                            f"action {self.name}: generator variable {v!r} "
                            f"is not a parameter")

    def _check_addr(self, e, allowed, what):
        if isinstance(e, VarRef):
            if e.name not in allowed:
                raise MMNetError(
                    f"action {self.name}: {what} variable {e.name!r} "
                    f"is not a parameter")
            ptype = next(p.type for p in self.params if p.name == e.name)
            if ptype != OID_T:
                raise MMNetError(
                    f"action {self.name}: {what} {e.name!r} must be oid-typed")
        elif isinstance(e, Const):
            if e.value.type != OID_T:
                raise MMNetError(f"action {self.name}: {what} must be an oid")
        else:
            raise MMNetError(
                f"action {self.name}: {what} must be a parameter or oid constant")

    @property
    def param_names(self):
        return tuple(p.name for p in self.params)


@dataclass(frozen=True)
class StorageInstance:
    metadata: MetadataGraph
    objects: ObjectStore


@dataclass
class ActionInstance:
    """A ground action: definition plus a total, type-correct substitution."""

    action: ActionDef
    sigma: dict[str, Value]
    domain: TypeDomain

    def _eval(self, expr, store):
        return eval_expr(expr, self.sigma, self.domain, store)

    def _ground_template(self, tpl: TripleTemplate, store) -> Triple:
        s, p, o = (self._eval(pos, store) for pos in tpl.positions())
        try:
            return Triple(value_to_term(s), value_to_term(p), value_to_term(o))
        except MMNetError as exc:
            raise TypeMismatch(
                f"action {self.action.name}: template grounds to non-RDF "
                f"terms ({exc})")

    def ground_mm(self, store: ObjectStore | None = None):
        """Ground delete/add triple sets. Needs the store only when a
        template embeds a store-reading term."""
        mm_minus = {self._ground_template(t, store)
                    for t in self.action.mm_minus}
        mm_plus = {self._ground_template(t, store)
                   for t in self.action.mm_plus}
        return mm_minus, mm_plus

    def ground_mo(self, store: ObjectStore | None = None):
        """Ground deleted addresses and (address, object) generator results,
        evaluated against the given pre-application store."""
        mo_minus = {self._eval(e, store).payload for e in self.action.mo_minus}
        mo_plus = []
        for gen in self.action.mo_plus:
            target = self._eval(gen.target, store).payload
            args = [self._eval(a, store) for a in gen.args]
            result = self.domain.eval_function(gen.func, args, store)
            obj = result.payload if isinstance(result, Value) else result
            if not isinstance(obj, SyntheticImage):
                raise TypeMismatch(
                    f"action {self.action.name}: generator {gen.func} "
                    f"must produce a media object")
            mo_plus.append((target, obj))
        return mo_minus, mo_plus

    def ground(self, store: ObjectStore | None = None) -> dict:
        mm_minus, mm_plus = self.ground_mm(store)
        mo_minus, mo_plus = self.ground_mo(store)
        return {"mm_minus": mm_minus, "mm_plus": mm_plus,
                "mo_minus": mo_minus, "mo_plus": mo_plus}

    @property
    def mm_plus_ground(self):
        return self.ground_mm()[1]

    @property
    def mm_minus_ground(self):
        return self.ground_mm()[0]


def instantiate(action: ActionDef, sigma: dict[str, Value],
                domain: TypeDomain, store: ObjectStore | None = None) -> ActionInstance:
    """Ground the action with the substitution; actuals are cast to the
    declared parameter types (a missing cast rule is a type error)."""
    adjusted = {}
    for p in action.params:
        if p.name not in sigma:
            raise MissingParameter(
                f"action {action.name}: parameter {p.name!r} not bound")
        v = sigma[p.name]
        if not isinstance(v, Value):
            raise TypeMismatch(f"action {action.name}: {p.name} must be a Value")
        if v.type != p.type:
            try:
                v = cast(v, p.type)
            except MMNetError:
                raise TypeMismatch(
                    f"action {action.name}: cannot use {v.type.name} value "
                    f"for parameter {p.name}: {p.type.name}")
        adjusted[p.name] = v
    inst = ActionInstance(action, adjusted, domain)
    try:
        inst.ground(store)
    except StoreRequired:
        if store is not None:
            raise
        # store-dependent terms ground later, at application time
    return inst


def apply_action(inst: ActionInstance | None, storage: StorageInstance) -> StorageInstance:
    """Apply a ground action: metadata gets (M \\ mm-) ∪ mm+; objects lose
    the deleted addresses and then every generator writes its target, all
    generator arguments reading the pre-application store."""
    if inst is None:
        return storage
    ground = inst.ground(storage.objects)
    metadata = storage.metadata.delete(ground["mm_minus"]).insert(ground["mm_plus"])
    objects = storage.objects
    for addr in sorted(ground["mo_minus"]):
        objects = objects.remove(addr)
    for addr, obj in ground["mo_plus"]:
        objects = objects.put_or_update(addr, obj)
    return StorageInstance(metadata, objects)


# -- advisory lints -----------------------------------------------------------------

def _mentions(expr, needle) -> bool:
    """Does the term mention the parameter (or oid constant), casts aside?"""
    if isinstance(expr, Cast):
        return _mentions(expr.expr, needle)
    if isinstance(expr, Call):
        return any(_mentions(a, needle) for a in expr.args)
    if isinstance(needle, VarRef):
        return isinstance(expr, VarRef) and expr.name == needle.name
    return isinstance(expr, Const) and isinstance(needle, Const) \
        and expr.value == needle.value


def lint_consistency(action: ActionDef) -> list[str]:
    """Warn about deletes/creates that leave metadata and objects out of
    sync. Advisory only; inconsistent actions still execute."""
    warnings = []
    for e in action.mo_minus:
        covered = any(_mentions(pos, e)
                      for tpl in action.mm_minus for pos in tpl.positions())
        if not covered:
            warnings.append(
                f"action {action.name}: deletes object {render_expr(e)} "
                f"without deleting metadata that mentions it")
    for gen in action.mo_plus:
        covered = False
        for tpl in action.mm_plus:
            p = tpl.p
            is_addr = (isinstance(p, Const)
                       and getattr(p.value, "payload", None) == ADDRESS_PRED)
            if is_addr and _mentions(tpl.o, gen.target):
                covered = True
                break
        if not covered:
            warnings.append(
                f"action {action.name}: creates or updates object "
                f"{render_expr(gen.target)} without an {ADDRESS_PRED} "
                f"metadata template for it")
    return warnings


def lint_storage(storage: StorageInstance) -> list[str]:
    """Flag mmdb:address triples whose address resolves to no object."""
    warnings = []
    for t in storage.metadata.match(p=iri(ADDRESS_PRED)):
        if t.o.text not in storage.objects:
            warnings.append(
                f"metadata references address {t.o.text!r} with no stored object")
    return sorted(warnings)

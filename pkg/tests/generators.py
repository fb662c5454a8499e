"""Random model generators shared by runtime/property/acceptance tests."""

import random

from mmnet.actions import ActionDef, Param, StorageInstance, TripleTemplate
from mmnet.media import ObjectStore
from mmnet.net import Inscription, MMNet, Place, Transition
from mmnet.rdf import MetadataGraph, Triple, iri, literal
from mmnet.runtime import Snapshot, make_snapshot
from mmnet.sparql import parse_query
from mmnet.terms import VarRef, parse_expr_text, parse_guard_text
from mmnet.values import INT_T, LITERAL_T, STR_T, Multiset, mk_int, mk_literal, mk_str

LITS = [f"l{i}" for i in range(6)]
PREDS = ["mmdb:p0", "mmdb:p1", "mmdb:p2"]


# -- control-only nets (no views, no actions, no fresh variables) --------------------

def random_control_net(rng: random.Random, domain):
    """1-3 places colored over str/int, 1-2 transitions with variable arcs,
    occasional guards and arithmetic output terms."""
    net = MMNet("rand_ctl", domain)
    n_places = rng.randrange(1, 4)
    colors = {}
    for i in range(n_places):
        color = tuple(rng.choice((STR_T, INT_T))
                      for _ in range(rng.randrange(1, 3)))
        colors[f"p{i}"] = color
        net.add_place(Place(f"p{i}", "control", color))

    def var_for(pos_type, index):
        return f"{'s' if pos_type == STR_T else 'n'}{index}"

    for ti in range(rng.randrange(1, 3)):
        tname = f"t{ti}"
        net.add_transition(Transition(tname))
        in_vars = {}
        for _ in range(rng.randrange(1, 3)):
            p = rng.choice(list(colors))
            items = []
            for j, comp in enumerate(colors[p]):
                name = var_for(comp, rng.randrange(0, 2))
                items.append(VarRef(name))
                in_vars[name] = comp
            net.add_arc("in", p, tname, Inscription(tuple(items)))
        # guard over input variables
        if in_vars and rng.random() < 0.5:
            name, typ = rng.choice(sorted(in_vars.items()))
            if typ == INT_T:
                guard = parse_guard_text(f"{name} < 3", domain)
            else:
                guard = parse_guard_text(f'{name} = "{rng.choice(LITS)}"',
                                         domain)
            if rng.random() < 0.3:
                guard = parse_guard_text("true", domain)
            net.transitions[tname] = Transition(tname, guard=guard)
        for _ in range(rng.randrange(0, 3)):
            p = rng.choice(list(colors))
            items = []
            for comp in colors[p]:
                usable = [v for v, t in in_vars.items() if t == comp]
                if usable and rng.random() < 0.8:
                    v = rng.choice(sorted(usable))
                    if comp == INT_T and rng.random() < 0.4:
                        items.append(parse_expr_text(f"{v} - 1", domain))
                    else:
                        items.append(VarRef(v))
                elif comp == INT_T:
                    items.append(parse_expr_text(str(rng.randrange(0, 4)),
                                                 domain))
                else:
                    items.append(parse_expr_text(f'"{rng.choice(LITS)}"',
                                                 domain))
            net.add_arc("out", p, tname, Inscription(tuple(items)))
    return net


def random_control_marking(rng: random.Random, net, max_tokens=4):
    marking = {}
    for name, place in net.places.items():
        tokens = []
        for _ in range(rng.randrange(0, max_tokens + 1)):
            tok = tuple(mk_str(rng.choice(LITS)) if c == STR_T
                        else mk_int(rng.randrange(0, 5))
                        for c in place.color)
            tokens.append(tok)
        marking[name] = Multiset.from_tokens(tokens)
    return marking


def control_snapshot(rng, net) -> Snapshot:
    storage = StorageInstance(MetadataGraph(), ObjectStore())
    return make_snapshot(net, storage, random_control_marking(rng, net))


# -- nets with view places and metadata actions ---------------------------------------

VIEW_QUERIES = [
    "SELECT ?a ?b WHERE {{ ?a {p} ?b }}",
    "SELECT ?a ?b WHERE {{ {{ ?a {p} ?b }} UNION {{ ?a {q} ?b }} }}",
    "SELECT ?a ?b WHERE {{ ?a {p} ?b . FILTER(?a != ?b) }}",
    "SELECT ?a ?b WHERE {{ ?a {p} ?x . ?x {q} ?b }}",
]


def random_view_net(rng: random.Random, domain):
    """Two token places over literal pairs, 1-2 query views, and transitions
    whose actions insert/delete triples so the views actually move."""
    net = MMNet("rand_view", domain)
    net.add_place(Place("p0", "control", (LITERAL_T, LITERAL_T)))
    net.add_place(Place("p1", "control", (LITERAL_T, LITERAL_T)))
    n_views = rng.randrange(1, 3)
    for i in range(n_views):
        text = rng.choice(VIEW_QUERIES).format(p=rng.choice(PREDS),
                                               q=rng.choice(PREDS))
        net.add_place(Place(f"v{i}", "view", (LITERAL_T, LITERAL_T),
                            parse_query(text), text))

    for pred in PREDS:
        suffix = pred.split(":")[1]
        net.add_action(ActionDef(
            f"add_{suffix}", (Param("x", LITERAL_T), Param("y", LITERAL_T)),
            mm_plus=(TripleTemplate(VarRef("x"),
                                    parse_expr_text(pred, domain),
                                    VarRef("y")),)))
        net.add_action(ActionDef(
            f"del_{suffix}", (Param("x", LITERAL_T), Param("y", LITERAL_T)),
            mm_minus=(TripleTemplate(VarRef("x"),
                                     parse_expr_text(pred, domain),
                                     VarRef("y")),)))
        net.add_action(ActionDef(
            f"move_{suffix}", (Param("x", LITERAL_T), Param("y", LITERAL_T)),
            mm_minus=(TripleTemplate(VarRef("x"),
                                     parse_expr_text(pred, domain),
                                     VarRef("y")),),
            mm_plus=(TripleTemplate(VarRef("y"),
                                    parse_expr_text(pred, domain),
                                    VarRef("x")),)))

    action_names = [None] + sorted(net.actions)
    for ti in range(rng.randrange(2, 4)):
        tname = f"t{ti}"
        guard = None
        reads = rng.random() < 0.5
        if reads and rng.random() < 0.6:
            guard = parse_guard_text("x = u", domain)
        action = rng.choice(action_names)
        args = (VarRef("x"), VarRef("y")) if action else ()
        net.add_transition(Transition(tname, guard=guard, action=action,
                                      action_args=args))
        net.add_arc("in", "p0", tname,
                    Inscription((VarRef("x"), VarRef("y"))))
        if reads:
            net.add_arc("read", f"v{rng.randrange(n_views)}", tname,
                        Inscription((VarRef("u"), VarRef("w"))))
        dst = rng.choice(("p0", "p1"))
        swap = rng.random() < 0.5
        net.add_arc("out", dst, tname,
                    Inscription((VarRef("y"), VarRef("x")) if swap
                                else (VarRef("x"), VarRef("y"))))
    return net


def random_view_snapshot(rng, net) -> Snapshot:
    triples = set()
    for _ in range(rng.randrange(2, 10)):
        triples.add(Triple(literal(rng.choice(LITS)), iri(rng.choice(PREDS)),
                           literal(rng.choice(LITS))))
    storage = StorageInstance(MetadataGraph(triples), ObjectStore())
    tokens = [tuple(mk_literal(rng.choice(LITS)) for _ in range(2))
              for _ in range(rng.randrange(1, 4))]
    return make_snapshot(net, storage,
                         {"p0": Multiset.from_tokens(tokens)})

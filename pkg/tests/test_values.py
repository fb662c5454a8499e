import pytest

from mmnet.errors import (
    ArityMismatch,
    CastFailure,
    EmptySetAccess,
    NoCastRule,
    NotSubset,
    TypeMismatch,
    UnknownFunction,
    UnknownPredicate,
)
from mmnet.values import (
    INT_T,
    IRI_T,
    LITERAL_T,
    OID_T,
    RECT_T,
    STR_T,
    Multiset,
    Value,
    cast,
    mk_int,
    mk_iri,
    mk_literal,
    mk_oid,
    mk_rect,
    mk_str,
    parse_rect,
    set_type,
)

from oracles import counter_of, multiset_from_counter

PAIR_SET = set_type((STR_T, OID_T))


def pair(s, o):
    return (mk_str(s), mk_oid(o))


def pset(*pairs):
    return Value(PAIR_SET, tuple(pairs))


def test_cast_oid_to_literal():
    assert cast(mk_oid("img1"), LITERAL_T) == mk_literal("img1")


def test_cast_identity():
    assert cast(mk_str("x"), STR_T) == mk_str("x")


def test_cast_rect_to_literal():
    v = mk_rect(100, 120, 205, 205)
    assert cast(v, LITERAL_T) == mk_literal("(100,120)..(205,205)")


@pytest.mark.parametrize("value", [
    mk_str("hello"), mk_oid("img1"), mk_int(42), mk_int(-3),
    mk_rect(0, 0, 9, 9), mk_iri("mmdb:faceCount"),
])
def test_cast_round_trip_through_literal(value):
    assert cast(cast(value, LITERAL_T), value.type) == value


def test_cast_missing_rule():
    with pytest.raises(NoCastRule):
        cast(mk_int(1), OID_T)
    with pytest.raises(NoCastRule):
        cast(pset(), LITERAL_T)


def test_cast_bad_payload():
    with pytest.raises(CastFailure):
        cast(mk_literal("not a number"), INT_T)
    with pytest.raises(CastFailure):
        cast(mk_literal("nope"), RECT_T)


def test_rect_corner_order_enforced():
    with pytest.raises(TypeMismatch):
        mk_rect(5, 0, 1, 9)
    with pytest.raises(CastFailure):
        parse_rect("(9,9)..(0,0)")


def test_set_rejects_duplicates_and_bad_arity():
    with pytest.raises(TypeMismatch):
        Value(PAIR_SET, (pair("a", "x"), pair("a", "x")))
    with pytest.raises(TypeMismatch):
        Value(PAIR_SET, ((mk_str("a"),),))


# -- predicates ------------------------------------------------------------------

def test_empty_predicate(domain):
    assert domain.eval_predicate("empty", [pset()]) is True
    assert domain.eval_predicate("empty", [pset(pair("a", "x"))]) is False


def test_int_predicates(domain):
    assert domain.eval_predicate("=_int", [mk_int(3), mk_int(3)])
    assert domain.eval_predicate("<_int", [mk_int(2), mk_int(5)])
    assert not domain.eval_predicate("<_int", [mk_int(5), mk_int(2)])


def test_predicate_errors(domain):
    with pytest.raises(UnknownPredicate):
        domain.eval_predicate("nope", [])
    with pytest.raises(ArityMismatch):
        domain.eval_predicate("=_int", [mk_int(1)])
    with pytest.raises(TypeMismatch):
        domain.eval_predicate("=_int", [mk_str("a"), mk_str("b")])


# -- functions -------------------------------------------------------------------

def test_ins_adds_an_element(domain):
    s = pset(pair("a", "addr1"))
    got = domain.eval_function("ins", [s, mk_str("b"), mk_oid("addr2")])
    assert got == pset(pair("a", "addr1"), pair("b", "addr2"))


def test_get_last_follows_insertion_order(domain):
    s = pset(pair("a", "addr1"), pair("b", "addr2"))
    assert domain.eval_function("getL", [s]) == pair("b", "addr2")


def test_succ(domain):
    assert domain.eval_function("succ", [mk_int(4)]) == mk_int(5)


def test_minus(domain):
    assert domain.eval_function("minus", [mk_int(2), mk_int(1)]) == mk_int(1)


def test_empty_set_access(domain):
    with pytest.raises(EmptySetAccess):
        domain.eval_function("getL", [pset()])
    with pytest.raises(EmptySetAccess):
        domain.eval_function("rem", [pset(), mk_str("a"), mk_oid("x")])


def test_unknown_function(domain):
    with pytest.raises(UnknownFunction):
        domain.eval_function("frobnicate", [])


def test_function_determinism(domain):
    s = pset(pair("a", "x"))
    args = [s, mk_str("b"), mk_oid("y")]
    assert domain.eval_function("ins", args) == domain.eval_function("ins", args)


def test_ins_then_rem_restores_when_absent(domain, rng):
    for _ in range(50):
        n = rng.randrange(0, 4)
        elems = [pair(f"e{i}", f"a{i}") for i in range(n)]
        s = pset(*elems)
        added = domain.eval_function("ins", [s, mk_str("new"), mk_oid("fresh")])
        back = domain.eval_function("rem", [added, mk_str("new"), mk_oid("fresh")])
        assert back == s


def test_rem_getl_eventually_empties_any_set(domain, rng):
    for _ in range(30):
        n = rng.randrange(1, 6)
        s = pset(*[pair(f"e{i}", f"a{i}") for i in range(n)])
        steps = 0
        while not domain.eval_predicate("empty", [s]):
            last = domain.eval_function("getL", [s])
            s = domain.eval_function("rem", [s, last])
            steps += 1
            assert steps <= n
        assert steps == n


# -- multisets ---------------------------------------------------------------------

def tok(*texts):
    return tuple(mk_str(t) for t in texts)


def test_multiset_sum_adds_counts():
    m1 = Multiset({tok("a"): 1})
    m2 = Multiset({tok("a"): 2})
    assert (m1 + m2) == Multiset({tok("a"): 3})


def test_multiset_self_difference_is_empty():
    m = Multiset({tok("a"): 2, tok("b"): 1})
    assert (m - m) == Multiset()


def test_multiset_size():
    assert len(Multiset({tok("a"): 2, tok("b"): 3})) == 5


def test_multiset_diff_requires_subset():
    with pytest.raises(NotSubset):
        Multiset({tok("a"): 1}) - Multiset({tok("a"): 2})


def test_multiset_scale():
    m = Multiset({tok("a"): 2, tok("b"): 1})
    assert m.scale(0) == Multiset()
    assert m.scale(1) == m
    assert m.scale(3) == Multiset({tok("a"): 6, tok("b"): 3})


def _random_multiset(rng, universe):
    return Multiset({tok(e): rng.randrange(1, 6)
                     for e in rng.sample(universe, rng.randrange(0, 7))})


def test_sum_diff_round_trip_property(rng):
    universe = [f"x{i}" for i in range(10)]
    for _ in range(200):
        s2 = _random_multiset(rng, universe)
        # carve a random sub-multiset s1 ⊆ s2
        s1 = Multiset({k: rng.randrange(0, n + 1) for k, n in s2.items()})
        assert s1 <= s2
        assert (s2 - s1) + s1 == s2
        # cross-check against Counter arithmetic
        expect = counter_of(s2)
        expect.subtract(counter_of(s1))
        expect.update(counter_of(s1))
        assert multiset_from_counter(expect) == s2

import pytest

from mmnet.errors import MMNetError, ParseError, UnboundAnswerVariable
from mmnet.rdf import MetadataGraph, Triple, iri, literal
from mmnet.sparql import (
    BGP,
    Filter,
    Join,
    Union,
    Var,
    answer,
    eval_bgp,
    eval_pattern,
    parse_query,
    unparse,
)

from oracles import bgp_oracle


def t(s, p, o):
    return Triple(literal(s), iri(p), literal(o))


def test_parse_face_count_query():
    q = parse_query("SELECT ?id ?c WHERE { ?id mmdb:faceCount ?c }")
    assert q.form == "select"
    assert q.answer_vars == (Var("id"), Var("c"))
    assert isinstance(q.pattern, BGP)
    tp = q.pattern.patterns[0]
    assert tp.p == iri("mmdb:faceCount")
    assert (tp.s, tp.o) == (Var("id"), Var("c"))


def test_parse_ask_empty_pattern():
    q = parse_query("ASK WHERE { }")
    assert q.form == "ask"
    assert q.pattern == BGP(())


def test_select_star_first_occurrence_order():
    q = parse_query(
        "SELECT * WHERE { ?id mmdb:faceSegment ?s . ?id mmdb:prodSegment ?s }")
    assert q.answer_vars == (Var("id"), Var("s"))
    assert len(q.pattern.patterns) == 2


def test_unbound_answer_variable_rejected():
    with pytest.raises(UnboundAnswerVariable):
        parse_query("SELECT ?missing WHERE { ?a mmdb:p ?b }")


def test_syntax_error_carries_position():
    with pytest.raises(ParseError) as err:
        parse_query("SELECT ?x WHERE { ?x mmdb:p }")
    assert err.value.line == 1
    assert err.value.col is not None


def test_filter_variable_must_be_in_pattern():
    with pytest.raises(ParseError):
        parse_query('SELECT ?x WHERE { ?x mmdb:p ?y . FILTER(?z = "v") }')


def test_eval_bgp_single_pattern():
    g = MetadataGraph([t("i1", "mmdb:faceCount", "2")])
    q = parse_query("SELECT ?id ?c WHERE { ?id mmdb:faceCount ?c }")
    got = eval_bgp(g, q.pattern)
    assert got == {((Var("c"), literal("2")), (Var("id"), literal("i1")))}


def test_eval_bgp_empty_graph():
    q = parse_query("SELECT ?id ?c WHERE { ?id mmdb:faceCount ?c }")
    assert eval_bgp(MetadataGraph(), q.pattern) == set()


def test_eval_bgp_empty_pattern_yields_empty_mapping():
    assert eval_bgp(MetadataGraph([t("a", "mmdb:p", "b")]), BGP(())) == {()}


def test_two_pattern_join_matches_oracle():
    g = MetadataGraph([
        t("a", "mmdb:p", "b"), t("b", "mmdb:q", "c"), t("c", "mmdb:p", "b"),
        t("b", "mmdb:p", "a"), t("a", "mmdb:q", "c"), t("c", "mmdb:q", "a"),
    ])
    q = parse_query("SELECT * WHERE { ?x mmdb:p ?y . ?y mmdb:q ?z }")
    assert eval_bgp(g, q.pattern) == bgp_oracle(g, q.pattern.patterns)


def test_union_idempotent():
    g = MetadataGraph([t("a", "mmdb:p", "b")])
    q = parse_query("SELECT * WHERE { ?x mmdb:p ?y }")
    assert (eval_pattern(g, Union(q.pattern, q.pattern))
            == eval_pattern(g, q.pattern))


def test_join_of_groups():
    g = MetadataGraph([t("a", "mmdb:p", "b"), t("b", "mmdb:q", "c")])
    q = parse_query("SELECT * WHERE { { ?x mmdb:p ?y } { ?y mmdb:q ?z } }")
    assert isinstance(q.pattern, Join)
    got = answer(g, q)
    assert got == {(literal("a"), literal("b"), literal("c"))}


def test_filter_keeps_matching_mappings():
    g = MetadataGraph([t("a", "mmdb:p", "b"), t("a", "mmdb:p", "c")])
    q = parse_query('SELECT ?x ?y WHERE { ?x mmdb:p ?y . FILTER(?y = "b") }')
    assert isinstance(q.pattern, Filter)
    assert answer(g, q) == {(literal("a"), literal("b"))}


def test_filter_inequality():
    g = MetadataGraph([t("a", "mmdb:p", "b"), t("a", "mmdb:p", "c")])
    q = parse_query('SELECT ?y WHERE { ?x mmdb:p ?y . FILTER(?y != "b") }')
    assert answer(g, q) == {(literal("c"),)}


def test_variable_in_predicate_position():
    g = MetadataGraph([t("i1", "mmdb:faceSegment", "s1"),
                       t("i1", "mmdb:prodSegment", "s2"),
                       t("i1", "mmdb:name", "n1")])
    q = parse_query(
        "SELECT ?id ?k ?s WHERE { { ?id ?k ?s . FILTER(?k = mmdb:faceSegment) }"
        " UNION { ?id ?k ?s . FILTER(?k = mmdb:prodSegment) } }")
    assert answer(g, q) == {
        (literal("i1"), iri("mmdb:faceSegment"), literal("s1")),
        (literal("i1"), iri("mmdb:prodSegment"), literal("s2")),
    }


def test_answer_num_seg_example():
    g = MetadataGraph([t("i1", "mmdb:faceCount", "3"),
                       t("i2", "mmdb:faceCount", "0")])
    q = parse_query("SELECT ?id ?c WHERE { ?id mmdb:faceCount ?c }")
    assert answer(g, q) == {(literal("i1"), literal("3")),
                            (literal("i2"), literal("0"))}


def test_ask_nonempty_bgp_over_empty_graph():
    q = parse_query("ASK WHERE { ?id mmdb:faceCount ?c }")
    assert answer(MetadataGraph(), q) is False
    g = MetadataGraph([t("i1", "mmdb:faceCount", "3")])
    assert answer(g, q) is True


def test_answer_segs_two_tuples():
    g = MetadataGraph([t("i1", "mmdb:faceSegment", "(0,0)..(4,4)"),
                       t("i1", "mmdb:faceSegment", "(5,5)..(9,9)")])
    q = parse_query("SELECT ?id ?seg WHERE { ?id mmdb:faceSegment ?seg }")
    assert len(answer(g, q)) == 2


def test_answers_are_duplicate_free():
    g = MetadataGraph([t("i1", "mmdb:p", "x"), t("i2", "mmdb:p", "x")])
    q = parse_query("SELECT ?o WHERE { ?s mmdb:p ?o }")
    assert answer(g, q) == {(literal("x"),)}


def _random_graph(rng, n_triples, n_terms=8):
    terms = [f"t{i}" for i in range(n_terms)]
    preds = ["mmdb:p0", "mmdb:p1", "mmdb:p2"]
    triples = set()
    while len(triples) < n_triples:
        triples.add(t(rng.choice(terms), rng.choice(preds), rng.choice(terms)))
    return MetadataGraph(triples)


def _random_bgp_text(rng):
    names = ["x", "y", "z"]
    preds = ["mmdb:p0", "mmdb:p1", "mmdb:p2"]
    terms = [f"t{i}" for i in range(8)]
    parts = []
    for _ in range(rng.randrange(1, 4)):
        def pos():
            return (f"?{rng.choice(names)}" if rng.random() < 0.6
                    else f'"{rng.choice(terms)}"')
        parts.append(f"{pos()} {rng.choice(preds)} {pos()}")
    variables = sorted({w for p in parts for w in p.split() if w.startswith('?')})
    if not variables:
        variables = []
    head = " ".join(variables) if variables else "*"
    if not variables:
        return None
    return "SELECT %s WHERE { %s }" % (head, " . ".join(parts))


def test_eval_bgp_matches_oracle_randomized(rng):
    checked = 0
    while checked < 120:
        text = _random_bgp_text(rng)
        if text is None:
            continue
        g = _random_graph(rng, rng.randrange(0, 20))
        q = parse_query(text)
        assert eval_bgp(g, q.pattern) == bgp_oracle(g, q.pattern.patterns), text
        checked += 1


def test_bgp_monotone_under_graph_growth(rng):
    for _ in range(60):
        text = _random_bgp_text(rng)
        if text is None:
            continue
        q = parse_query(text)
        small = _random_graph(rng, 8)
        big = MetadataGraph(set(small.triples)
                            | set(_random_graph(rng, 8).triples))
        assert eval_bgp(small, q.pattern) <= eval_bgp(big, q.pattern)


CORPUS = [
    "SELECT ?id ?c WHERE { ?id mmdb:faceCount ?c }",
    "SELECT ?id ?seg WHERE { ?id mmdb:faceSegment ?seg }",
    "SELECT ?id ?tag WHERE { ?id mmdb:containsObj ?tag }",
    "ASK WHERE { }",
    "ASK WHERE { ?x mmdb:p0 ?y }",
    'SELECT ?x WHERE { ?x mmdb:p0 ?y . FILTER(?y = "t3") }',
    "SELECT * WHERE { { ?x mmdb:p0 ?y } UNION { ?x mmdb:p1 ?y } }",
    "SELECT ?id ?k ?s WHERE { { ?id ?k ?s . FILTER(?k = mmdb:faceSegment) }"
    " UNION { ?id ?k ?s . FILTER(?k = mmdb:prodSegment) } }",
]


@pytest.mark.parametrize("text", CORPUS)
def test_parse_unparse_parse_fixpoint(text):
    q1 = parse_query(text)
    q2 = parse_query(unparse(q1))
    assert unparse(q1) == unparse(q2)
    assert q1.answer_vars == q2.answer_vars
    assert q1.form == q2.form
    g = MetadataGraph([t("i1", "mmdb:faceCount", "3"),
                       t("i1", "mmdb:faceSegment", "(0,0)..(4,4)"),
                       t("t0", "mmdb:p0", "t3")])
    assert answer(g, q1) == answer(g, q2)


def test_union_with_unbound_answer_variable_raises():
    g = MetadataGraph([t("a", "mmdb:p0", "b"), t("a", "mmdb:p1", "c")])
    q = parse_query("SELECT ?y WHERE { { ?x mmdb:p0 ?y } UNION { ?x mmdb:p1 ?z } }")
    with pytest.raises(MMNetError):
        answer(g, q)

import pytest

from mmnet.actions import (
    ActionDef,
    Generator,
    Param,
    StorageInstance,
    apply_action,
    instantiate,
    lint_consistency,
    lint_storage,
)
from mmnet.errors import MissingParameter, MMNetError, TypeMismatch
from mmnet.media import ObjectStore, Region, SyntheticImage, extract, subtract
from mmnet.rdf import MetadataGraph, Triple, iri, literal
from mmnet.terms import VarRef, parse_expr_text
from mmnet.values import (
    LITERAL_T,
    OID_T,
    RECT_T,
    STR_T,
    mk_literal,
    mk_oid,
    mk_rect,
    mk_str,
)

from oracles import apply_oracle

FACE = "human face"


def T(dom, s, p, o):
    from mmnet.actions import TripleTemplate
    return TripleTemplate(parse_expr_text(s, dom), parse_expr_text(p, dom),
                          parse_expr_text(o, dom))


@pytest.fixture
def get_image(domain):
    return ActionDef(
        "getImage",
        (Param("a", OID_T), Param("seg", RECT_T), Param("a2", OID_T),
         Param("id", STR_T), Param("n", STR_T), Param("id0", STR_T)),
        mm_minus=(T(domain, "id0::L", "mmdb:faceSegment", "seg::L"),),
        mm_plus=(T(domain, "id::L", "mmdb:address", "a2::L"),
                 T(domain, "id::L", "mmdb:format", '".jpg"::L'),
                 T(domain, "id::L", "mmdb:name", "n::L")),
        mo_plus=(Generator(VarRef("a2"), "extractIMG",
                           (parse_expr_text("src(a)", domain),
                            parse_expr_text("seg", domain))),),
    )


@pytest.fixture
def cut_from_img(domain):
    return ActionDef(
        "cutFromIMG", (Param("a", OID_T), Param("a2", OID_T)),
        mo_plus=(Generator(VarRef("a"), "sub",
                           (parse_expr_text("src(a)", domain),
                            parse_expr_text("src(a2)", domain))),),
    )


def seed_storage():
    img = SyntheticImage(100, 100, (Region(FACE, (0, 0, 4, 4)),))
    metadata = MetadataGraph([
        Triple(literal("i9"), iri("mmdb:faceCount"), literal("1")),
        Triple(literal("i9"), iri("mmdb:faceSegment"), literal("(0,0)..(4,4)")),
    ])
    return StorageInstance(metadata, ObjectStore({"img1": img}))


def get_image_sigma():
    return {"a": mk_oid("img1"), "seg": mk_rect(0, 0, 4, 4),
            "a2": mk_oid("img2"), "id": mk_str("i9"), "n": mk_str("face0"),
            "id0": mk_str("i9")}


def test_instantiate_grounds_cast_templates(domain, get_image):
    inst = instantiate(get_image, get_image_sigma(), domain)
    assert Triple(literal("i9"), iri("mmdb:address"), literal("img2")) \
        in inst.mm_plus_ground
    assert Triple(literal("i9"), iri("mmdb:faceSegment"),
                  literal("(0,0)..(4,4)")) in inst.mm_minus_ground


def test_instantiate_casts_actuals_to_param_types(domain, get_image):
    sigma = get_image_sigma()
    sigma["seg"] = mk_literal("(0,0)..(4,4)")  # literal from a view row
    inst = instantiate(get_image, sigma, domain)
    assert inst.sigma["seg"] == mk_rect(0, 0, 4, 4)


def test_instantiate_missing_parameter(domain, get_image):
    sigma = get_image_sigma()
    del sigma["n"]
    with pytest.raises(MissingParameter):
        instantiate(get_image, sigma, domain)


def test_instantiate_uncastable_actual(domain, get_image):
    sigma = get_image_sigma()
    sigma["seg"] = mk_oid("oops")
    with pytest.raises(TypeMismatch):
        instantiate(get_image, sigma, domain)


def test_empty_action_is_identity(domain):
    noop = ActionDef("noop", ())
    storage = seed_storage()
    inst = instantiate(noop, {}, domain)
    out = apply_action(inst, storage)
    assert out.metadata == storage.metadata
    assert out.objects == storage.objects


def test_apply_get_image_example(domain, get_image):
    storage = seed_storage()
    inst = instantiate(get_image, get_image_sigma(), domain,
                       store=storage.objects)
    out = apply_action(inst, storage)
    # metadata gains 3 triples, loses the faceSegment triple
    assert len(out.metadata) == len(storage.metadata) + 3 - 1
    assert Triple(literal("i9"), iri("mmdb:faceSegment"),
                  literal("(0,0)..(4,4)")) not in out.metadata
    assert Triple(literal("i9"), iri("mmdb:name"), literal("face0")) \
        in out.metadata
    # objects gains img2 holding the extraction
    assert len(out.objects) == 2
    assert out.objects.src("img2") == extract(storage.objects.src("img1"),
                                              (0, 0, 4, 4))


def test_apply_cut_updates_in_place(domain, cut_from_img):
    storage = seed_storage()
    part = extract(storage.objects.src("img1"), (0, 0, 4, 4))
    storage = StorageInstance(storage.metadata,
                              storage.objects.put_or_update("img2", part))
    inst = instantiate(cut_from_img,
                       {"a": mk_oid("img1"), "a2": mk_oid("img2")}, domain,
                       store=storage.objects)
    out = apply_action(inst, storage)
    assert len(out.objects) == len(storage.objects)
    assert out.objects.src("img1") == subtract(storage.objects.src("img1"), part)


def test_addition_wins_over_deletion(domain):
    shared = T(domain, '"s"::L', "mmdb:p", '"o"::L')
    act = ActionDef("both", (), mm_minus=(shared,), mm_plus=(shared,))
    storage = StorageInstance(
        MetadataGraph([Triple(literal("s"), iri("mmdb:p"), literal("o"))]),
        ObjectStore())
    out = apply_action(instantiate(act, {}, domain), storage)
    assert Triple(literal("s"), iri("mmdb:p"), literal("o")) in out.metadata


def test_update_preservation_carve_out(domain):
    """An address deleted and simultaneously regenerated stays present,
    holding the new object."""
    act = ActionDef(
        "replace", (Param("a", OID_T), Param("b", OID_T)),
        mo_minus=(VarRef("a"),),
        mo_plus=(Generator(VarRef("a"), "extractIMG",
                           (parse_expr_text("src(b)", domain),
                            parse_expr_text("(0,0)..(5,5)", domain))),),
    )
    donor = SyntheticImage(50, 50)
    old = SyntheticImage(9, 9)
    storage = StorageInstance(MetadataGraph(),
                              ObjectStore({"x": old, "donor": donor}))
    inst = instantiate(act, {"a": mk_oid("x"), "b": mk_oid("donor")}, domain,
                       store=storage.objects)
    out = apply_action(inst, storage)
    assert "x" in out.objects
    assert out.objects.src("x") == extract(donor, (0, 0, 5, 5))


def test_template_variables_must_be_parameters(domain):
    with pytest.raises(MMNetError):
        ActionDef("bad", (Param("a", OID_T),),
                  mm_plus=(T(domain, "ghost::L", "mmdb:p", "a::L"),))


def test_delete_target_must_be_oid(domain):
    with pytest.raises(MMNetError):
        ActionDef("bad", (Param("x", STR_T),), mo_minus=(VarRef("x"),))


# -- randomized apply vs the set-formula oracle --------------------------------------

def _random_case(rng, domain):
    lits = [f"v{i}" for i in range(4)]
    preds = ["mmdb:p0", "mmdb:p1"]
    pool = [Triple(literal(s), iri(p), literal(o))
            for s in lits for p in preds for o in lits]
    metadata = MetadataGraph(rng.sample(pool, rng.randrange(0, 8)))
    objects = ObjectStore({"a1": SyntheticImage(30, 30),
                           "a2": SyntheticImage(40, 40,
                                                (Region(FACE, (1, 1, 5, 5)),))})
    storage = StorageInstance(metadata, objects)

    def rand_templates(k):
        out = []
        for _ in range(k):
            s, o = rng.choice(lits), rng.choice(lits)
            p = rng.choice(preds)
            out.append(T(domain, f'"{s}"::L', p, f'"{o}"::L'))
        return tuple(out)

    shared = rand_templates(1)  # forced mm- ∩ mm+ overlap, every trial
    mm_minus = rand_templates(rng.randrange(0, 3)) + shared
    mm_plus = rand_templates(rng.randrange(0, 3)) + shared
    mo_minus = tuple(VarRef(v) for v in rng.sample(["pa", "pb"],
                                                   rng.randrange(0, 3)))
    gens = []
    if rng.random() < 0.7:
        target = rng.choice(["pa", "pb", "pc"])
        gens.append(Generator(VarRef(target), "extractIMG",
                              (parse_expr_text("src(pb)", domain),
                               parse_expr_text("(0,0)..(9,9)", domain))))
    params = (Param("pa", OID_T), Param("pb", OID_T), Param("pc", OID_T))
    act = ActionDef("rand", params, mm_minus=mm_minus, mm_plus=mm_plus,
                    mo_minus=mo_minus, mo_plus=tuple(gens))
    sigma = {"pa": mk_oid("a1"), "pb": mk_oid("a2"),
             "pc": mk_oid(rng.choice(["a1", "a3"]))}
    return storage, act, sigma


def test_apply_matches_set_formula_oracle(rng, domain):
    for _ in range(150):
        storage, act, sigma = _random_case(rng, domain)
        inst = instantiate(act, sigma, domain, store=storage.objects)
        ground = inst.ground(storage.objects)
        got = apply_action(inst, storage)
        want_meta, want_objs = apply_oracle(
            storage, ground["mm_minus"], ground["mm_plus"],
            ground["mo_minus"], ground["mo_plus"])
        assert set(got.metadata.triples) == want_meta
        assert dict(got.objects.items()) == want_objs
        # the forced shared triple always survives
        shared = ground["mm_minus"] & ground["mm_plus"]
        assert shared and shared <= set(got.metadata.triples)


# -- lints ---------------------------------------------------------------------------

def test_lint_delete_without_metadata(domain):
    act = ActionDef("drop", (Param("a", OID_T),), mo_minus=(VarRef("a"),))
    assert len(lint_consistency(act)) == 1


def test_lint_get_image_clean(domain, get_image):
    assert lint_consistency(get_image) == []


def test_lint_empty_action_clean(domain):
    assert lint_consistency(ActionDef("noop", ())) == []


def test_lint_update_in_place_flagged(domain, cut_from_img):
    assert len(lint_consistency(cut_from_img)) == 1


def test_lint_storage_dangling_address(domain):
    storage = StorageInstance(
        MetadataGraph([Triple(literal("i1"), iri("mmdb:address"),
                              literal("gone"))]),
        ObjectStore())
    assert len(lint_storage(storage)) == 1
    ok = StorageInstance(
        MetadataGraph([Triple(literal("i1"), iri("mmdb:address"),
                              literal("img1"))]),
        ObjectStore({"img1": SyntheticImage(5, 5)}))
    assert lint_storage(ok) == []

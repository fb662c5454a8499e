"""Builders for the shipped pattern nets and channel-fusion composition.

Each builder returns a validated net exposing `ch_in`/`ch_out` channel
places; compose() fuses the upstream output channel with the downstream
input channel when their colors agree. Scenario helpers produce seeded
storage and markings for demos and tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .actions import ActionDef, Generator, Param, StorageInstance, TripleTemplate
from .errors import ChannelTypeMismatch
from .media import ObjectStore, Region, SyntheticImage
from .net import Inscription, MMNet, Place, Transition
from .netdef import emit_netdef
from .rdf import MetadataGraph, Triple, iri, literal
from .sparql import parse_query
from .terms import VarRef, parse_expr_text, parse_guard_text
from .values import (
    INT_T,
    IRI_T,
    LITERAL_T,
    OID_T,
    STR_T,
    TypeDomain,
    Value,
    format_rect,
    mk_oid,
    mk_str,
    standard_domain,
)


@dataclass
class PatternConfig:
    prefix: str = ""
    face_feature: str = "human face"
    product_feature: str = "product"
    face_predicate: str = "mmdb:faceSegment"
    product_predicate: str = "mmdb:prodSegment"
    accepted_tags: tuple = ("human", "product")
    shape: str = "oval"
    color: str = "red"
    name_supply: tuple = ("f0", "f1")
    domain: TypeDomain = field(default_factory=standard_domain)


def _vars(*names) -> Inscription:
    return Inscription(tuple(VarRef(n) for n in names))


def _exprs(domain, *texts) -> Inscription:
    return Inscription(tuple(parse_expr_text(t, domain) for t in texts))


def _template(domain, s, p, o) -> TripleTemplate:
    return TripleTemplate(parse_expr_text(s, domain), parse_expr_text(p, domain),
                          parse_expr_text(o, domain))


def _finish(net: MMNet, cfg: PatternConfig) -> MMNet:
    if cfg.prefix:
        net = net.renamed(cfg.prefix)
    return net


# -- Splitter --------------------------------------------------------------------

def build_splitter(cfg: PatternConfig | None = None) -> MMNet:
    """Iteratively extracts every tagged segment of the incoming image into
    its own stored object, then emits the collected (id, address) pairs.

    One departure from the source diagram: Start also seeds the `repeat`
    place, without which Split could never fire its first iteration."""
    cfg = cfg or PatternConfig()
    dom = cfg.domain
    net = MMNet("splitter", dom)
    pair_set = dom.set_type((STR_T, OID_T))

    net.add_place(Place("ch_in", "control", (STR_T, OID_T)))
    net.add_place(Place("counter", "control", (STR_T, OID_T, INT_T)))
    net.add_place(Place("ready", "control", (OID_T, STR_T, OID_T)))
    net.add_place(Place("repeat", "control", (STR_T, OID_T)))
    net.add_place(Place("out", "control", (pair_set,)))
    net.add_place(Place("pending", "control", (pair_set,)))
    net.add_place(Place("ch_out", "control", (STR_T, OID_T)))
    q1 = "SELECT ?id ?c WHERE { ?id mmdb:faceCount ?c }"
    q2 = f"SELECT ?id ?seg WHERE {{ ?id {cfg.face_predicate} ?seg }}"
    net.add_place(Place("seg_count", "view", (LITERAL_T, LITERAL_T),
                        parse_query(q1), q1))
    net.add_place(Place("segments", "view", (LITERAL_T, LITERAL_T),
                        parse_query(q2), q2))

    net.add_action(ActionDef(
        "getImage",
        (Param("a", OID_T), Param("seg", dom.type_named("rect")),
         Param("a2", OID_T), Param("id", STR_T), Param("n", STR_T),
         Param("id0", STR_T)),
        mm_minus=(_template(dom, "id0::L", cfg.face_predicate, "seg::L"),),
        mm_plus=(_template(dom, "id::L", "mmdb:address", "a2::L"),
                 _template(dom, "id::L", "mmdb:format", '".jpg"::L'),
                 _template(dom, "id::L", "mmdb:name", "n::L")),
        mo_plus=(Generator(VarRef("a2"), "extractIMG",
                           (parse_expr_text("src(a)", dom),
                            parse_expr_text("seg", dom))),),
    ))
    net.add_action(ActionDef(
        "cutFromIMG",
        (Param("a", OID_T), Param("a2", OID_T)),
        mo_plus=(Generator(VarRef("a"), "sub",
                           (parse_expr_text("src(a)", dom),
                            parse_expr_text("src(a2)", dom))),),
    ))

    net.add_transition(Transition(
        "Start", guard=parse_guard_text("id = id2::str", dom)))
    net.add_arc("in", "ch_in", "Start", _vars("id", "a"))
    net.add_arc("read", "seg_count", "Start", _vars("id2", "c"))
    net.add_arc("out", "counter", "Start", _exprs(dom, "id", "a", "c::int"))
    net.add_arc("out", "repeat", "Start", _vars("id", "a"))

    net.add_transition(Transition(
        "Split",
        guard=parse_guard_text("c > 0 and id = id2::str", dom),
        action="getImage",
        action_args=tuple(parse_expr_text(t, dom)
                          for t in ("a", "seg", "nu_a", "nu_id", "n", "id"))))
    net.add_arc("in", "counter", "Split", _vars("id", "a", "c"))
    net.add_arc("in", "out", "Split", _vars("s"))
    net.add_arc("in", "repeat", "Split", _vars("id", "a"))
    net.add_arc("read", "segments", "Split", _vars("id2", "seg"))
    net.add_arc("out", "counter", "Split", _exprs(dom, "id", "a", "c - 1"))
    net.add_arc("out", "ready", "Split", _vars("nu_a", "id", "a"))
    net.add_arc("out", "out", "Split", _exprs(dom, "ins(s, nu_id, nu_a)"))

    net.add_transition(Transition(
        "UpdateImage", action="cutFromIMG",
        action_args=(VarRef("a"), VarRef("a2"))))
    net.add_arc("in", "ready", "UpdateImage", _vars("a2", "id", "a"))
    net.add_arc("out", "repeat", "UpdateImage", _vars("id", "a"))

    net.add_transition(Transition(
        "Finish1", guard=parse_guard_text("c = 0 and empty(s)", dom)))
    net.add_arc("in", "counter", "Finish1", _vars("id", "a", "c"))
    net.add_arc("in", "out", "Finish1", _vars("s"))
    net.add_arc("out", "ch_out", "Finish1", _vars("id", "a"))

    net.add_transition(Transition(
        "Finish2", guard=parse_guard_text("c = 0 and not empty(s)", dom)))
    net.add_arc("in", "counter", "Finish2", _vars("id", "a", "c"))
    net.add_arc("in", "out", "Finish2", _vars("s"))
    net.add_arc("out", "pending", "Finish2", _vars("s"))

    net.add_transition(Transition(
        "Emit", guard=parse_guard_text("not empty(s)", dom)))
    net.add_arc("in", "pending", "Emit", _vars("s"))
    net.add_arc("out", "pending", "Emit", _exprs(dom, "rem(s, getL(s))"))
    net.add_arc("out", "ch_out", "Emit", _exprs(dom, "getL(s)"))

    net.init_marking["out"] = [(Value(pair_set, ()),)]
    net.init_supply["n"] = list(cfg.name_supply)
    net.channel_in, net.channel_out = "ch_in", "ch_out"
    return _finish(net, cfg)


# -- Message Filter -----------------------------------------------------------------

def build_message_filter(cfg: PatternConfig | None = None) -> MMNet:
    """Routes a message onward iff its image carries one of the accepted
    content tags; everything else is consumed and dropped."""
    cfg = cfg or PatternConfig()
    if not cfg.accepted_tags:
        raise ChannelTypeMismatch("message filter needs at least one accepted tag")
    dom = cfg.domain
    net = MMNet("filter", dom)

    net.add_place(Place("ch_in", "control", (STR_T, OID_T)))
    net.add_place(Place("ch_out", "control", (STR_T, OID_T)))
    q = "SELECT ?id ?tag WHERE { ?id mmdb:containsObj ?tag }"
    net.add_place(Place("tagged", "view", (LITERAL_T, LITERAL_T),
                        parse_query(q), q))

    ors = " or ".join(f'tag::str = "{t}"' for t in cfg.accepted_tags)
    net.add_transition(Transition(
        "Accept", guard=parse_guard_text(f"({ors}) and id2::str = id", dom)))
    net.add_arc("in", "ch_in", "Accept", _vars("id", "a"))
    net.add_arc("read", "tagged", "Accept", _vars("id2", "tag"))
    net.add_arc("out", "ch_out", "Accept", _vars("id", "a"))

    net.add_transition(Transition(
        "Discard", guard=parse_guard_text(f"not ({ors}) and id2::str = id", dom)))
    net.add_arc("in", "ch_in", "Discard", _vars("id", "a"))
    net.add_arc("read", "tagged", "Discard", _vars("id2", "tag"))

    net.channel_in, net.channel_out = "ch_in", "ch_out"
    return _finish(net, cfg)


# -- Content Enricher ---------------------------------------------------------------

def build_content_enricher(cfg: PatternConfig | None = None) -> MMNet:
    """Draws a configured shape around a stored segment of the message's
    image. The view keys each segment row by its metadata predicate, so the
    message key selects which segment kind to enrich."""
    cfg = cfg or PatternConfig()
    dom = cfg.domain
    net = MMNet("enricher", dom)

    net.add_place(Place("ch_in", "control", (STR_T, STR_T, OID_T)))
    net.add_place(Place("pair", "control", (STR_T, OID_T)))
    net.add_place(Place("keyed", "control", (STR_T, STR_T)))
    net.add_place(Place("segready", "control", (dom.type_named("rect"), STR_T)))
    net.add_place(Place("ch_out", "control", (STR_T, OID_T)))
    q = ("SELECT ?id ?k ?s WHERE { { ?id ?k ?s . FILTER(?k = %s) } UNION "
         "{ ?id ?k ?s . FILTER(?k = %s) } }"
         % (cfg.face_predicate, cfg.product_predicate))
    net.add_place(Place("keyed_segments", "view", (LITERAL_T, IRI_T, LITERAL_T),
                        parse_query(q), q))

    net.add_action(ActionDef(
        "updImage",
        (Param("a", OID_T), Param("seg", dom.type_named("rect"))),
        mo_plus=(Generator(VarRef("a"), "markIMG",
                           (parse_expr_text("src(a)", dom),
                            parse_expr_text("seg", dom),
                            parse_expr_text(f'"{cfg.shape}"', dom),
                            parse_expr_text(f'"{cfg.color}"', dom))),),
    ))

    net.add_transition(Transition("T"))
    net.add_arc("in", "ch_in", "T", _vars("k", "id", "a"))
    net.add_arc("out", "pair", "T", _vars("id", "a"))
    net.add_arc("out", "keyed", "T", _vars("k", "id"))

    net.add_transition(Transition(
        "GetSegment",
        guard=parse_guard_text("k2::L = k::L and id2::str = id", dom)))
    net.add_arc("in", "keyed", "GetSegment", _vars("k", "id"))
    net.add_arc("read", "keyed_segments", "GetSegment", _vars("id2", "k2", "seg"))
    net.add_arc("out", "segready", "GetSegment", _exprs(dom, "seg::rect", "id"))

    net.add_transition(Transition(
        "Enrich", action="updImage", action_args=(VarRef("a"), VarRef("seg"))))
    net.add_arc("in", "pair", "Enrich", _vars("id", "a"))
    net.add_arc("in", "segready", "Enrich", _vars("seg", "id"))
    net.add_arc("out", "ch_out", "Enrich", _vars("id", "a"))

    net.channel_in, net.channel_out = "ch_in", "ch_out"
    return _finish(net, cfg)


# -- Feature Detector ---------------------------------------------------------------

def build_feature_detector(cfg: PatternConfig | None = None) -> MMNet:
    """Counts tagged features of the image into metadata, then loops every
    detected segment of each kind into its own metadata triple."""
    cfg = cfg or PatternConfig()
    dom = cfg.domain
    net = MMNet("detector", dom)
    rect_set = dom.set_type((dom.type_named("rect"),))

    net.add_place(Place("ch_in", "control", (STR_T, OID_T)))
    net.add_place(Place("detected", "control", (STR_T, OID_T)))
    net.add_place(Place("faces", "control", (STR_T, OID_T, rect_set)))
    net.add_place(Place("products", "control", (STR_T, OID_T, rect_set)))
    net.add_place(Place("ch_out", "control", (STR_T, OID_T)))

    net.add_action(ActionDef(
        "addImgCnt",
        (Param("id", STR_T), Param("a", OID_T)),
        mm_plus=(
            _template(dom, "id::L", "mmdb:faceCount",
                      f'countIMGs(src(a), "{cfg.face_feature}")::L'),
            _template(dom, "id::L", "mmdb:prodCount",
                      f'countIMGs(src(a), "{cfg.product_feature}")::L'),
        ),
    ))
    net.add_action(ActionDef(
        "updMetadata",
        (Param("id", STR_T), Param("l", IRI_T),
         Param("seg", dom.type_named("rect"))),
        mm_plus=(_template(dom, "id::L", "l::I", "seg::L"),),
    ))

    net.add_transition(Transition(
        "Detect", action="addImgCnt", action_args=(VarRef("id"), VarRef("a"))))
    net.add_arc("in", "ch_in", "Detect", _vars("id", "a"))
    net.add_arc("out", "detected", "Detect", _vars("id", "a"))

    net.add_transition(Transition("GetFaceSegments"))
    net.add_arc("in", "detected", "GetFaceSegments", _vars("id", "a"))
    net.add_arc("out", "faces", "GetFaceSegments",
                _exprs(dom, "id", "a", f'detectIMG(src(a), "{cfg.face_feature}")'))

    net.add_transition(Transition(
        "UpdateFaceMetadata",
        guard=parse_guard_text("not empty(s)", dom),
        action="updMetadata",
        action_args=tuple(parse_expr_text(t, dom)
                          for t in ("id", cfg.face_predicate, "getL(s)"))))
    net.add_arc("in", "faces", "UpdateFaceMetadata", _vars("id", "a", "s"))
    net.add_arc("out", "faces", "UpdateFaceMetadata",
                _exprs(dom, "id", "a", "rem(s, getL(s))"))

    net.add_transition(Transition(
        "GetProductSegments", guard=parse_guard_text("empty(s)", dom)))
    net.add_arc("in", "faces", "GetProductSegments", _vars("id", "a", "s"))
    net.add_arc("out", "products", "GetProductSegments",
                _exprs(dom, "id", "a",
                       f'detectIMG(src(a), "{cfg.product_feature}")'))

    net.add_transition(Transition(
        "UpdateProductMetadata",
        guard=parse_guard_text("not empty(s)", dom),
        action="updMetadata",
        action_args=tuple(parse_expr_text(t, dom)
                          for t in ("id", cfg.product_predicate, "getL(s)"))))
    net.add_arc("in", "products", "UpdateProductMetadata", _vars("id", "a", "s"))
    net.add_arc("out", "products", "UpdateProductMetadata",
                _exprs(dom, "id", "a", "rem(s, getL(s))"))

    net.add_transition(Transition(
        "Finish", guard=parse_guard_text("empty(s)", dom)))
    net.add_arc("in", "products", "Finish", _vars("id", "a", "s"))
    net.add_arc("out", "ch_out", "Finish", _vars("id", "a"))

    net.channel_in, net.channel_out = "ch_in", "ch_out"
    return _finish(net, cfg)


BUILDERS = {
    "splitter": build_splitter,
    "filter": build_message_filter,
    "enricher": build_content_enricher,
    "detector": build_feature_detector,
}


# -- composition --------------------------------------------------------------------

def compose(upstream: MMNet, downstream: MMNet) -> MMNet:
    """Fuse the upstream output channel with the downstream input channel.
    All names are prefixed with their net's name to avoid collisions; the
    fused place keeps the downstream's (prefixed) channel name."""
    if not upstream.channel_out or not downstream.channel_in:
        raise ChannelTypeMismatch("both nets must declare their channels")
    up_color = upstream.place(upstream.channel_out).color
    down_color = downstream.place(downstream.channel_in).color
    if up_color != down_color:
        raise ChannelTypeMismatch(
            "channel colors differ: %s vs %s"
            % (" * ".join(t.name for t in up_color),
               " * ".join(t.name for t in down_color)))

    up_prefix, down_prefix = f"{upstream.name}_", f"{downstream.name}_"
    if up_prefix == down_prefix:
        up_prefix, down_prefix = f"{upstream.name}1_", f"{downstream.name}2_"
    up = upstream.renamed(up_prefix)
    down = downstream.renamed(down_prefix)

    fused = down.channel_in
    old = up.channel_out

    def rename_place(p):
        return fused if p == old else p

    net = MMNet(
        name=f"{upstream.name}_{downstream.name}",
        domain=up.domain,
        places={},
        transitions={**up.transitions, **down.transitions},
        actions={**up.actions, **down.actions},
        init_supply={**down.init_supply, **up.init_supply},
        channel_in=up.channel_in,
        channel_out=down.channel_out,
    )
    for name, p in {**up.places, **down.places}.items():
        if name != old:
            net.places[name] = p
    for (p, t), v in {**up.in_flow, **down.in_flow}.items():
        net.in_flow[(rename_place(p), t)] = list(v)
    for (p, t), v in {**up.read_flow, **down.read_flow}.items():
        net.read_flow[(rename_place(p), t)] = list(v)
    for (t, p), v in {**up.out_flow, **down.out_flow}.items():
        net.out_flow[(t, rename_place(p))] = list(v)
    for p, toks in {**up.init_marking, **down.init_marking}.items():
        net.init_marking.setdefault(rename_place(p), []).extend(toks)
    return net


def with_key_adapter(net: MMNet, key: str) -> MMNet:
    """Wrap a net whose input channel wants a (key, id, address) message with
    an adapter that injects a constant key into plain (id, address) tokens."""
    wrapped = net.renamed("")
    inner = wrapped.channel_in
    adapter_place = "adapted_ch_in"
    wrapped.add_place(Place(adapter_place, "control", (STR_T, OID_T)))
    wrapped.add_transition(Transition("InjectKey"))
    wrapped.add_arc("in", adapter_place, "InjectKey", _vars("id", "a"))
    wrapped.add_arc("out", inner, "InjectKey",
                    _exprs(wrapped.domain, f'"{key}"', "id", "a"))
    wrapped.channel_in = adapter_place
    return wrapped


def emit_pattern(name: str, cfg: PatternConfig | None = None) -> str:
    """Net-definition text of a shipped pattern, reloadable by the loader."""
    return emit_netdef(BUILDERS[name](cfg))


# -- scenario seeds -----------------------------------------------------------------

def _face_boxes(k: int):
    return [(10 * i + 1, 10, 10 * i + 9, 20) for i in range(k)]


def splitter_seed(k: int, cfg: PatternConfig | None = None,
                  image_id="i1", address="img1") -> tuple[StorageInstance, dict]:
    """Storage with one image of k tagged segments plus the faceCount and
    per-segment triples the splitter's views expect, and the channel token."""
    cfg = cfg or PatternConfig()
    boxes = _face_boxes(k)
    img = SyntheticImage(100, 100,
                         tuple(Region(cfg.face_feature, b) for b in boxes))
    triples = [Triple(literal(image_id), iri("mmdb:faceCount"), literal(str(k)))]
    for b in boxes:
        triples.append(Triple(literal(image_id), iri(cfg.face_predicate),
                              literal(format_rect(b))))
    storage = StorageInstance(MetadataGraph(triples),
                              ObjectStore({address: img}))
    marking = {"ch_in": [(mk_str(image_id), mk_oid(address))]}
    return storage, marking


def filter_seed(tag: str, image_id="i1", address="img1") -> tuple[StorageInstance, dict]:
    storage = StorageInstance(
        MetadataGraph([Triple(literal(image_id), iri("mmdb:containsObj"),
                              literal(tag))]),
        ObjectStore({address: SyntheticImage(64, 64)}))
    marking = {"ch_in": [(mk_str(image_id), mk_oid(address))]}
    return storage, marking


def enricher_seed(cfg: PatternConfig | None = None, image_id="i1",
                  address="img1") -> tuple[StorageInstance, dict]:
    cfg = cfg or PatternConfig()
    box = (10, 10, 30, 30)
    img = SyntheticImage(100, 100, (Region(cfg.face_feature, box),))
    storage = StorageInstance(
        MetadataGraph([Triple(literal(image_id), iri(cfg.face_predicate),
                              literal(format_rect(box)))]),
        ObjectStore({address: img}))
    marking = {"ch_in": [(mk_str(cfg.face_predicate), mk_str(image_id),
                          mk_oid(address))]}
    return storage, marking


def detector_seed(faces: int, products: int, cfg: PatternConfig | None = None,
                  image_id="i1", address="img1") -> tuple[StorageInstance, dict]:
    cfg = cfg or PatternConfig()
    regions = [Region(cfg.face_feature, b) for b in _face_boxes(faces)]
    regions += [Region(cfg.product_feature, (10 * i + 1, 40, 10 * i + 9, 50))
                for i in range(products)]
    img = SyntheticImage(100, 100, tuple(regions))
    storage = StorageInstance(MetadataGraph(), ObjectStore({address: img}))
    marking = {"ch_in": [(mk_str(image_id), mk_oid(address))]}
    return storage, marking


def pipeline_net(cfg: PatternConfig | None = None) -> MMNet:
    cfg = cfg or PatternConfig()
    return compose(build_feature_detector(cfg),
                   compose(build_message_filter(cfg), build_splitter(cfg)))


def pipeline_seed(faces: int = 2, tag: str = "human",
                  cfg: PatternConfig | None = None, image_id="i1",
                  address="img1") -> tuple[StorageInstance, dict]:
    """One tagged image with face regions; the detector writes the counts
    and segments that the downstream splitter consumes."""
    cfg = cfg or PatternConfig()
    img = SyntheticImage(100, 100, tuple(Region(cfg.face_feature, b)
                                         for b in _face_boxes(faces)))
    storage = StorageInstance(
        MetadataGraph([Triple(literal(image_id), iri("mmdb:containsObj"),
                              literal(tag))]),
        ObjectStore({address: img}))
    marking = {"detector_ch_in": [(mk_str(image_id), mk_oid(address))]}
    return storage, marking

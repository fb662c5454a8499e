import pytest

from mmnet.errors import ParseError
from mmnet.net import validate
from mmnet.netdef import emit_netdef, parse_netdef
from mmnet.patterns import (
    PatternConfig,
    build_content_enricher,
    build_feature_detector,
    build_message_filter,
    build_splitter,
    pipeline_net,
)
from mmnet.values import Value, mk_int, mk_oid, mk_str

SAMPLE = """
# a toy mover
net mover

channels {
  in: src
  out: dst
}

actions {
  action note(x: str, y: str) {
    add-mm { (x::L, mmdb:seen, y::L) }
  }
}

places {
  place src: str * oid
  place dst: str * oid
  place bag: set(str, oid)
  view place seen: L * L query = \"\"\"SELECT ?a ?b WHERE { ?a mmdb:seen ?b }\"\"\"
}

transitions {
  transition Move {
    guard: not (id = "stop") and c2::str = id or true
    action: note(id, id)
    in src: (id, a)
    in bag: (s)
    read seen: (c1, c2)
    out dst: (id, a)
    out bag: (ins(s, id, a))
  }
}

init {
  triples: "mover.nt"
  marking {
    src: ("i1", @img1)
    src: ("i2", @img2)
    bag: ({})
  }
  supply {
    n: ["a", "b"]
  }
}
"""


def test_parse_sample_sections():
    net = parse_netdef(SAMPLE)
    assert net.name == "mover"
    assert net.channel_in == "src"
    assert net.channel_out == "dst"
    assert set(net.places) == {"src", "dst", "bag", "seen"}
    assert net.places["seen"].is_view
    assert "note" in net.actions
    assert net.triples_file == "mover.nt"
    assert net.init_supply == {"n": ["a", "b"]}
    assert net.init_marking["src"] == [(mk_str("i1"), mk_oid("img1")),
                                       (mk_str("i2"), mk_oid("img2"))]
    # the {} token adopted the place's set color
    (tok,) = net.init_marking["bag"]
    assert tok[0].type.name == "set(str, oid)"
    assert tok[0].payload == ()


def test_sample_round_trip_stable():
    net = parse_netdef(SAMPLE)
    text = emit_netdef(net)
    net2 = parse_netdef(text)
    assert emit_netdef(net2) == text


@pytest.mark.parametrize("build", [
    build_splitter, build_message_filter, build_content_enricher,
    build_feature_detector, pipeline_net,
])
def test_patterns_round_trip(build):
    net = build(PatternConfig())
    text = emit_netdef(net)
    net2 = parse_netdef(text)
    assert emit_netdef(net2) == text
    assert validate(net2) == []
    assert set(net2.places) == set(net.places)
    assert set(net2.transitions) == set(net.transitions)
    assert net2.channel_in == net.channel_in
    assert net2.channel_out == net.channel_out
    assert net2.init_supply == net.init_supply


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as err:
        parse_netdef("net x\nplaces {\n  place p: str &\n}")
    assert err.value.line == 3


def test_unknown_section_rejected():
    with pytest.raises(ParseError):
        parse_netdef("net x\nwidgets { }")


def test_unknown_type_rejected():
    with pytest.raises(ParseError):
        parse_netdef("net x\nplaces { place p: quux }")


def test_marking_must_be_constant():
    bad = "net x\nplaces { place p: str }\ninit { marking { p: (y) } }"
    with pytest.raises(ParseError) as err:
        parse_netdef(bad)
    assert "constant" in str(err.value)


def test_generator_must_produce_media():
    bad = """
net x
actions {
  action a(i: int) {
    add-mo { @o -> succ(i) }
  }
}
"""
    with pytest.raises(ParseError) as err:
        parse_netdef(bad)
    assert "media" in str(err.value)


def test_rect_and_int_constants_in_marking():
    text = """
net x
places { place p: rect * int }
init { marking { p: ((1,2)..(3,4), 7) } }
"""
    net = parse_netdef(text)
    (tok,) = net.init_marking["p"]
    assert tok == (Value(net.domain.type_named("rect"), (1, 2, 3, 4)), mk_int(7))


def test_comments_and_casts():
    text = """
net x  # named x
places {
  place p: L   # literal tokens
}
init { marking { p: ("seven"::L) } }
"""
    net = parse_netdef(text)
    (tok,) = net.init_marking["p"]
    assert tok[0].type.name == "L"

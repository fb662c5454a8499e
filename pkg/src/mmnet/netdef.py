"""Net-definition text format: loader and emitter.

Sections: `net NAME`, then any of `channels`, `types`, `actions`, `places`,
`transitions`, `init` in braces. Comments run from `#` to end of line. The
full grammar is documented in docs/net-format.md; every shipped pattern is
emitted in this format and loads back through this parser.
"""

from __future__ import annotations

from .actions import ActionDef, Generator, Param, TripleTemplate
from .errors import ParseError
from .net import Inscription, MMNet, Place, Transition
from .sparql import parse_query, unparse
from .terms import (
    Const,
    EmptySetLit,
    ExprParser,
    TokenStream,
    eval_expr,
    render_expr,
    render_guard,
)
from .values import MEDIA, SET, DataType, TypeDomain, Value, standard_domain

ARC_KINDS = ("in", "read", "out")


class _NetParser:
    def __init__(self, text: str, domain: TypeDomain):
        self.s = TokenStream(text)
        self.domain = domain
        self.expr = ExprParser(self.s, domain)

    def fail(self, msg):
        self.s.fail(msg)

    def ident(self) -> str:
        return self.s.expect("IDENT").text

    def parse(self) -> MMNet:
        self.s.expect("IDENT", "net")
        net = MMNet(name=self.ident(), domain=self.domain)
        while not self.s.at("EOF"):
            section = self.ident()
            if section == "channels":
                self._channels(net)
            elif section == "types":
                self._types(net)
            elif section == "actions":
                self._actions(net)
            elif section == "places":
                self._places(net)
            elif section == "transitions":
                self._transitions(net)
            elif section == "init":
                self._init(net)
            else:
                self.fail(f"unknown section {section!r}")
        return net

    def _channels(self, net):
        self.s.expect("PUNCT", "{")
        while not self.s.accept("PUNCT", "}"):
            which = self.ident()
            self.s.expect("PUNCT", ":")
            name = self.ident()
            if which == "in":
                net.channel_in = name
            elif which == "out":
                net.channel_out = name
            else:
                self.fail("channels section takes 'in' and 'out' entries")

    def _types(self, net):
        self.s.expect("PUNCT", "{")
        while not self.s.accept("PUNCT", "}"):
            kw = self.ident()
            if kw != "media":
                self.fail("types section declares media formats: media NAME")
            name = self.ident()
            if name not in self.domain.types:
                self.fail(f"media type {name!r} is not registered in the "
                          f"type domain")

    def _actions(self, net):
        self.s.expect("PUNCT", "{")
        while not self.s.accept("PUNCT", "}"):
            self.s.expect("IDENT", "action")
            name = self.ident()
            self.s.expect("PUNCT", "(")
            params = []
            if not self.s.at_punct(")"):
                while True:
                    pname = self.ident()
                    self.s.expect("PUNCT", ":")
                    params.append(Param(pname, self.expr.parse_typeref()))
                    if not self.s.accept("PUNCT", ","):
                        break
            self.s.expect("PUNCT", ")")
            self.s.expect("PUNCT", "{")
            blocks = {"del-mm": [], "add-mm": [], "del-mo": [], "add-mo": []}
            while not self.s.accept("PUNCT", "}"):
                key = self._block_name()
                if key in ("del-mm", "add-mm"):
                    blocks[key].extend(self._triple_block())
                elif key == "del-mo":
                    blocks[key].extend(self._expr_block())
                else:
                    blocks[key].extend(self._generator_block())
            tok = self.s.peek()
            try:
                net.add_action(ActionDef(
                    name, tuple(params),
                    mm_minus=tuple(blocks["del-mm"]),
                    mm_plus=tuple(blocks["add-mm"]),
                    mo_minus=tuple(blocks["del-mo"]),
                    mo_plus=tuple(blocks["add-mo"])))
            except Exception as exc:
                raise ParseError(str(exc), tok.line, tok.col)

    def _block_name(self) -> str:
        first = self.ident()
        self.s.expect("PUNCT", "-")
        second = self.ident()
        key = f"{first}-{second}"
        if key not in ("del-mm", "add-mm", "del-mo", "add-mo"):
            self.fail(f"unknown action block {key!r}")
        return key

    def _triple_block(self):
        self.s.expect("PUNCT", "{")
        out = []
        while not self.s.accept("PUNCT", "}"):
            self.s.expect("PUNCT", "(")
            s = self.expr.parse_expr()
            self.s.expect("PUNCT", ",")
            p = self.expr.parse_expr()
            self.s.expect("PUNCT", ",")
            o = self.expr.parse_expr()
            self.s.expect("PUNCT", ")")
            out.append(TripleTemplate(s, p, o))
            self.s.accept("PUNCT", ",")
        return out

    def _expr_block(self):
        self.s.expect("PUNCT", "{")
        out = []
        while not self.s.accept("PUNCT", "}"):
            out.append(self.expr.parse_expr())
            self.s.accept("PUNCT", ",")
        return out

    def _generator_block(self):
        self.s.expect("PUNCT", "{")
        out = []
        while not self.s.accept("PUNCT", "}"):
            target = self.expr.parse_expr()
            self.s.expect("ARROW")
            tok = self.s.peek()
            fname = self.ident()
            sig = self.domain.functions.get(fname)
            if sig is None:
                raise ParseError(f"unknown generator function {fname!r}",
                                 tok.line, tok.col)
            if sig.result is None or not sig.result.is_media:
                raise ParseError(
                    f"generator function {fname!r} must produce a media "
                    f"object", tok.line, tok.col)
            self.s.expect("PUNCT", "(")
            args = []
            if not self.s.at_punct(")"):
                args.append(self.expr.parse_expr())
                while self.s.accept("PUNCT", ","):
                    args.append(self.expr.parse_expr())
            self.s.expect("PUNCT", ")")
            out.append(Generator(target, fname, tuple(args)))
            self.s.accept("PUNCT", ",")
        return out

    def _places(self, net):
        self.s.expect("PUNCT", "{")
        while not self.s.accept("PUNCT", "}"):
            kw = self.ident()
            is_view = False
            if kw == "view":
                is_view = True
                self.s.expect("IDENT", "place")
            elif kw != "place":
                self.fail("expected 'place' or 'view place'")
            name = self.ident()
            self.s.expect("PUNCT", ":")
            color = [self.expr.parse_typeref()]
            while self.s.accept("PUNCT", "*"):
                color.append(self.expr.parse_typeref())
            query = query_text = None
            if self.s.at("IDENT", "query"):
                self.s.next()
                self.s.expect("PUNCT", "=")
                tok = self.s.expect("TRIPLESTRING")
                query_text = tok.text[3:-3].strip()
                try:
                    query = parse_query(query_text)
                except ParseError as exc:
                    raise ParseError(f"in query of place {name}: {exc}",
                                     tok.line, tok.col)
            net.add_place(Place(name, "view" if is_view else "control",
                                tuple(color), query, query_text))

    def _transitions(self, net):
        self.s.expect("PUNCT", "{")
        while not self.s.accept("PUNCT", "}"):
            self.s.expect("IDENT", "transition")
            name = self.ident()
            self.s.expect("PUNCT", "{")
            guard = None
            action = None
            action_args = ()
            arcs = []
            while not self.s.accept("PUNCT", "}"):
                kw = self.ident()
                if kw == "guard":
                    self.s.expect("PUNCT", ":")
                    guard = self.expr.parse_guard()
                elif kw == "action":
                    self.s.expect("PUNCT", ":")
                    action = self.ident()
                    self.s.expect("PUNCT", "(")
                    args = []
                    if not self.s.at_punct(")"):
                        args.append(self.expr.parse_expr())
                        while self.s.accept("PUNCT", ","):
                            args.append(self.expr.parse_expr())
                    self.s.expect("PUNCT", ")")
                    action_args = tuple(args)
                elif kw in ARC_KINDS:
                    pname = self.ident()
                    self.s.expect("PUNCT", ":")
                    arcs.append((kw, pname, self._inscription(net, pname)))
                else:
                    self.fail(f"unknown transition entry {kw!r}")
            net.add_transition(Transition(name, guard, action, action_args))
            for kind, pname, ins in arcs:
                net.add_arc(kind, pname, name, ins)

    def _inscription(self, net, pname) -> Inscription:
        self.s.expect("PUNCT", "(")
        items = []
        if not self.s.at_punct(")"):
            items.append(self.expr.parse_expr())
            while self.s.accept("PUNCT", ","):
                items.append(self.expr.parse_expr())
        self.s.expect("PUNCT", ")")
        items = self._coerce_empty_sets(net, pname, items)
        return Inscription(tuple(items))

    def _coerce_empty_sets(self, net, pname, items):
        """`{}` adopts the set type from the place color when arities align."""
        place = net.places.get(pname)
        if place is None or len(items) != len(place.color):
            return items
        out = []
        for item, comp in zip(items, place.color):
            if isinstance(item, EmptySetLit) and comp.kind == SET:
                out.append(Const(Value(comp, ())))
            else:
                out.append(item)
        return out

    def _init(self, net):
        self.s.expect("PUNCT", "{")
        while not self.s.accept("PUNCT", "}"):
            kw = self.ident()
            if kw == "triples":
                self.s.expect("PUNCT", ":")
                net.triples_file = self.s.expect("STRING").text[1:-1]
            elif kw == "objects":
                self.s.expect("PUNCT", ":")
                net.objects_file = self.s.expect("STRING").text[1:-1]
            elif kw == "marking":
                self.s.expect("PUNCT", "{")
                while not self.s.accept("PUNCT", "}"):
                    pname = self.ident()
                    self.s.expect("PUNCT", ":")
                    tok = self.s.peek()
                    ins = self._inscription(net, pname)
                    token = self._const_token(ins, tok)
                    net.init_marking.setdefault(pname, []).append(token)
            elif kw == "supply":
                self.s.expect("PUNCT", "{")
                while not self.s.accept("PUNCT", "}"):
                    var = self.ident()
                    self.s.expect("PUNCT", ":")
                    self.s.expect("PUNCT", "[")
                    values = []
                    while not self.s.accept("PUNCT", "]"):
                        values.append(self._supply_text())
                        self.s.accept("PUNCT", ",")
                    net.init_supply[var] = values
            else:
                self.fail(f"unknown init entry {kw!r}")

    def _const_token(self, ins: Inscription, tok):
        values = []
        for item in ins.items:
            try:
                v = eval_expr(item, {}, self.domain, None)
            except Exception as exc:
                raise ParseError(f"marking tokens must be constants: {exc}",
                                 tok.line, tok.col)
            values.append(v)
        return tuple(values)

    def _supply_text(self) -> str:
        tok = self.s.next()
        if tok.kind == "STRING":
            return tok.text[1:-1]
        if tok.kind in ("INT", "OIDLIT", "RECT", "PNAME", "IDENT"):
            return tok.text
        raise ParseError(f"bad supply value {tok.text!r}", tok.line, tok.col)


def parse_netdef(text: str, domain: TypeDomain | None = None) -> MMNet:
    return _NetParser(text, domain or standard_domain()).parse()


def load_net_file(path, domain: TypeDomain | None = None) -> MMNet:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_netdef(fh.read(), domain)


# -- emitter ---------------------------------------------------------------------

def _emit_color(color) -> str:
    return " * ".join(t.name for t in color)


def _emit_action(a: ActionDef) -> list[str]:
    params = ", ".join(f"{p.name}: {p.type.name}" for p in a.params)
    lines = [f"  action {a.name}({params}) {{"]
    if a.mm_minus:
        lines.append("    del-mm {")
        for t in a.mm_minus:
            lines.append("      (%s, %s, %s)" % tuple(render_expr(x)
                                                      for x in t.positions()))
        lines.append("    }")
    if a.mm_plus:
        lines.append("    add-mm {")
        for t in a.mm_plus:
            lines.append("      (%s, %s, %s)" % tuple(render_expr(x)
                                                      for x in t.positions()))
        lines.append("    }")
    if a.mo_minus:
        lines.append("    del-mo { %s }" % ", ".join(render_expr(e)
                                                     for e in a.mo_minus))
    if a.mo_plus:
        lines.append("    add-mo {")
        for g in a.mo_plus:
            args = ", ".join(render_expr(x) for x in g.args)
            lines.append(f"      {render_expr(g.target)} -> {g.func}({args})")
        lines.append("    }")
    lines.append("  }")
    return lines


def emit_netdef(net: MMNet) -> str:
    """Render a net as definition text; parsing the result reproduces the
    net (same emitted text, same behavior)."""
    out = [f"net {net.name}", ""]
    if net.channel_in or net.channel_out:
        out.append("channels {")
        if net.channel_in:
            out.append(f"  in: {net.channel_in}")
        if net.channel_out:
            out.append(f"  out: {net.channel_out}")
        out.append("}")
        out.append("")
    if net.actions:
        out.append("actions {")
        for a in net.actions.values():
            out.extend(_emit_action(a))
        out.append("}")
        out.append("")
    out.append("places {")
    for p in net.places.values():
        head = "view place" if p.is_view else "place"
        line = f"  {head} {p.name}: {_emit_color(p.color)}"
        if p.is_view:
            text = p.query_text or (unparse(p.query) if p.query else "")
            line += f' query = """{text}"""'
        out.append(line)
    out.append("}")
    out.append("")
    out.append("transitions {")
    for t in net.transitions.values():
        out.append(f"  transition {t.name} {{")
        if t.guard is not None:
            out.append(f"    guard: {render_guard(t.guard)}")
        if t.action:
            args = ", ".join(render_expr(a) for a in t.action_args)
            out.append(f"    action: {t.action}({args})")
        for (p, tt), inscriptions in sorted(net.in_flow.items()):
            if tt == t.name:
                for ins in inscriptions:
                    out.append("    in %s: (%s)" % (
                        p, ", ".join(render_expr(i) for i in ins.items)))
        for (p, tt), inscriptions in sorted(net.read_flow.items()):
            if tt == t.name:
                for ins in inscriptions:
                    out.append("    read %s: (%s)" % (
                        p, ", ".join(render_expr(i) for i in ins.items)))
        for (tt, p), inscriptions in sorted(net.out_flow.items()):
            if tt == t.name:
                for ins in inscriptions:
                    out.append("    out %s: (%s)" % (
                        p, ", ".join(render_expr(i) for i in ins.items)))
        out.append("  }")
    out.append("}")
    if (net.triples_file or net.objects_file or net.init_marking
            or net.init_supply):
        out.append("")
        out.append("init {")
        if net.triples_file:
            out.append(f'  triples: "{net.triples_file}"')
        if net.objects_file:
            out.append(f'  objects: "{net.objects_file}"')
        if net.init_marking:
            out.append("  marking {")
            for pname, tokens in net.init_marking.items():
                for tok in tokens:
                    from .values import render_value
                    out.append("    %s: (%s)" % (
                        pname, ", ".join(render_value(v) for v in tok)))
            out.append("  }")
        if net.init_supply:
            out.append("  supply {")
            for var, values in net.init_supply.items():
                rendered = ", ".join(f'"{v}"' for v in values)
                out.append(f"    {var}: [{rendered}]")
            out.append("  }")
        out.append("}")
    return "\n".join(out) + "\n"

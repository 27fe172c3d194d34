"""Parser for the ``.hcpn`` net-definition format.

::

    colorset STRING = string;
    colorset PACKET = product STRING * STRING * INT;
    var s, d : STRING;
    main Top;
    page Top {
      place p : PACKET init 1`("ATC","Data",0);
      trans go guard s = "CS";
      arc p -> go : 1`(s,d,t);
      subst Sub uses Worker { bind p = inbox; }
    }

Expressions are parsed after all declarations are known, so variables and
color sets may be declared anywhere in the file.
"""
from __future__ import annotations

from typing import List, Optional, Tuple

from ..exprlang import (BOOL, Env, SourceError, Token, TokenStream, parse_tokens,
                        tokenize)
from ..kernel import ColorSet
from .model import (ArcDef, Diagnostic, ModelDef, ModelError, PageDef, PlaceDef,
                    SubstitutionDef, TransitionDef)

_BASE_KINDS = ("unit", "bool", "int", "string")
_EXPR_RESERVED = {"andalso", "orelse", "not", "true", "false"}


class _Raw:
    """Declaration skeleton with unparsed expression token slices."""

    def __init__(self):
        self.colorsets: List[tuple] = []  # (name tok, kind, [component toks])
        self.vars: List[tuple] = []  # (name tok, colorset tok)
        self.mains: List[Token] = []
        self.pages: List[tuple] = []  # (name tok, [elements])


def _diag(err: SourceError) -> Diagnostic:
    return Diagnostic(err.code, err.message, err.line, err.col)


def _slice_until(ts: TokenStream, stops: Tuple[str, ...]) -> List[Token]:
    """Collect expression tokens up to (not including) a stop word at
    bracket depth zero."""
    out: List[Token] = []
    depth = 0
    while True:
        tok = ts.peek()
        if tok.kind == "EOF":
            raise SourceError("unexpected end of input inside expression", tok.line, tok.col)
        if depth == 0 and tok.kind in ("SYM", "NAME") and tok.text in stops:
            break
        if tok.kind == "SYM" and tok.text == "(":
            depth += 1
        elif tok.kind == "SYM" and tok.text == ")":
            depth -= 1
        elif tok.kind == "SYM" and tok.text in ("{", "}"):
            raise SourceError(f"unexpected {tok.text!r} inside expression", tok.line, tok.col)
        out.append(ts.next())
    if not out:
        tok = ts.peek()
        raise SourceError("expected an expression", tok.line, tok.col)
    return out


def _parse_raw(tokens: List[Token]) -> _Raw:
    ts = TokenStream(tokens)
    raw = _Raw()
    while ts.peek().kind != "EOF":
        tok = ts.expect_name("declaration")
        kw = tok.text
        if kw == "colorset":
            name = ts.expect_name("color set name")
            ts.expect("=")
            kind_tok = ts.expect_name("color set kind")
            comps: List[Token] = []
            if kind_tok.text == "product":
                comps.append(ts.expect_name("component color set"))
                while ts.accept("*"):
                    comps.append(ts.expect_name("component color set"))
            elif kind_tok.text not in _BASE_KINDS:
                raise SourceError(f"unknown color set kind {kind_tok.text!r}", kind_tok.line, kind_tok.col)
            ts.expect(";")
            raw.colorsets.append((name, kind_tok, comps))
        elif kw == "var":
            names = [ts.expect_name("variable name")]
            while ts.accept(","):
                names.append(ts.expect_name("variable name"))
            ts.expect(":")
            cs = ts.expect_name("color set name")
            ts.expect(";")
            raw.vars.extend((n, cs) for n in names)
        elif kw == "main":
            raw.mains.append(ts.expect_name("page name"))
            ts.expect(";")
        elif kw == "page":
            name = ts.expect_name("page name")
            ts.expect("{")
            elems = []
            while not ts.accept("}"):
                elems.append(_parse_element(ts))
            raw.pages.append((name, elems))
        else:
            raise SourceError(f"unknown declaration {kw!r}", tok.line, tok.col)
    return raw


def _parse_element(ts: TokenStream):
    tok = ts.expect_name("page element")
    kw = tok.text
    if kw == "place":
        name = ts.expect_name("place name")
        ts.expect(":")
        cs = ts.expect_name("color set name")
        init = None
        port = "none"
        if ts.accept("init"):
            init = _slice_until(ts, (";", "port"))
        if ts.accept("port"):
            ptok = ts.expect_name("port kind")
            if ptok.text not in ("in", "out", "inout"):
                raise SourceError(f"port kind must be in, out or inout, not {ptok.text!r}",
                                  ptok.line, ptok.col)
            port = ptok.text
        ts.expect(";")
        return ("place", name, cs, init, port)
    if kw == "trans":
        name = ts.expect_name("transition name")
        guard = None
        if ts.accept("guard"):
            guard = _slice_until(ts, (";",))
        ts.expect(";")
        return ("trans", name, guard)
    if kw == "arc":
        src = ts.expect_name("arc source")
        ts.expect("->")
        dst = ts.expect_name("arc target")
        ts.expect(":")
        expr = _slice_until(ts, (";",))
        ts.expect(";")
        return ("arc", tok, src, dst, expr)
    if kw == "subst":
        name = ts.expect_name("substitution name")
        ts.expect("uses")
        sub = ts.expect_name("page name")
        ts.expect("{")
        binds = []
        while not ts.accept("}"):
            ts.expect("bind")
            socket = ts.expect_name("socket place")
            ts.expect("=")
            port = ts.expect_name("port place")
            ts.expect(";")
            binds.append((socket, port))
        return ("subst", name, sub, binds)
    raise SourceError(f"unknown page element {kw!r}", tok.line, tok.col)


def parse_model(text: str) -> ModelDef:
    """Parse ``.hcpn`` text.

    Raises ModelError carrying positioned diagnostics for syntax errors,
    duplicate names, unresolved color sets/variables/pages and ill-typed
    expressions. Structural rules are left to ``validate_model``.
    """
    try:
        tokens = tokenize(text)
        raw = _parse_raw(tokens)
    except SourceError as err:
        raise ModelError([_diag(err)]) from None
    diags: List[Diagnostic] = []

    def err(code, msg, tok: Optional[Token] = None):
        diags.append(Diagnostic(code, msg, tok.line if tok else 0, tok.col if tok else 0))

    colorsets = {}
    for name, kind_tok, comps in raw.colorsets:
        if name.text in colorsets:
            err("duplicate", f"duplicate color set {name.text!r}", name)
            continue
        components = []
        for c in comps:
            if c.text not in colorsets:
                err("unknown", f"unknown color set {c.text!r}", c)
            else:
                components.append(colorsets[c.text])
        if len(components) != len(comps):
            continue
        try:
            colorsets[name.text] = ColorSet(name.text, kind_tok.text, tuple(components))
        except ValueError as e:
            err("type", str(e), name)

    variables = {}
    for name, cs in raw.vars:
        if name.text in variables:
            err("duplicate", f"duplicate variable {name.text!r}", name)
        elif name.text in _EXPR_RESERVED:
            err("syntax", f"{name.text!r} is reserved", name)
        elif cs.text not in colorsets:
            err("unknown", f"unknown color set {cs.text!r}", cs)
        else:
            variables[name.text] = colorsets[cs.text]
    env = Env(colorsets, variables)

    def expr(toks, expected):
        try:
            return parse_tokens(toks, env, expected)
        except SourceError as e:
            diags.append(_diag(e))
            return None

    pages = {}
    for pname, elems in raw.pages:
        if pname.text in pages:
            err("duplicate", f"duplicate page {pname.text!r}", pname)
            continue
        page = PageDef(pname.text, line=pname.line, col=pname.col)
        names = set()
        arcs_raw = []
        for el in elems:
            kind = el[0]
            if kind == "arc":
                arcs_raw.append(el)
                continue
            ntok = el[1]
            if ntok.text in names:
                err("duplicate", f"duplicate name {ntok.text!r} on page {pname.text}", ntok)
                continue
            names.add(ntok.text)
            if kind == "place":
                _, _, cstok, init, port = el
                cs = colorsets.get(cstok.text)
                if cs is None:
                    err("unknown", f"unknown color set {cstok.text!r}", cstok)
                    continue
                init_expr = expr(init, cs) if init is not None else None
                page.places[ntok.text] = PlaceDef(ntok.text, cs, init_expr, port, ntok.line, ntok.col)
            elif kind == "trans":
                guard = expr(el[2], BOOL) if el[2] is not None else None
                page.transitions[ntok.text] = TransitionDef(ntok.text, guard, ntok.line, ntok.col)
            else:
                _, _, subtok, binds = el
                page.substitutions[ntok.text] = SubstitutionDef(
                    ntok.text, subtok.text, tuple((s.text, p.text) for s, p in binds),
                    ntok.line, ntok.col)
        for i, (_, kwtok, src, dst, etoks) in enumerate(arcs_raw):
            if src.text in page.places and dst.text in page.transitions:
                direction, place = "in", page.places[src.text]
            elif src.text in page.transitions and dst.text in page.places:
                direction, place = "out", page.places[dst.text]
            else:
                for t in (src, dst):
                    if t.text in page.substitutions:
                        err("arc", f"arc endpoint {t.text!r} is a substitution transition", t)
                        break
                    if t.text not in page.places and t.text not in page.transitions:
                        err("unknown", f"unknown arc endpoint {t.text!r} on page {pname.text}", t)
                        break
                else:
                    err("arc", f"arc {src.text} -> {dst.text} must connect a place and a transition", kwtok)
                continue
            e = expr(etoks, place.colorset)
            if e is not None:
                page.arcs.append(ArcDef(f"a{i + 1}", src.text, dst.text, e, direction,
                                        kwtok.line, kwtok.col))
        pages[pname.text] = page

    main = None
    if len(raw.mains) != 1:
        tok = raw.mains[1] if len(raw.mains) > 1 else None
        err("main", "exactly one 'main' declaration is required", tok)
    else:
        main = raw.mains[0].text
        if main not in pages:
            err("unknown", f"unknown main page {main!r}", raw.mains[0])
    if diags:
        raise ModelError(diags)
    return ModelDef(colorsets, variables, pages, main)

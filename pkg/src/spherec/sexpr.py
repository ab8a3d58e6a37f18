"""Parser and canonical printer for the formula-source s-expression grammar.

    sentence := "(sentence" free? prefix? body ")"
    free     := "(free" blockdecl+ ")"
    prefix   := "(prefix" qblock+ ")"
    blockdecl:= "(" NAME INT [RATIONAL | "free"] ")"
    qblock   := "(" ("exists"|"forall") NAME INT ")"
    body     := "(body" bool ")"
    bool     := atom | "(and" bool+ ")" | "(or" bool+ ")" | "(not" bool ")"
    atom     := "(atom" SIGN poly "0)"    SIGN in {=, >=, >, <=, <, !=}
    poly     := "(poly" mono+ ")"
    mono     := "(mono" RATIONAL ("(" NAME "." INT INT ")")* ")"

The optional third blockdecl slot is the squared sphere radius (default 1);
the token "free" declares an unconstrained box block.  The printer is
canonical: monomials and their factors are sorted, rationals reduced, and
print o parse is the identity on well-formed formulas.
"""
from __future__ import annotations

import re
from fractions import Fraction

from .formula import (AlternationError, And, Atom, BoolNode, Formula, Not,
                      Or, PrefixGroup, Quantifier, Sign, UnknownVariableError,
                      VarBlock)
from .poly import Polynomial

__all__ = ["parse_formula", "print_formula", "FormulaSyntaxError"]


class FormulaSyntaxError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_#]*$")
_COORD_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_#]*)\.(\d+)$")
_RATIONAL_RE = re.compile(r"-?\d+(/\d+)?$")
_SIGNS = {s.value: s for s in Sign}


class _Tokens:
    def __init__(self, text: str):
        self.items: list[tuple[str, int, int]] = []
        for lineno, line in enumerate(text.splitlines() or [""], start=1):
            for m in _TOKEN_RE.finditer(line):
                self.items.append((m.group(0), lineno, m.start() + 1))
        self.pos = 0
        last = text.count("\n") + 1
        self._eof = ("", last, len(text.splitlines()[-1]) + 1 if text.splitlines() else 1)

    def peek(self) -> tuple[str, int, int]:
        return self.items[self.pos] if self.pos < len(self.items) else self._eof

    def next(self) -> tuple[str, int, int]:
        tok = self.peek()
        if tok[0]:
            self.pos += 1
        return tok

    def expect(self, value: str):
        tok, line, col = self.next()
        if tok != value:
            shown = repr(tok) if tok else "end of input"
            raise FormulaSyntaxError(f"expected {value!r}, found {shown}", line, col)

    def error(self, message: str):
        _, line, col = self.peek()
        raise FormulaSyntaxError(message, line, col)


def parse_formula(text: str) -> Formula:
    """Parse formula source; raises FormulaSyntaxError / UnknownVariableError /
    AlternationError with positions for the three failure kinds."""
    toks = _Tokens(text)
    toks.expect("(")
    toks.expect("sentence")

    free_blocks: list[VarBlock] = []
    prefix: list[PrefixGroup] = []
    body: BoolNode | None = None
    seen = {"free": False, "prefix": False, "body": False}

    while True:
        tok, line, col = toks.peek()
        if tok == ")":
            toks.next()
            break
        if tok != "(":
            shown = repr(tok) if tok else "end of input"
            toks.error(f"expected a section, found {shown}")
        toks.next()
        head, hline, hcol = toks.next()
        if head == "free":
            if seen["free"] or seen["prefix"] or seen["body"]:
                raise FormulaSyntaxError("free section out of order", hline, hcol)
            seen["free"] = True
            while toks.peek()[0] == "(":
                free_blocks.append(_parse_blockdecl(toks))
            toks.expect(")")
        elif head == "prefix":
            if seen["prefix"] or seen["body"]:
                raise FormulaSyntaxError("prefix section out of order", hline, hcol)
            seen["prefix"] = True
            prev_q = None
            while toks.peek()[0] == "(":
                q, block, qline, qcol = _parse_qblock(toks)
                if q == prev_q:
                    raise AlternationError(
                        f"{qline}:{qcol}: consecutive {q.value!r} quantifiers violate alternation")
                prev_q = q
                prefix.append(PrefixGroup(q, (block,)))
            toks.expect(")")
        elif head == "body":
            if seen["body"]:
                raise FormulaSyntaxError("duplicate body section", hline, hcol)
            seen["body"] = True
            body = _parse_bool(toks)
            toks.expect(")")
        else:
            raise FormulaSyntaxError(f"unknown section {head!r}", hline, hcol)

    if body is None:
        toks.error("missing body section")
    if toks.peek()[0]:
        toks.error("trailing input after sentence")

    declared = {b.name for b in free_blocks} | {g.blocks[0].name for g in prefix}
    limits = {b.name: b.n_coords for b in free_blocks}
    limits.update({g.blocks[0].name: g.blocks[0].n_coords for g in prefix})
    _check_vars(body, declared, limits)
    return Formula(tuple(free_blocks), tuple(prefix), body)


def _parse_blockdecl(toks: _Tokens) -> VarBlock:
    toks.expect("(")
    name, line, col = toks.next()
    if not _NAME_RE.match(name):
        raise FormulaSyntaxError(f"invalid block name {name!r}", line, col)
    dim = _parse_int(toks)
    tok, _, _ = toks.peek()
    radius2: Fraction | None = Fraction(1)
    if tok != ")":
        tok, line, col = toks.next()
        if tok == "free":
            radius2 = None
        elif _RATIONAL_RE.match(tok):
            radius2 = Fraction(tok)
        else:
            raise FormulaSyntaxError(f"invalid block radius {tok!r}", line, col)
    toks.expect(")")
    return VarBlock(name, dim, radius2)


def _parse_qblock(toks: _Tokens):
    toks.expect("(")
    word, line, col = toks.next()
    if word not in ("exists", "forall"):
        raise FormulaSyntaxError(f"expected quantifier, found {word!r}", line, col)
    name, nline, ncol = toks.next()
    if not _NAME_RE.match(name):
        raise FormulaSyntaxError(f"invalid block name {name!r}", nline, ncol)
    dim = _parse_int(toks)
    toks.expect(")")
    return Quantifier(word), VarBlock(name, dim), line, col


def _parse_int(toks: _Tokens) -> int:
    tok, line, col = toks.next()
    if not re.match(r"\d+$", tok):
        raise FormulaSyntaxError(f"expected an integer, found {tok!r}", line, col)
    return int(tok)


def _parse_bool(toks: _Tokens) -> BoolNode:
    toks.expect("(")
    head, line, col = toks.next()
    if head == "atom":
        sign_tok, sline, scol = toks.next()
        if sign_tok not in _SIGNS:
            raise FormulaSyntaxError(f"unknown sign {sign_tok!r}", sline, scol)
        poly = _parse_poly(toks)
        zero, zline, zcol = toks.next()
        if zero != "0":
            raise FormulaSyntaxError(f"atom must compare against literal 0, found {zero!r}", zline, zcol)
        toks.expect(")")
        return Atom(poly, _SIGNS[sign_tok])
    if head in ("and", "or", "not"):
        children = []
        while toks.peek()[0] == "(":
            children.append(_parse_bool(toks))
        toks.expect(")")
        if not children:
            raise FormulaSyntaxError(f"empty {head!r} node", line, col)
        if head == "not":
            if len(children) != 1:
                raise FormulaSyntaxError("not takes exactly one child", line, col)
            return Not(children[0])
        return And(tuple(children)) if head == "and" else Or(tuple(children))
    raise FormulaSyntaxError(f"expected a boolean node, found {head!r}", line, col)


def _parse_poly(toks: _Tokens) -> Polynomial:
    toks.expect("(")
    tok, line, col = toks.next()
    if tok != "poly":
        raise FormulaSyntaxError(f"expected poly, found {tok!r}", line, col)
    monos = []
    while toks.peek()[0] == "(":
        monos.append(_parse_mono(toks))
    toks.expect(")")
    if not monos:
        raise FormulaSyntaxError("poly requires at least one mono", line, col)
    return Polynomial.from_monomials(monos)


def _parse_mono(toks: _Tokens):
    toks.expect("(")
    tok, line, col = toks.next()
    if tok != "mono":
        raise FormulaSyntaxError(f"expected mono, found {tok!r}", line, col)
    coeff_tok, cline, ccol = toks.next()
    if not _RATIONAL_RE.match(coeff_tok):
        raise FormulaSyntaxError(f"invalid rational {coeff_tok!r}", cline, ccol)
    coeff = Fraction(coeff_tok)
    factors = []
    while toks.peek()[0] == "(":
        toks.next()
        ref, rline, rcol = toks.next()
        m = _COORD_RE.match(ref)
        if not m:
            raise FormulaSyntaxError(f"expected NAME.INDEX, found {ref!r}", rline, rcol)
        exp = _parse_int(toks)
        toks.expect(")")
        factors.append(((m.group(1), int(m.group(2))), exp))
    toks.expect(")")
    return coeff, factors


def _check_vars(node: BoolNode, declared: set[str], limits: dict[str, int]):
    if isinstance(node, Atom):
        for name, idx in sorted(node.poly.coords()):
            if name not in declared:
                raise UnknownVariableError(f"unknown variable {name}.{idx}")
            if idx >= limits[name]:
                raise UnknownVariableError(
                    f"coordinate {name}.{idx} out of range (block has {limits[name]} coordinates)")
    elif isinstance(node, Not):
        _check_vars(node.child, declared, limits)
    else:
        for child in node.children:
            _check_vars(child, declared, limits)


# -- printing ------------------------------------------------------------


def print_formula(f: Formula) -> str:
    parts = ["(sentence"]
    if f.free_blocks:
        decls = " ".join(_print_blockdecl(b) for b in f.free_blocks)
        parts.append(f"(free {decls})")
    if f.prefix:
        qs = " ".join(
            f"({g.quantifier.value} {b.name} {b.sphere_dim})"
            for g in f.prefix for b in g.blocks)
        parts.append(f"(prefix {qs})")
    parts.append(f"(body {print_bool(f.matrix)})")
    return " ".join(parts) + ")"


def _print_blockdecl(b: VarBlock) -> str:
    if b.radius2 is None:
        return f"({b.name} {b.sphere_dim} free)"
    if b.radius2 == 1:
        return f"({b.name} {b.sphere_dim})"
    return f"({b.name} {b.sphere_dim} {b.radius2})"


def print_bool(node: BoolNode) -> str:
    if isinstance(node, Atom):
        return f"(atom {node.sign.value} {print_poly(node.poly)} 0)"
    if isinstance(node, Not):
        return f"(not {print_bool(node.child)})"
    head = "and" if isinstance(node, And) else "or"
    inner = " ".join(print_bool(c) for c in node.children)
    return f"({head} {inner})"


def print_poly(poly: Polynomial) -> str:
    terms = poly.sorted_terms()
    if not terms:
        return "(poly (mono 0))"
    monos = []
    for key, coeff in terms:
        factors = "".join(f" ({n}.{i} {e})" for (n, i), e in key)
        monos.append(f"(mono {coeff}{factors})")
    return "(poly " + " ".join(monos) + ")"

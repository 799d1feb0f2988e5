"""Text syntax: parsing and printing for polynomials, constraint sets,
formulas, judgements, proofs, lambda terms, and the two front-end languages.

Proof files are nested s-expressions whose leaf payloads (polynomials,
formulas, judgements) are quoted strings in the corresponding grammar, so a
single tokenizer serves every format and round-trips are lossless.
"""

from __future__ import annotations

import re

from .constraint import Constraint, ConstraintSet
from .formula import (
    Atom,
    Bang,
    ExistsRes,
    ForallAtom,
    ForallRes,
    Formula,
    Lolli,
    Tensor,
)
from .kernel import Judgement, Proof
from .respoly import ResourcePoly
from . import lam

RP = ResourcePoly


class ParseError(Exception):
    pass


_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<str>\"(?:[^\"\\]|\\.)*\")"
    r"|(?P<sym><=|\|-|-o|->|[()\[\]{}<>,.+*^!:;@\\=#])"
    r")"
)


def tokenize(text: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    text = re.sub(r"#[^\n]*", "", text)  # line comments
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise ParseError(f"lexical error at {text[pos:pos+20]!r}")
        pos = m.end()
        for kind in ("num", "id", "str", "sym"):
            val = m.group(kind)
            if val is not None:
                out.append((kind, val))
                break
    out.append(("eof", ""))
    return out


class _P:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, val):
        kind, v = self.next()
        if v != val:
            raise ParseError(f"expected {val!r}, found {v!r}")
        return v

    def at(self, val):
        return self.peek()[1] == val and self.peek()[0] != "str"

    def eat(self, val):
        if self.at(val):
            self.next()
            return True
        return False

    def ident(self):
        kind, v = self.next()
        if kind != "id":
            raise ParseError(f"expected identifier, found {v!r}")
        return v

    def number(self):
        kind, v = self.next()
        if kind != "num":
            raise ParseError(f"expected number, found {v!r}")
        return int(v)

    def string(self):
        kind, v = self.next()
        if kind != "str":
            raise ParseError(f"expected string, found {v!r}")
        return v[1:-1].replace('\\"', '"').replace("\\\\", "\\")

    def done(self):
        if self.peek()[0] != "eof":
            raise ParseError(f"trailing input at {self.peek()[1]!r}")


# -- polynomials ---------------------------------------------------------------


def _poly_factor(p: _P) -> RP:
    if p.eat("("):
        inner = _poly(p)
        p.expect(")")
        return inner
    kind, v = p.peek()
    if kind == "num":
        p.next()
        return RP.const(int(v))
    name = p.ident()
    if name == "C" and p.eat("("):
        var = p.ident()
        p.expect(",")
        idx = p.number()
        p.expect(")")
        return RP.binom(var, idx)
    base = RP.var(name)
    if p.eat("^"):
        k = p.number()
        out = RP.const(1)
        for _ in range(k):
            out = out.mul(base)
        return out
    return base


def _poly(p: _P) -> RP:
    out = _poly_factor(p)
    while True:
        if p.eat("*"):
            out = out.mul(_poly_factor(p))
        elif p.eat("+"):
            out = out.add(_poly(p))
        else:
            return out


def parse_poly(text: str) -> RP:
    p = _P(tokenize(text))
    out = _poly(p)
    p.done()
    return out


def print_poly(poly: RP) -> str:
    if poly.is_zero():
        return "0"
    parts = []
    for factors, coeff in poly.terms:
        bits = [str(coeff)] if (coeff != 1 or not factors) else []
        for var, idx in factors:
            bits.append(var if idx == 1 else f"C({var},{idx})")
        parts.append("*".join(bits))
    return " + ".join(parts)


# -- constraint sets -------------------------------------------------------------


def _constraint(p: _P) -> Constraint:
    lhs = _poly(p)
    if p.eat("<="):
        return Constraint(lhs, _poly(p))
    if p.eat("<"):
        return Constraint(lhs.add(RP.const(1)), _poly(p))
    raise ParseError("expected <= or < in constraint")


def _cset(p: _P) -> ConstraintSet:
    p.expect("{")
    items = []
    if not p.at("}"):
        items.append(_constraint(p))
        while p.eat(","):
            items.append(_constraint(p))
    p.expect("}")
    return ConstraintSet.of(items)


def parse_cset(text: str) -> ConstraintSet:
    p = _P(tokenize(text))
    out = _cset(p)
    p.done()
    return out


def print_cset(cs: ConstraintSet) -> str:
    inner = ", ".join(f"{print_poly(c.lhs)} <= {print_poly(c.rhs)}" for c in cs.constraints)
    return "{" + inner + "}"


# -- formulas ----------------------------------------------------------------------


def _formula(p: _P) -> Formula:
    if p.at("forall") or p.at("exists"):
        return _quantifier(p)
    left = _tensor(p)
    if p.eat("-o"):
        return Lolli(left, _formula(p))
    return left


def _quantifier(p: _P) -> Formula:
    kind = p.ident()
    if not p.at("("):
        atom = p.ident()
        p.expect(".")
        if kind != "forall":
            raise ParseError("atoms can only be universally quantified")
        return ForallAtom(atom, _formula(p))
    p.expect("(")
    vars_ = [p.ident()]
    while p.eat(","):
        vars_.append(p.ident())
    p.expect(")")
    p.expect(":")
    cset = _cset(p)
    bounds: list[RP | None] = [None] * len(vars_)
    if p.eat("["):
        while not p.at("]"):
            var = p.ident()
            p.expect("<=")
            bound = _poly(p)
            if var not in vars_:
                raise ParseError(f"bound for unknown variable {var!r}")
            bounds[vars_.index(var)] = bound
            if not p.eat(","):
                break
        p.expect("]")
    p.expect(".")
    body = _formula(p)
    cls = ForallRes if kind == "forall" else ExistsRes
    return cls(tuple(vars_), cset, tuple(bounds), body)


def _tensor(p: _P) -> Formula:
    out = _unary(p)
    while p.eat("*"):
        out = Tensor(out, _unary(p))
    return out


def _unary(p: _P) -> Formula:
    if p.eat("!"):
        p.expect("{")
        var = p.ident()
        p.expect("<")
        bound = _poly(p)
        p.expect("}")
        return Bang(var, bound, _unary(p))
    if p.eat("("):
        inner = _formula(p)
        p.expect(")")
        return inner
    name = p.ident()
    if name in ("forall", "exists"):
        raise ParseError("quantifiers need parentheses in this position")
    args: list[RP] = []
    if p.eat("("):
        if not p.at(")"):
            args.append(_poly(p))
            while p.eat(","):
                args.append(_poly(p))
        p.expect(")")
    return Atom(name, tuple(args))


def parse_formula(text: str) -> Formula:
    p = _P(tokenize(text))
    out = _formula(p)
    p.done()
    return out


def _fmt(f: Formula, ctx: int) -> str:
    # ctx: 0 = top, 1 = tensor operand, 2 = bang body / tight
    if isinstance(f, Atom):
        if not f.args:
            return f.name
        return f.name + "(" + ", ".join(print_poly(a) for a in f.args) + ")"
    if isinstance(f, Tensor):
        s = f"{_fmt(f.left, 1)} * {_fmt(f.right, 2)}"
        return f"({s})" if ctx >= 2 else s
    if isinstance(f, Lolli):
        s = f"{_fmt(f.left, 1)} -o {_fmt(f.right, 0)}"
        return f"({s})" if ctx >= 1 else s
    if isinstance(f, ForallAtom):
        s = f"forall {f.atom}. {_fmt(f.body, 0)}"
        return f"({s})" if ctx >= 1 else s
    if isinstance(f, Bang):
        return f"!{{{f.var} < {print_poly(f.bound)}}} {_fmt(f.body, 2)}"
    if isinstance(f, (ForallRes, ExistsRes)):
        kw = "forall" if isinstance(f, ForallRes) else "exists"
        vs = ", ".join(f.vars)
        bounds = ", ".join(
            f"{v} <= {print_poly(b)}" for v, b in zip(f.vars, f.bounds) if b is not None
        )
        ann = f" [{bounds}]" if bounds else ""
        s = f"{kw} ({vs}): {print_cset(f.cset)}{ann}. {_fmt(f.body, 0)}"
        return f"({s})" if ctx >= 1 else s
    raise TypeError(f)


def print_formula(f: Formula) -> str:
    return _fmt(f, 0)


# -- judgements ----------------------------------------------------------------------


def _judgement(p: _P) -> Judgement:
    cset = _cset(p)
    p.expect(":")
    ctx = []
    if not p.at("|-"):
        ctx.append(_formula(p))
        while p.eat(","):
            ctx.append(_formula(p))
    p.expect("|-")
    concl = _formula(p)
    return Judgement(cset, tuple(ctx), concl)


def parse_judgement(text: str) -> Judgement:
    p = _P(tokenize(text))
    out = _judgement(p)
    p.done()
    return out


def print_judgement(j: Judgement) -> str:
    ctx = ", ".join(print_formula(f) for f in j.context)
    return f"{print_cset(j.cset)}: {ctx}{' ' if ctx else ''}|- {print_formula(j.conclusion)}"


# -- proofs ------------------------------------------------------------------------

_PARAM_KINDS = {
    "cut_at": "int", "at": "int", "at2": "int", "arg_at": "int", "b_at": "int",
    "p": "poly", "q": "poly",
    "x": "ident", "w": "ident", "y": "ident", "z": "ident", "atom": "ident",
    "B": "formula",
    "params": "idents", "vars": "idents",
    "witnesses": "polys",
}


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def print_proof(proof: Proof, indent: int = 0) -> str:
    pad = "  " * indent
    bits = [f"{pad}({proof.rule}"]
    for key in sorted(proof.params):
        val = proof.params[key]
        kind = _PARAM_KINDS[key]
        if kind == "int":
            rep = str(val)
        elif kind == "ident":
            rep = val
        elif kind == "poly":
            rep = _quote(print_poly(val))
        elif kind == "formula":
            rep = _quote(print_formula(val))
        elif kind == "idents":
            rep = "(" + " ".join(val) + ")"
        elif kind == "polys":
            rep = "(" + " ".join(_quote(print_poly(w)) for w in val) + ")"
        else:  # pragma: no cover
            raise AssertionError(kind)
        bits.append(f" ({key} {rep})")
    bits.append(f"\n{pad}  (judg {_quote(print_judgement(proof.claimed))})")
    for prem in proof.premises:
        bits.append("\n" + print_proof(prem, indent + 1))
    bits.append(")")
    return "".join(bits)


def _proof_node(p: _P) -> Proof:
    p.expect("(")
    rule = p.ident()
    if rule not in _RULE_NAMES:
        raise ParseError(f"unknown rule {rule!r}")
    params: dict = {}
    judg = None
    premises = []
    while not p.eat(")"):
        save = p.i
        p.expect("(")
        kind_tok, name = p.peek()
        if kind_tok == "id" and name in _RULE_NAMES:
            p.i = save
            premises.append(_proof_node(p))
            continue
        key = p.ident()
        if key == "judg":
            judg = parse_judgement(p.string())
            p.expect(")")
            continue
        kind = _PARAM_KINDS.get(key)
        if kind is None:
            raise ParseError(f"unknown proof parameter {key!r}")
        if kind == "int":
            params[key] = p.number()
        elif kind == "ident":
            params[key] = p.ident()
        elif kind == "poly":
            params[key] = parse_poly(p.string())
        elif kind == "formula":
            params[key] = parse_formula(p.string())
        elif kind in ("idents", "polys"):
            p.expect("(")
            vals = []
            while not p.at(")"):
                vals.append(p.ident() if kind == "idents" else parse_poly(p.string()))
            p.expect(")")
            params[key] = tuple(vals)
        p.expect(")")
    if judg is None:
        raise ParseError(f"proof node {rule} has no judgement")
    return Proof(rule, params, tuple(premises), judg)


_RULE_NAMES = {
    "A", "U", "W", "X", "Rlolli", "Llolli", "Rtensor", "Ltensor",
    "Pbang", "Dbang", "Nbang", "Rforalla", "Lforalla",
    "Rforallx", "Lforallx", "Rexistsx", "Lexistsx",
}


def parse_proof(text: str) -> Proof:
    p = _P(tokenize(text))
    out = _proof_node(p)
    p.done()
    return out


# -- lambda terms ---------------------------------------------------------------------


def _term(p: _P) -> lam.Term:
    parts = [_term_atom(p)]
    while (p.peek()[0] == "sym" and p.peek()[1] in ("(", "\\")) or p.peek()[0] == "id":
        parts.append(_term_atom(p))
    out = parts[0]
    for t in parts[1:]:
        out = lam.ap(out, t)
    return out


def _term_atom(p: _P) -> lam.Term:
    if p.eat("\\"):
        names = [p.ident()]
        tensored = False
        while p.eat("*"):
            tensored = True
            names.append(p.ident())
        p.expect(".")
        body = _term(p)
        if tensored:
            return lam.lam_tensor(names, body)
        return lam.absn(names, body)
    if p.eat("("):
        inner = _term(p)
        while p.eat("*"):
            right = _term(p)
            inner = lam.tensor([inner, right])
        p.expect(")")
        return inner
    return lam.v(p.ident())


def parse_term(text: str) -> lam.Term:
    p = _P(tokenize(text))
    out = _term(p)
    p.done()
    return out


def print_term(t: lam.Term) -> str:
    if isinstance(t, lam.Var):
        return t.name
    if isinstance(t, lam.Abs):
        names = [t.var]
        body = t.body
        while isinstance(body, lam.Abs):
            names.append(body.var)
            body = body.body
        return "\\" + ". \\".join(names) + ". " + print_term(body)
    bits = []
    spine = t
    while isinstance(spine, lam.App):
        bits.append(spine.arg)
        spine = spine.fn
    head = print_term(spine) if not isinstance(spine, lam.Abs) else f"({print_term(spine)})"
    out = head
    for arg in reversed(bits):
        if isinstance(arg, lam.Var):
            out += " " + arg.name
        else:
            out += " (" + print_term(arg) + ")"
    return out


# -- ramified recurrence programs -------------------------------------------------


def _rrw_sig(p: _P):
    p.expect("(")
    tiers = []
    while not p.at(")"):
        name = p.ident()
        if name != "W":
            raise ParseError("argument types are W@tier")
        p.expect("@")
        tiers.append(p.number())
        if not p.eat(","):
            break
    p.expect(")")
    p.expect("->")
    name = p.ident()
    if name != "W":
        raise ParseError("result type is W@tier")
    p.expect("@")
    return (tuple(tiers), p.number())


def _rrw(p: _P):
    from .frontends import rrw

    if p.eat("("):
        inner = _rrw(p)
        p.expect(")")
        return inner
    head = p.ident()
    if head == "id":
        prog = rrw.Id()
    elif head == "zero":
        prog = rrw.Zero()
    elif head == "cons":
        p.expect("(")
        k = p.number()
        p.expect(")")
        prog = rrw.Cons(k)
    elif head == "proj":
        p.expect("(")
        i = p.number()
        p.expect(",")
        m = p.number()
        p.expect(")")
        prog = rrw.Proj(i, m)
    elif head == "comp":
        p.expect("(")
        g = _rrw(p)
        fs = []
        if p.eat(";"):
            if not p.at(")"):
                fs.append(_rrw(p))
                while p.eat(","):
                    fs.append(_rrw(p))
        p.expect(")")
        prog = rrw.Comp(g, tuple(fs))
    elif head in ("rec", "cond"):
        p.expect("(")
        steps = [_rrw(p)]
        while p.eat(","):
            steps.append(_rrw(p))
        p.expect(";")
        base = _rrw(p)
        p.expect(")")
        cls = rrw.Rec if head == "rec" else rrw.Cond
        prog = cls(tuple(steps), base)
    else:
        raise ParseError(f"unknown program former {head!r}")
    if p.eat(":"):
        prog = _with_sig(prog, _rrw_sig(p))
    return prog


def _with_sig(prog, sig):
    from dataclasses import replace

    return replace(prog, sig=sig)


def parse_rrw(text: str):
    p = _P(tokenize(text))
    out = _rrw(p)
    p.done()
    return out


def print_rrw(prog) -> str:
    from .frontends import rrw

    def sig_str(sig):
        if sig is None:
            return ""
        args = ", ".join(f"W@{t}" for t in sig[0])
        return f" : ({args}) -> W@{sig[1]}"

    def go(pr, top=False):
        if isinstance(pr, rrw.Id):
            body = "id"
        elif isinstance(pr, rrw.Zero):
            body = "zero"
        elif isinstance(pr, rrw.Cons):
            body = f"cons({pr.k})"
        elif isinstance(pr, rrw.Proj):
            body = f"proj({pr.i}, {pr.m})"
        elif isinstance(pr, rrw.Comp):
            inner = ", ".join(go(f) for f in pr.fs)
            body = f"comp({go(pr.g)}; {inner})" if inner else f"comp({go(pr.g)})"
        elif isinstance(pr, (rrw.Rec, rrw.Cond)):
            kw = "rec" if isinstance(pr, rrw.Rec) else "cond"
            steps = ", ".join(go(s) for s in pr.steps)
            body = f"{kw}({steps}; {go(pr.base)})"
        else:
            raise TypeError(pr)
        if pr.sig is not None:
            # parenthesize ascribed subterms so nesting stays unambiguous
            return f"{body}{sig_str(pr.sig)}" if top else f"({body}{sig_str(pr.sig)})"
        return body

    return go(prog, top=True)


# -- LFPL derivations -----------------------------------------------------------------


def _lfpl_type(p: _P):
    from .frontends import lfpl

    def atom():
        if p.eat("("):
            t = arrow()
            p.expect(")")
            return t
        name = p.ident()
        if name == "nat":
            return lfpl.NAT
        if name == "diamond":
            return lfpl.DIAMOND
        raise ParseError(f"unknown type {name!r}")

    def tens():
        t = atom()
        while p.eat("*"):
            t = lfpl.TensorT(t, atom())
        return t

    def arrow():
        t = tens()
        if p.eat("-o"):
            return lfpl.LolliT(t, arrow())
        return t

    return arrow()


def parse_lfpl_type(text: str):
    p = _P(tokenize(text))
    out = _lfpl_type(p)
    p.done()
    return out


def print_lfpl_type(t) -> str:
    from .frontends import lfpl

    if isinstance(t, lfpl.NatT):
        return "nat"
    if isinstance(t, lfpl.Diamond):
        return "diamond"
    if isinstance(t, lfpl.TensorT):
        return f"({print_lfpl_type(t.left)} * {print_lfpl_type(t.right)})"
    if isinstance(t, lfpl.LolliT):
        return f"({print_lfpl_type(t.left)} -o {print_lfpl_type(t.right)})"
    raise TypeError(t)


def _lfpl(p: _P):
    from .frontends import lfpl

    p.expect("(")
    rule = p.ident()
    if rule == "ax":
        out = lfpl.ax(parse_lfpl_type(p.string()))
    elif rule == "s":
        out = lfpl.s_rule()
    elif rule == "t":
        out = lfpl.t_rule(_lfpl(p), _lfpl(p))
    elif rule == "w":
        ty = parse_lfpl_type(p.string())
        out = lfpl.w_rule(_lfpl(p), ty)
    elif rule == "ilolli":
        out = lfpl.i_lolli(_lfpl(p))
    elif rule == "elolli":
        out = lfpl.e_lolli(_lfpl(p), _lfpl(p))
    elif rule == "itensor":
        out = lfpl.i_tensor(_lfpl(p), _lfpl(p))
    elif rule == "etensor":
        out = lfpl.e_tensor(_lfpl(p), _lfpl(p))
    else:
        raise ParseError(f"unknown derivation rule {rule!r}")
    p.expect(")")
    return out


def parse_lfpl(text: str):
    p = _P(tokenize(text))
    out = _lfpl(p)
    p.done()
    return out


def print_lfpl(d, indent: int = 0) -> str:
    pad = "  " * indent
    if d.rule == "A":
        return f"{pad}(ax {_quote(print_lfpl_type(d.conclusion))})"
    if d.rule == "S":
        return f"{pad}(s)"
    if d.rule == "W":
        inner = print_lfpl(d.premises[0], indent + 1)
        return f"{pad}(w {_quote(print_lfpl_type(d.context[-1]))}\n{inner})"
    name = {"T": "t", "Ilolli": "ilolli", "Elolli": "elolli",
            "Itensor": "itensor", "Etensor": "etensor"}[d.rule]
    inner = "\n".join(print_lfpl(q, indent + 1) for q in d.premises)
    return f"{pad}({name}\n{inner})"

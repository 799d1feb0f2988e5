"""The non-size-increasing calculus: typing derivations and their compilation
into kernel-checked proofs.

Types are diamond (a unit of constructor budget), nat, tensor and lollipop.
A derivation is compiled to a judgement of the shape

    {x1 + .. + xn <= b, 1 <= b}:  <A1>^x1_b, .., <An>^xn_b  |-  <B>^(x1+..+xn)_b

where <.>^p_q is the two-parameter type translation.  The diamond translation
carries an explicit e <= 1 constraint so the existentially quantified dummy
variable has a checkable bound.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..builders import (
    axiom,
    cut,
    llolli,
    lforallx,
    ltensor,
    lexistsx,
    rexistsx,
    rforalla,
    rforallx,
    rlolli,
    rtensor,
    pbang,
    weak,
    zero_proof,
    succ_proof,
    iter_proof,
)
from ..constraint import Constraint, ConstraintSet, Entailer
from ..formula import (
    Atom,
    ExistsRes,
    ForallAtom,
    ForallRes,
    Formula,
    Lolli,
    Tensor,
    fresh_name,
    nat_formula,
)
from ..kernel import Judgement, Proof
from ..respoly import ResourcePoly, sum_polys
from ..transform import monotone, strengthen, subst_vars

RP = ResourcePoly


class LfplError(Exception):
    pass


@dataclass(frozen=True)
class Diamond:
    pass


@dataclass(frozen=True)
class NatT:
    pass


@dataclass(frozen=True)
class TensorT:
    left: "LfplType"
    right: "LfplType"


@dataclass(frozen=True)
class LolliT:
    left: "LfplType"
    right: "LfplType"


LfplType = Diamond | NatT | TensorT | LolliT

DIAMOND = Diamond()
NAT = NatT()


@dataclass(frozen=True)
class LfplDerivation:
    rule: str  # A S T W Ilolli Elolli Itensor Etensor
    premises: tuple["LfplDerivation", ...]
    context: tuple[LfplType, ...]
    conclusion: LfplType


def _expect(cond, msg):
    if not cond:
        raise LfplError(msg)


def ax(t: LfplType) -> LfplDerivation:
    return LfplDerivation("A", (), (t,), t)


def s_rule() -> LfplDerivation:
    return LfplDerivation("S", (), (DIAMOND, NAT), NAT)


def t_rule(step: LfplDerivation, base: LfplDerivation) -> LfplDerivation:
    _expect(step.context == (DIAMOND,) and isinstance(step.conclusion, LolliT)
            and step.conclusion.left == step.conclusion.right,
            "T: first premise must be diamond |- A -o A")
    _expect(base.context == () and base.conclusion == step.conclusion.left,
            "T: second premise must close the iterated type")
    return LfplDerivation("T", (step, base), (), LolliT(NAT, base.conclusion))


def w_rule(p: LfplDerivation, extra: LfplType) -> LfplDerivation:
    return LfplDerivation("W", (p,), p.context + (extra,), p.conclusion)


def i_lolli(p: LfplDerivation) -> LfplDerivation:
    _expect(len(p.context) >= 1, "Ilolli: premise needs a hypothesis")
    return LfplDerivation("Ilolli", (p,), p.context[:-1],
                          LolliT(p.context[-1], p.conclusion))


def e_lolli(p1: LfplDerivation, p2: LfplDerivation) -> LfplDerivation:
    _expect(isinstance(p1.conclusion, LolliT), "Elolli: first premise not a function")
    _expect(p1.conclusion.left == p2.conclusion, "Elolli: argument type mismatch")
    return LfplDerivation("Elolli", (p1, p2), p1.context + p2.context,
                          p1.conclusion.right)


def i_tensor(p1: LfplDerivation, p2: LfplDerivation) -> LfplDerivation:
    return LfplDerivation("Itensor", (p1, p2), p1.context + p2.context,
                          TensorT(p1.conclusion, p2.conclusion))


def e_tensor(p1: LfplDerivation, p2: LfplDerivation) -> LfplDerivation:
    _expect(isinstance(p1.conclusion, TensorT), "Etensor: first premise not a tensor")
    _expect(len(p2.context) >= 2
            and p2.context[-2] == p1.conclusion.left
            and p2.context[-1] == p1.conclusion.right,
            "Etensor: second premise must end with the two components")
    return LfplDerivation("Etensor", (p1, p2), p1.context + p2.context[:-2],
                          p2.conclusion)


def validate(d: LfplDerivation) -> None:
    rebuilt = {
        "A": lambda: ax(d.conclusion),
        "S": s_rule,
        "T": lambda: t_rule(*d.premises),
        "W": lambda: w_rule(d.premises[0], d.context[-1]),
        "Ilolli": lambda: i_lolli(*d.premises),
        "Elolli": lambda: e_lolli(*d.premises),
        "Itensor": lambda: i_tensor(*d.premises),
        "Etensor": lambda: e_tensor(*d.premises),
    }
    if d.rule not in rebuilt:
        raise LfplError(f"unknown rule {d.rule}")
    again = rebuilt[d.rule]()
    _expect(again.context == d.context and again.conclusion == d.conclusion,
            f"{d.rule}: judgement does not match the rule")
    for p in d.premises:
        validate(p)


# -- type translation --------------------------------------------------------------


def translate_type(t: LfplType, p: RP, q: RP) -> Formula:
    if isinstance(t, Diamond):
        e = fresh_name("e", p.free_vars() | q.free_vars())
        cs = ConstraintSet.of([
            Constraint(RP.const(1), p),
            Constraint(RP.var(e), RP.const(1)),
        ])
        return ExistsRes((e,), cs, (RP.const(1),),
                         ForallAtom("a", Lolli(Atom("a"), Atom("a"))))
    if isinstance(t, NatT):
        return nat_formula(p)
    if isinstance(t, TensorT):
        avoid = p.free_vars() | q.free_vars()
        u = fresh_name("u", avoid)
        w = fresh_name("w", avoid | {u})
        cs = ConstraintSet.of([Constraint(RP.var(u) + RP.var(w), p)])
        return ExistsRes((u, w), cs, (p, p),
                         Tensor(translate_type(t.left, RP.var(u), q),
                                translate_type(t.right, RP.var(w), q)))
    if isinstance(t, LolliT):
        avoid = p.free_vars() | q.free_vars()
        z = fresh_name("z", avoid)
        cs = ConstraintSet.of([Constraint(RP.var(z) + p, q)])
        return ForallRes((z,), cs, (q,),
                         Lolli(translate_type(t.left, RP.var(z), q),
                               translate_type(t.right, p + RP.var(z), q)))
    raise TypeError(t)


# -- compilation ---------------------------------------------------------------------


_B = "b"


def _theorem_cset(total: RP) -> ConstraintSet:
    return ConstraintSet.of([
        Constraint(total, RP.var(_B)),
        Constraint(RP.const(1), RP.var(_B)),
    ])


def _xvars(n: int, offset: int = 0) -> list[RP]:
    return [RP.var(f"x{i}") for i in range(offset + 1, offset + n + 1)]


def _shift(proof: Proof, n: int, offset: int) -> Proof:
    if offset == 0:
        return proof
    return subst_vars(proof, {f"x{i}": RP.var(f"x{i + offset}")
                              for i in range(1, n + 1)})


def compile_lfpl(d: LfplDerivation, engine: Entailer | None = None) -> Proof:
    validate(d)
    return _compile(d)


def _compile(d: LfplDerivation) -> Proof:
    n = len(d.context)
    xs = _xvars(n)
    total = sum_polys(xs)
    cset = _theorem_cset(total)
    b = RP.var(_B)

    if d.rule == "A":
        f = translate_type(d.conclusion, xs[0], b)
        return axiom(cset, f)

    if d.rule == "S":
        x1, x2 = xs
        succ = succ_proof(1, 1, x2, ConstraintSet.empty())
        e = fresh_name("e", {"x1", "x2", _B})
        inner_cset = cset.union(ConstraintSet.of([
            Constraint(RP.const(1), x1),
            Constraint(RP.var(e), RP.const(1)),
        ]))
        rho = strengthen(succ, inner_cset)
        rho = monotone(rho, [nat_formula(x2)], nat_formula(x1 + x2))
        rho = weak(rho, ForallAtom("a", Lolli(Atom("a"), Atom("a"))), at=0)
        return lexistsx(rho, 0, translate_type(DIAMOND, x1, b), (e,), cset)

    if d.rule == "W":
        inner = _compile(d.premises[0])
        inner = strengthen(inner, cset)
        inner_total = sum_polys(xs[:-1])
        target = [translate_type(t, x, b) for t, x in zip(d.context[:-1], xs[:-1])]
        inner = monotone(inner, target, translate_type(d.conclusion, total, b))
        return weak(inner, translate_type(d.context[-1], xs[-1], b), at=n - 1)

    if d.rule == "Ilolli":
        inner = _compile(d.premises[0])
        arg_t = d.premises[0].context[-1]
        quant = translate_type(d.conclusion, total, b)
        yv = f"x{n + 1}"
        inner_cset = cset.union(ConstraintSet.of([
            Constraint(RP.var(yv) + total, b)
        ]))
        inner = strengthen(inner, inner_cset)
        inner = rlolli(inner, n)
        return rforallx(inner, cset, quant, (yv,))

    if d.rule == "Elolli":
        p1, p2 = d.premises
        n1, n2 = len(p1.context), len(p2.context)
        s1 = sum_polys(xs[:n1])
        s2 = sum_polys(xs[n1:])
        theta = strengthen(_compile(p1), cset)
        xi = strengthen(_shift(_compile(p2), n2, n1), cset)
        res = translate_type(d.conclusion, total, b)
        app = llolli(xi, axiom(cset, res), b_at=0, at=n2)
        quant = translate_type(p1.conclusion, s1, b)
        inst = lforallx(app, at=n2, quant=quant, witnesses=(s2,))
        return cut(theta, inst, cut_at=n2)

    if d.rule == "Itensor":
        p1, p2 = d.premises
        n1, n2 = len(p1.context), len(p2.context)
        s1 = sum_polys(xs[:n1])
        s2 = sum_polys(xs[n1:])
        mid = ConstraintSet.of([
            Constraint(s1, b), Constraint(s2, b), Constraint(RP.const(1), b),
        ])
        theta = strengthen(_compile(p1), mid)
        xi = strengthen(_shift(_compile(p2), n2, n1), mid)
        quant = translate_type(d.conclusion, total, b)
        packed = rexistsx(rtensor(theta, xi), quant, (s1, s2))
        return strengthen(packed, cset)

    if d.rule == "Etensor":
        p1, p2 = d.premises
        n1 = len(p1.context)
        n2 = len(p2.context) - 2
        s1 = sum_polys(xs[:n1])
        s2 = sum_polys(xs[n1:])
        res = translate_type(d.conclusion, total, b)
        wv = fresh_name("w", {f"x{i}" for i in range(1, n + 1)} | {_B})
        zv = fresh_name("z", {f"x{i}" for i in range(1, n + 1)} | {_B, wv})
        # premise 2 compiled over x1..x_{n2+2}: last two become w, z and the
        # leading block shifts past the Gamma variables
        xi = _compile(p2)
        ren = {f"x{i}": RP.var(f"x{n1 + i}") for i in range(1, n2 + 1)}
        ren[f"x{n2 + 1}"] = RP.var(wv)
        ren[f"x{n2 + 2}"] = RP.var(zv)
        xi = subst_vars(xi, ren)
        inner_cset = cset.union(ConstraintSet.of([
            Constraint(RP.var(wv) + RP.var(zv), s1)
        ]))
        xi = strengthen(xi, inner_cset)
        delta_t = [translate_type(t, x, b)
                   for t, x in zip(p2.context[:-2], xs[n1:])]
        comp = [translate_type(p1.conclusion.left, RP.var(wv), b),
                translate_type(p1.conclusion.right, RP.var(zv), b)]
        xi = monotone(xi, delta_t + comp, res)
        xi = ltensor(xi, at=n2)
        quant = translate_type(p1.conclusion, s1, b)
        xi = lexistsx(xi, at=n2, quant=quant, actual=(wv, zv), cset=cset)
        theta = strengthen(_compile(p1), cset)
        return cut(theta, xi, cut_at=n2)

    if d.rule == "T":
        step_d, base_d = d.premises
        a_type = base_d.conclusion
        xv = "x1"
        x = RP.var(xv)
        iter_cset = ConstraintSet.of([
            Constraint(x, b), Constraint(RP.const(1), b),
        ])
        yv = fresh_name("y", {xv, _B})
        y = RP.var(yv)
        step_cset = ConstraintSet.of([
            Constraint(y + RP.const(1), b), Constraint(RP.const(1), b),
        ])
        # diamond supply: |- <>^1_b
        e = fresh_name("e", {xv, _B, yv})
        unit_body = rforalla(rlolli(axiom(step_cset, Atom("a")), 0), "a")
        unit = rexistsx(unit_body, translate_type(DIAMOND, RP.const(1), b),
                        (RP.zero(),))
        # step: strengthen the compiled premise at x1 := 1
        ih = _compile(step_d)
        ih = subst_vars(ih, {"x1": RP.const(1)})
        ih = strengthen(ih, step_cset)
        applied = cut(unit, ih, cut_at=0)   # step_cset: |- <A -o A>^1_b
        # instantiate the quantifier at y and apply
        fun = translate_type(step_d.conclusion, RP.const(1), b)
        chi = llolli(axiom(step_cset, translate_type(a_type, y, b)),
                     axiom(step_cset, translate_type(a_type, RP.const(1) + y, b),
                           translate_type(a_type, y + RP.const(1), b)),
                     b_at=0, at=1)
        chi = lforallx(chi, at=1, quant=fun, witnesses=(y,))
        step = cut(applied, chi, cut_at=1)
        step = rlolli(step, 0)              # step_cset: |- <A>^y -o <A>^{y+1}
        bang = pbang(step, yv, x, [], iter_cset)
        base = strengthen(_compile(base_d), iter_cset)
        zv = fresh_name("z", {xv, _B, yv})
        body = translate_type(a_type, RP.var(zv), b)
        it = iter_proof(1, body, zv, x, iter_cset)
        out = cut(bang, it, cut_at=1)
        out = cut(base, out, cut_at=1)      # iter_cset: Nat_x |- <A>^x_b
        final_cset = _theorem_cset(RP.zero())
        wrap_cset = final_cset.union(ConstraintSet.of([Constraint(x, b)]))
        out = strengthen(out, wrap_cset)
        out = rlolli(out, 0)
        quant = translate_type(d.conclusion, RP.zero(), b)
        return rforallx(out, final_cset, quant, (xv,))

    raise AssertionError(d.rule)

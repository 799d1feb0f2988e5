"""QBAL formula ASTs and the operations the kernel needs on them.

Formulas: atoms applied to resource polynomials, tensor, lollipop,
second-order atom quantification, the bounded modality !_{x<p}, and bounded
first-order quantifiers.  Quantifier nodes carry an explicit bound witness per
variable; well-formedness checks the witness instead of searching for one.
Bound witnesses are annotations: substitution maps them, but alpha-equality,
polarity and the subtyping order ignore them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

from .constraint import Constraint, ConstraintSet, Entailer, Verdict, combine
from .respoly import ResourcePoly


class SkeletonMismatch(Exception):
    """The two formulas do not share a logical skeleton."""


class WellFormedError(Exception):
    def __init__(self, message: str, node: "Formula", verdict: Verdict | None = None):
        super().__init__(message)
        self.node = node
        self.verdict = verdict


@dataclass(frozen=True)
class Atom:
    name: str
    args: tuple[ResourcePoly, ...] = ()


@dataclass(frozen=True)
class Tensor:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Lolli:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class ForallAtom:
    atom: str
    body: "Formula"


@dataclass(frozen=True)
class Bang:
    var: str
    bound: ResourcePoly
    body: "Formula"


@dataclass(frozen=True)
class ForallRes:
    vars: tuple[str, ...]
    cset: ConstraintSet
    bounds: tuple[ResourcePoly | None, ...]
    body: "Formula"


@dataclass(frozen=True)
class ExistsRes:
    vars: tuple[str, ...]
    cset: ConstraintSet
    bounds: tuple[ResourcePoly | None, ...]
    body: "Formula"


Formula = Atom | Tensor | Lolli | ForallAtom | Bang | ForallRes | ExistsRes


def pretty(f: Formula) -> str:
    from .syntax import print_formula

    return print_formula(f)


# -- variables ------------------------------------------------------------


def free_rvars(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        out: frozenset[str] = frozenset()
        for a in f.args:
            out |= a.free_vars()
        return out
    if isinstance(f, (Tensor, Lolli)):
        return free_rvars(f.left) | free_rvars(f.right)
    if isinstance(f, ForallAtom):
        return free_rvars(f.body)
    if isinstance(f, Bang):
        return f.bound.free_vars() | (free_rvars(f.body) - {f.var})
    if isinstance(f, (ForallRes, ExistsRes)):
        inner = f.cset.free_vars() | free_rvars(f.body)
        for b in f.bounds:
            if b is not None:
                inner |= b.free_vars()
        return inner - set(f.vars)
    raise TypeError(f)


def free_atoms(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset({f.name})
    if isinstance(f, (Tensor, Lolli)):
        return free_atoms(f.left) | free_atoms(f.right)
    if isinstance(f, ForallAtom):
        return free_atoms(f.body) - {f.atom}
    if isinstance(f, Bang):
        return free_atoms(f.body)
    if isinstance(f, (ForallRes, ExistsRes)):
        return free_atoms(f.body)
    raise TypeError(f)


def fresh_name(base: str, avoid) -> str:
    if base not in avoid:
        return base
    for i in itertools.count(1):
        cand = f"{base}_{i}"
        if cand not in avoid:
            return cand
    raise AssertionError


# -- alpha-canonical keys --------------------------------------------------

_alpha_cache: dict[Formula, tuple] = {}


def alpha_key(f: Formula) -> tuple:
    key = _alpha_cache.get(f)
    if key is None:
        key = _alpha(f, {}, {}, [0])
        _alpha_cache[f] = key
    return key


def _poly_key(p: ResourcePoly, rmap: Mapping[str, str]) -> tuple:
    needed = {v: ResourcePoly.var(rmap[v]) for v in p.free_vars() if v in rmap}
    if needed:
        p = p.substitute(needed)
    return p.terms


def _cset_key(cs: ConstraintSet, rmap: Mapping[str, str]) -> tuple:
    items = sorted(
        (_poly_key(c.lhs, rmap), _poly_key(c.rhs, rmap)) for c in cs.constraints
    )
    return tuple(items)


def _alpha(f: Formula, rmap: dict, amap: dict, counter: list[int]) -> tuple:
    if isinstance(f, Atom):
        return ("at", amap.get(f.name, f.name), tuple(_poly_key(a, rmap) for a in f.args))
    if isinstance(f, Tensor):
        return ("tens", _alpha(f.left, rmap, amap, counter), _alpha(f.right, rmap, amap, counter))
    if isinstance(f, Lolli):
        return ("lolli", _alpha(f.left, rmap, amap, counter), _alpha(f.right, rmap, amap, counter))
    if isinstance(f, ForallAtom):
        n = counter[0]
        counter[0] += 1
        amap2 = dict(amap)
        amap2[f.atom] = f"@{n}"
        return ("fa", _alpha(f.body, rmap, amap2, counter))
    if isinstance(f, Bang):
        n = counter[0]
        counter[0] += 1
        rmap2 = dict(rmap)
        rmap2[f.var] = f"!{n}"
        return ("bang", _poly_key(f.bound, rmap), _alpha(f.body, rmap2, amap, counter))
    if isinstance(f, (ForallRes, ExistsRes)):
        tag = "fr" if isinstance(f, ForallRes) else "er"
        rmap2 = dict(rmap)
        for v in f.vars:
            n = counter[0]
            counter[0] += 1
            rmap2[v] = f"!{n}"
        return (tag, len(f.vars), _cset_key(f.cset, rmap2), _alpha(f.body, rmap2, amap, counter))
    raise TypeError(f)


def alpha_eq(a: Formula, b: Formula) -> bool:
    return alpha_key(a) == alpha_key(b)


# -- polarity ---------------------------------------------------------------


_POL_JOIN = {
    ("absent", "absent"): "absent",
    ("absent", "positive"): "positive",
    ("absent", "negative"): "negative",
    ("positive", "positive"): "positive",
    ("negative", "negative"): "negative",
}


def _join(a: str, b: str) -> str:
    if a == "both" or b == "both":
        return "both"
    return _POL_JOIN.get((a, b)) or _POL_JOIN.get((b, a)) or "both"


def _flip(a: str) -> str:
    return {"positive": "negative", "negative": "positive"}.get(a, a)


def _pol_poly(p: ResourcePoly, var: str) -> str:
    return "positive" if var in p.free_vars() else "absent"


def _pol_cset(cs: ConstraintSet, var: str) -> str:
    out = "absent"
    for c in cs.constraints:
        if var in c.lhs.free_vars():
            out = _join(out, "negative")
        if var in c.rhs.free_vars():
            out = _join(out, "positive")
    return out


def polarity(f: Formula, var: str) -> str:
    if isinstance(f, Atom):
        out = "absent"
        for a in f.args:
            out = _join(out, _pol_poly(a, var))
        return out
    if isinstance(f, Tensor):
        return _join(polarity(f.left, var), polarity(f.right, var))
    if isinstance(f, Lolli):
        return _join(_flip(polarity(f.left, var)), polarity(f.right, var))
    if isinstance(f, ForallAtom):
        return polarity(f.body, var)
    if isinstance(f, Bang):
        out = _flip(_pol_poly(f.bound, var))
        if f.var != var:
            out = _join(out, polarity(f.body, var))
        return out
    if isinstance(f, ForallRes):
        if var in f.vars:
            return "absent"
        return _join(_flip(_pol_cset(f.cset, var)), polarity(f.body, var))
    if isinstance(f, ExistsRes):
        if var in f.vars:
            return "absent"
        return _join(_pol_cset(f.cset, var), polarity(f.body, var))
    raise TypeError(f)


def positive_only(f: Formula, var: str) -> bool:
    return polarity(f, var) in ("positive", "absent")


# -- substitution of polynomials for resource variables ---------------------


def subst_poly(f: Formula, subst: Mapping[str, ResourcePoly]) -> Formula:
    live = {v: p for v, p in subst.items() if p != ResourcePoly.var(v)}
    if not live:
        return f
    return _subst_poly(f, live)


def _subst_poly(f: Formula, subst: dict[str, ResourcePoly]) -> Formula:
    if isinstance(f, Atom):
        return Atom(f.name, tuple(a.substitute(subst) for a in f.args))
    if isinstance(f, Tensor):
        return Tensor(_subst_poly(f.left, subst), _subst_poly(f.right, subst))
    if isinstance(f, Lolli):
        return Lolli(_subst_poly(f.left, subst), _subst_poly(f.right, subst))
    if isinstance(f, ForallAtom):
        return ForallAtom(f.atom, _subst_poly(f.body, subst))
    if isinstance(f, Bang):
        bound = f.bound.substitute(subst)
        inner = {v: p for v, p in subst.items() if v != f.var}
        relevant = {v: p for v, p in inner.items() if v in free_rvars(f.body)}
        # the binder scopes over the body only; it must dodge the new bound
        # as well as anything the incoming images mention
        clash = set(bound.free_vars())
        for p in relevant.values():
            clash |= p.free_vars()
        var, body = f.var, f.body
        if var in clash:
            var = fresh_name(var, clash | free_rvars(body) | set(relevant))
            body = _subst_poly(body, {f.var: ResourcePoly.var(var)})
        if relevant:
            body = _subst_poly(body, relevant)
        return Bang(var, bound, body)
    if isinstance(f, (ForallRes, ExistsRes)):
        cls = type(f)
        inner = {v: p for v, p in subst.items() if v not in f.vars}
        clash: set[str] = set(inner)
        for p in inner.values():
            clash |= p.free_vars()
        vars_ = list(f.vars)
        body, cset = f.body, f.cset
        bounds = list(f.bounds)
        renames: dict[str, ResourcePoly] = {}
        for i, v in enumerate(vars_):
            if v in clash:
                nv = fresh_name(v, clash | free_rvars(f) | set(vars_) | cset.free_vars())
                renames[v] = ResourcePoly.var(nv)
                vars_[i] = nv
        if renames:
            body = _subst_poly(body, renames)
            cset = cset.substitute(renames)
        if inner:
            body = _subst_poly(body, inner)
            cset = cset.substitute(inner)
            bounds = [b.substitute(inner) if b is not None else None for b in bounds]
        return cls(tuple(vars_), cset, tuple(bounds), body)
    raise TypeError(f)


def rename_rvars(f: Formula, renaming: Mapping[str, str]) -> Formula:
    return subst_poly(f, {old: ResourcePoly.var(new) for old, new in renaming.items()})


# -- substitution of formulas for atoms --------------------------------------


class PolarityError(Exception):
    pass


def subst_atom(f: Formula, atom: str, params: tuple[str, ...], image: Formula) -> Formula:
    """Replace every atom(p1..pn) in f by image{p1/params..}."""
    for v in params:
        if not positive_only(image, v):
            raise PolarityError(f"parameter {v!r} occurs non-positively in the image formula")
    spare = free_rvars(image) - set(params)
    return _subst_atom(f, atom, params, image, spare)


def _subst_atom(f, atom, params, image, spare):
    if isinstance(f, Atom):
        if f.name != atom:
            return f
        if len(f.args) != len(params):
            raise PolarityError(
                f"atom {atom!r} arity mismatch: {len(f.args)} args vs {len(params)} parameters"
            )
        return subst_poly(image, dict(zip(params, f.args)))
    if isinstance(f, Tensor):
        return Tensor(
            _subst_atom(f.left, atom, params, image, spare),
            _subst_atom(f.right, atom, params, image, spare),
        )
    if isinstance(f, Lolli):
        return Lolli(
            _subst_atom(f.left, atom, params, image, spare),
            _subst_atom(f.right, atom, params, image, spare),
        )
    if isinstance(f, ForallAtom):
        if f.atom == atom:
            return f
        if f.atom in free_atoms(image):
            na = fresh_name(f.atom, free_atoms(image) | free_atoms(f.body) | {atom})
            body = _rename_atom(f.body, f.atom, na)
            return ForallAtom(na, _subst_atom(body, atom, params, image, spare))
        return ForallAtom(f.atom, _subst_atom(f.body, atom, params, image, spare))
    if isinstance(f, Bang):
        var, body = f.var, f.body
        if var in spare:
            nv = fresh_name(var, spare | free_rvars(body))
            body = rename_rvars(body, {var: nv})
            var = nv
        return Bang(var, f.bound, _subst_atom(body, atom, params, image, spare))
    if isinstance(f, (ForallRes, ExistsRes)):
        cls = type(f)
        vars_, cset, body = list(f.vars), f.cset, f.body
        renames = {}
        for i, v in enumerate(vars_):
            if v in spare:
                nv = fresh_name(v, spare | free_rvars(f.body) | set(vars_) | cset.free_vars())
                renames[v] = nv
                vars_[i] = nv
        if renames:
            body = rename_rvars(body, renames)
            cset = cset.substitute({o: ResourcePoly.var(n) for o, n in renames.items()})
        return cls(tuple(vars_), cset, f.bounds, _subst_atom(body, atom, params, image, spare))
    raise TypeError(f)


def _rename_atom(f: Formula, old: str, new: str) -> Formula:
    if isinstance(f, Atom):
        return Atom(new, f.args) if f.name == old else f
    if isinstance(f, Tensor):
        return Tensor(_rename_atom(f.left, old, new), _rename_atom(f.right, old, new))
    if isinstance(f, Lolli):
        return Lolli(_rename_atom(f.left, old, new), _rename_atom(f.right, old, new))
    if isinstance(f, ForallAtom):
        if f.atom == old:
            return f
        return ForallAtom(f.atom, _rename_atom(f.body, old, new))
    if isinstance(f, Bang):
        return Bang(f.var, f.bound, _rename_atom(f.body, old, new))
    if isinstance(f, (ForallRes, ExistsRes)):
        return type(f)(f.vars, f.cset, f.bounds, _rename_atom(f.body, old, new))
    raise TypeError(f)


# -- well-formedness ---------------------------------------------------------


def well_formed(f: Formula, engine: Entailer) -> None:
    """Raise WellFormedError unless every binder node satisfies its side condition."""
    _well_formed(f, engine)
    _arities(f, {})


def _well_formed(f: Formula, engine: Entailer) -> None:
    if isinstance(f, Atom):
        return
    if isinstance(f, (Tensor, Lolli)):
        _well_formed(f.left, engine)
        _well_formed(f.right, engine)
        return
    if isinstance(f, ForallAtom):
        _well_formed(f.body, engine)
        return
    if isinstance(f, Bang):
        if f.var in f.bound.free_vars():
            raise WellFormedError(
                f"modality variable {f.var!r} occurs in its own bound", f
            )
        _well_formed(f.body, engine)
        return
    if isinstance(f, (ForallRes, ExistsRes)):
        if len(f.vars) != len(f.bounds):
            raise WellFormedError("bound annotations do not match quantified variables", f)
        for v, b in zip(f.vars, f.bounds):
            if b is None:
                raise WellFormedError(
                    f"quantified variable {v!r} carries no bound annotation", f
                )
            if b.free_vars() & set(f.vars):
                raise WellFormedError(
                    f"bound annotation for {v!r} mentions a quantified variable", f
                )
            verdict = engine.entails(
                f.cset, ConstraintSet.of([Constraint(ResourcePoly.var(v), b)])
            )
            if not verdict.is_valid:
                raise WellFormedError(
                    f"bound {v!r} not entailed by the quantifier constraints", f, verdict
                )
        _well_formed(f.body, engine)
        return
    raise TypeError(f)


def _arities(f: Formula, seen: dict[str, int]) -> None:
    if isinstance(f, Atom):
        prev = seen.setdefault(f.name, len(f.args))
        if prev != len(f.args):
            raise WellFormedError(
                f"atom {f.name!r} used with arities {prev} and {len(f.args)}", f
            )
        return
    if isinstance(f, (Tensor, Lolli)):
        _arities(f.left, seen)
        _arities(f.right, seen)
        return
    if isinstance(f, ForallAtom):
        had, old = f.atom in seen, seen.get(f.atom)
        seen.pop(f.atom, None)
        _arities(f.body, seen)
        seen.pop(f.atom, None)  # the bound atom's arity is scope-local
        if had:
            seen[f.atom] = old
        return
    if isinstance(f, Bang):
        _arities(f.body, seen)
        return
    if isinstance(f, (ForallRes, ExistsRes)):
        _arities(f.body, seen)
        return
    raise TypeError(f)


# -- the order on formulas ----------------------------------------------------


def leq_formula(cset: ConstraintSet, a: Formula, b: Formula, engine: Entailer) -> Verdict:
    """a <=form_cset b, tri-state; raises SkeletonMismatch on shape clashes."""
    if isinstance(a, Atom) and isinstance(b, Atom):
        if a.name != b.name or len(a.args) != len(b.args):
            raise SkeletonMismatch(f"atoms {a.name}/{len(a.args)} vs {b.name}/{len(b.args)}")
        return combine(engine.poly_leq(cset, p, q) for p, q in zip(a.args, b.args))
    if isinstance(a, Tensor) and isinstance(b, Tensor):
        return combine(
            [
                leq_formula(cset, a.left, b.left, engine),
                leq_formula(cset, a.right, b.right, engine),
            ]
        )
    if isinstance(a, Lolli) and isinstance(b, Lolli):
        return combine(
            [
                leq_formula(cset, b.left, a.left, engine),
                leq_formula(cset, a.right, b.right, engine),
            ]
        )
    if isinstance(a, ForallAtom) and isinstance(b, ForallAtom):
        nb = b.body if b.atom == a.atom else _rename_atom(b.body, b.atom, a.atom)
        return leq_formula(cset, a.body, nb, engine)
    if isinstance(a, Bang) and isinstance(b, Bang):
        avoid = (
            cset.free_vars()
            | free_rvars(a)
            | free_rvars(b)
            | a.bound.free_vars()
            | b.bound.free_vars()
        )
        z = fresh_name("z", avoid)
        abody = rename_rvars(a.body, {a.var: z})
        bbody = rename_rvars(b.body, {b.var: z})
        verdicts = [engine.poly_leq(cset, b.bound, a.bound)]
        inner = cset.add(Constraint(ResourcePoly.var(z).add(ResourcePoly.const(1)), b.bound))
        verdicts.append(leq_formula(inner, abody, bbody, engine))
        return combine(verdicts)
    if isinstance(a, (ForallRes, ExistsRes)) and type(a) is type(b):
        if len(a.vars) != len(b.vars):
            raise SkeletonMismatch("quantifier arity mismatch")
        avoid = cset.free_vars() | free_rvars(a) | free_rvars(b) | set(a.vars) | set(b.vars)
        fresh = []
        for v in a.vars:
            nv = fresh_name(v, avoid)
            avoid = avoid | {nv}
            fresh.append(nv)
        ra = dict(zip(a.vars, fresh))
        rb = dict(zip(b.vars, fresh))
        acs = a.cset.substitute({o: ResourcePoly.var(n) for o, n in ra.items()})
        bcs = b.cset.substitute({o: ResourcePoly.var(n) for o, n in rb.items()})
        abody = rename_rvars(a.body, ra)
        bbody = rename_rvars(b.body, rb)
        if isinstance(a, ForallRes):
            hypo = cset.union(bcs)
            verdicts = [engine.entails(hypo, acs)]
        else:
            hypo = cset.union(acs)
            verdicts = [engine.entails(hypo, bcs)]
        verdicts.append(leq_formula(hypo, abody, bbody, engine))
        return combine(verdicts)
    raise SkeletonMismatch(f"{type(a).__name__} vs {type(b).__name__}")


# -- data formulas of the programming fragment --------------------------------


def nat_formula(p: ResourcePoly, atom: str = "a") -> Formula:
    return word_formula(1, p, atom)


def word_formula(w: int, p: ResourcePoly, atom: str = "a") -> Formula:
    """The iterator type for a word algebra with w unary constructors."""
    if w < 1:
        raise ValueError("word algebras have at least one unary constructor")
    y = fresh_name("y", p.free_vars())
    yv = ResourcePoly.var(y)
    step = Bang(
        y,
        p,
        Lolli(Atom(atom, (yv,)), Atom(atom, (yv.add(ResourcePoly.const(1)),))),
    )
    body = Lolli(Atom(atom, (ResourcePoly.zero(),)), Atom(atom, (p,)))
    for _ in range(w):
        body = Lolli(step, body)
    return ForallAtom(atom, body)

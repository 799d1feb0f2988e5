"""Proof transformations: constraint strengthening, monotone widening along
the formula order, substitution of polynomials for variables, substitution of
formulas for atoms, and the quantifier cut-reduction step.

Each transformation rebuilds the derivation tree; outputs are meant to be
re-checked by the kernel (the test suite does exactly that) and preserve the
forgotten skeleton tree node for node.
"""

from __future__ import annotations

from .builders import (
    axiom,
    bang_merge,
    cut,
    dbang,
    lexistsx,
    lforalla,
    lforallx,
    llolli,
    ltensor,
    nbang,
    pbang,
    rexistsx,
    rforalla,
    rforallx,
    rlolli,
    rtensor,
    weak,
)
from .constraint import Constraint, ConstraintSet, Entailer
from .formula import (
    Atom,
    Bang,
    ExistsRes,
    ForallAtom,
    ForallRes,
    Formula,
    Lolli,
    Tensor,
    _rename_atom,
    free_atoms,
    free_rvars,
    fresh_name,
    rename_rvars,
    subst_atom,
    subst_poly,
)
from .kernel import Judgement, Proof, _ins, _without
from .respoly import ResourcePoly

RP = ResourcePoly


class TransformError(Exception):
    pass


def _map_judgement(j: Judgement, fn) -> Judgement:
    return Judgement(j.cset, tuple(fn(f) for f in j.context), fn(j.conclusion))


# -- substitution of polynomials for variables -----------------------------------


def subst_vars(proof: Proof, sigma: dict[str, RP]) -> Proof:
    live = {k: p for k, p in sigma.items() if p != RP.var(k)}
    if not live:
        return proof
    return _subst_vars(proof, live)


def _sigma_clash(sigma: dict[str, RP]) -> set[str]:
    out = set(sigma)
    for p in sigma.values():
        out |= p.free_vars()
    return out


def _subst_vars(proof: Proof, sigma: dict[str, RP]) -> Proof:
    rule = proof.rule
    j = proof.claimed
    newj = Judgement(
        j.cset.substitute(sigma),
        tuple(subst_poly(f, sigma) for f in j.context),
        subst_poly(j.conclusion, sigma),
    )
    params = dict(proof.params)
    clash = _sigma_clash(sigma)

    if rule == "Pbang":
        x = params["x"]
        premise = proof.premises[0]
        if x in clash:
            x2 = fresh_name(x, clash | premise.claimed.free_rvars())
            premise = _subst_vars(premise, {x: RP.var(x2)})
            params["x"] = x2
            x = x2
        inner = {k: p for k, p in sigma.items() if k != x}
        prem = _subst_vars(premise, inner) if inner else premise
        return Proof(rule, params, (prem,), newj)

    if rule in ("Rforallx", "Lexistsx"):
        actual = list(params["vars"])
        premise = proof.premises[0]
        renames = {}
        for i, a in enumerate(actual):
            if a in clash:
                na = fresh_name(a, clash | premise.claimed.free_rvars() | set(actual))
                renames[a] = RP.var(na)
                actual[i] = na
        if renames:
            premise = _subst_vars(premise, renames)
        params["vars"] = tuple(actual)
        inner = {k: p for k, p in sigma.items() if k not in actual}
        prem = _subst_vars(premise, inner) if inner else premise
        return Proof(rule, params, (prem,), newj)

    if rule == "X":
        params["p"] = params["p"].substitute(sigma)
        params["q"] = params["q"].substitute(sigma)
    elif rule == "Nbang":
        w = params["w"]
        if w in clash:
            w2 = fresh_name(w, clash | params["q"].free_vars())
            params["q"] = params["q"].substitute({w: RP.var(w2)})
            params["w"] = w2
            w = w2
        params["p"] = params["p"].substitute(sigma)
        params["q"] = params["q"].substitute({k: p for k, p in sigma.items() if k != w})
        for key in ("y", "z"):
            if params[key] in clash:
                params[key] = fresh_name(params[key], clash | {params["w"]})
    elif rule in ("Lforallx", "Rexistsx"):
        params["witnesses"] = tuple(wt.substitute(sigma) for wt in params["witnesses"])
    elif rule == "Lforalla":
        bparams = list(params["params"])
        image = params["B"]
        renames = {}
        for i, bp in enumerate(bparams):
            if bp in clash:
                nb = fresh_name(bp, clash | free_rvars(image) | set(bparams))
                renames[bp] = nb
                bparams[i] = nb
        if renames:
            image = rename_rvars(image, renames)
        inner = {k: p for k, p in sigma.items() if k not in bparams}
        params["B"] = subst_poly(image, inner)
        params["params"] = tuple(bparams)

    prems = tuple(_subst_vars(p, sigma) for p in proof.premises)
    return Proof(rule, params, prems, newj)


# -- strengthening ------------------------------------------------------------------


def strengthen(proof: Proof, cset: ConstraintSet) -> Proof:
    rule = proof.rule
    j = proof.claimed
    newj = Judgement(cset, j.context, j.conclusion)

    if rule == "Pbang":
        params = dict(proof.params)
        premise = proof.premises[0]
        x = params["x"]
        if x in cset.free_vars():
            x2 = fresh_name(x, cset.free_vars() | premise.claimed.free_rvars())
            premise = subst_vars(premise, {x: RP.var(x2)})
            params["x"] = x2
        return Proof(rule, params, (premise,), newj)

    if rule in ("Rforallx", "Lexistsx"):
        params = dict(proof.params)
        premise = proof.premises[0]
        actual = list(params["vars"])
        renames = {}
        for i, a in enumerate(actual):
            if a in cset.free_vars():
                na = fresh_name(a, cset.free_vars() | premise.claimed.free_rvars()
                                | set(actual))
                renames[a] = RP.var(na)
                actual[i] = na
        if renames:
            premise = subst_vars(premise, renames)
        params["vars"] = tuple(actual)
        quant = j.conclusion if rule == "Rforallx" else j.context[params["at"]]
        ren = {vv: RP.var(a) for vv, a in zip(quant.vars, actual)}
        inner = cset.union(quant.cset.substitute(ren))
        return Proof(rule, params, (strengthen(premise, inner),), newj)

    prems = tuple(strengthen(p, cset) for p in proof.premises)
    return Proof(rule, dict(proof.params), prems, newj)


# -- monotone widening ----------------------------------------------------------------


def _align_binder(f: Bang, var: str) -> Bang:
    if f.var == var:
        return f
    return Bang(var, f.bound, rename_rvars(f.body, {f.var: var}))


def _align_quant(f, vars_: tuple[str, ...]):
    if f.vars == vars_:
        return f
    ren = {old: new for old, new in zip(f.vars, vars_)}
    return type(f)(vars_, f.cset.substitute({o: RP.var(n) for o, n in ren.items()}),
                   f.bounds, rename_rvars(f.body, ren))


def _shape(f, cls, what):
    if not isinstance(f, cls):
        raise TransformError(f"{what}: expected {cls.__name__}, got {type(f).__name__}")
    return f


def monotone(proof: Proof, new_ctx: list[Formula], new_concl: Formula,
             engine: Entailer | None = None) -> Proof:
    if len(new_ctx) != len(proof.claimed.context):
        raise TransformError("context length mismatch")
    return _monotone(proof, list(new_ctx), new_concl)


def _monotone(proof: Proof, ctx: list[Formula], concl: Formula) -> Proof:
    rule = proof.rule
    j = proof.claimed
    p = proof.params

    if rule == "A":
        return axiom(j.cset, ctx[0], concl)
    if rule == "U":
        n1 = len(proof.premises[0].claimed.context)
        cut_at = p["cut_at"]
        mid = proof.premises[0].claimed.conclusion
        r1 = _monotone(proof.premises[0], ctx[:n1], mid)
        inner = list(ctx[n1:])
        inner.insert(cut_at, mid)
        r2 = _monotone(proof.premises[1], inner, concl)
        return cut(r1, r2, cut_at)
    if rule == "W":
        at = p["at"]
        r = _monotone(proof.premises[0], ctx[:at] + ctx[at + 1 :], concl)
        return weak(r, ctx[at], at)
    if rule == "X":
        at, at2 = p["at"], p.get("at2", p["at"] + 1)
        old = j.context[at]
        new = _align_binder(_shape(ctx[at], Bang, "contraction principal"), old.var)
        part1 = Bang(old.var, p["p"], new.body)
        yf = fresh_name("y", free_rvars(new.body) | p["p"].free_vars()
                        | p["q"].free_vars() | {old.var})
        part2 = Bang(yf, p["q"], subst_poly(new.body, {old.var: p["p"] + RP.var(yf)}))
        inner = list(ctx)
        inner[at] = part1
        inner.insert(at2, part2)
        r = _monotone(proof.premises[0], inner, concl)
        return bang_merge(r, at, at2, p["p"], p["q"], new.bound)
    if rule == "Rlolli":
        tgt = _shape(concl, Lolli, "abstraction target")
        inner = list(ctx)
        inner.insert(p["arg_at"], tgt.left)
        r = _monotone(proof.premises[0], inner, tgt.right)
        return rlolli(r, p["arg_at"])
    if rule == "Llolli":
        at, b_at = p["at"], p["b_at"]
        tgt = _shape(ctx[at], Lolli, "application principal")
        n1 = len(proof.premises[0].claimed.context)
        rest = ctx[:at] + ctx[at + 1 :]
        gn, dn = rest[:n1], rest[n1:]
        r1 = _monotone(proof.premises[0], list(gn), tgt.left)
        inner = list(dn)
        inner.insert(b_at, tgt.right)
        r2 = _monotone(proof.premises[1], inner, concl)
        return llolli(r1, r2, b_at, at)
    if rule == "Rtensor":
        tgt = _shape(concl, Tensor, "tensor target")
        n1 = len(proof.premises[0].claimed.context)
        r1 = _monotone(proof.premises[0], ctx[:n1], tgt.left)
        r2 = _monotone(proof.premises[1], ctx[n1:], tgt.right)
        return rtensor(r1, r2)
    if rule == "Ltensor":
        at = p["at"]
        tgt = _shape(ctx[at], Tensor, "tensor principal")
        inner = ctx[:at] + [tgt.left, tgt.right] + ctx[at + 1 :]
        r = _monotone(proof.premises[0], inner, concl)
        return ltensor(r, at)
    if rule == "Pbang":
        x = p["x"]
        tgt = _align_binder(_shape(concl, Bang, "promotion target"), x)
        bodies = []
        bounds = []
        for f in ctx:
            bf = _align_binder(_shape(f, Bang, "promotion hypothesis"), x)
            bodies.append(bf.body)
            bounds.append(bf.bound)
        inner_cset = j.cset.add(Constraint(RP.var(x) + RP.const(1), tgt.bound))
        sigma = strengthen(proof.premises[0], inner_cset)
        r = _monotone(sigma, bodies, tgt.body)
        return pbang(r, x, tgt.bound, bounds, j.cset)
    if rule == "Dbang":
        at = p["at"]
        old = j.context[at]
        tgt = _align_binder(_shape(ctx[at], Bang, "dereliction principal"), old.var)
        inner = list(ctx)
        inner[at] = subst_poly(tgt.body, {tgt.var: RP.zero()})
        r = _monotone(proof.premises[0], inner, concl)
        return dbang(r, at, tgt)
    if rule == "Nbang":
        at = p["at"]
        old = j.context[at]
        tgt = _align_binder(_shape(ctx[at], Bang, "digging principal"), old.var)
        y, z, w = p["y"], p["z"], p["w"]
        qy = p["q"].substitute({w: RP.var(y)})
        partial = p["q"].bounded_sum(w, y)
        inner_f = Bang(y, p["p"], Bang(z, qy,
                       subst_poly(tgt.body, {tgt.var: RP.var(z) + partial})))
        inner = list(ctx)
        inner[at] = inner_f
        r = _monotone(proof.premises[0], inner, concl)
        return nbang(r, at, tgt, p["p"], p["q"], w, y, z)
    if rule == "Rforalla":
        atom = p["atom"]
        tgt = _shape(concl, ForallAtom, "atom quantification target")
        body = tgt.body if tgt.atom == atom else _rename_atom(tgt.body, tgt.atom, atom)
        r = _monotone(proof.premises[0], ctx, body)
        return rforalla(r, atom)
    if rule == "Lforalla":
        at = p["at"]
        old = j.context[at]
        tgt = _shape(ctx[at], ForallAtom, "atom instantiation principal")
        body = tgt.body if tgt.atom == old.atom else _rename_atom(tgt.body, tgt.atom,
                                                                  old.atom)
        inner = list(ctx)
        inner[at] = subst_atom(body, old.atom, tuple(p["params"]), p["B"])
        r = _monotone(proof.premises[0], inner, concl)
        return lforalla(r, at, ForallAtom(old.atom, body), p["B"], tuple(p["params"]))
    if rule == "Rforallx":
        actual = tuple(p["vars"])
        tgt = _align_quant(_shape(concl, ForallRes, "quantification target"),
                           j.conclusion.vars)
        ren = {vv: RP.var(a) for vv, a in zip(tgt.vars, actual)}
        inner_cset = j.cset.union(tgt.cset.substitute(ren))
        sigma = strengthen(proof.premises[0], inner_cset)
        r = _monotone(sigma, ctx, subst_poly(tgt.body, ren))
        return rforallx(r, j.cset, tgt, actual)
    if rule == "Lforallx":
        at = p["at"]
        old = j.context[at]
        tgt = _align_quant(_shape(ctx[at], ForallRes, "instantiation principal"),
                           old.vars)
        sub = dict(zip(tgt.vars, p["witnesses"]))
        inner = list(ctx)
        inner[at] = subst_poly(tgt.body, sub)
        r = _monotone(proof.premises[0], inner, concl)
        return lforallx(r, at, tgt, tuple(p["witnesses"]))
    if rule == "Rexistsx":
        tgt = _align_quant(_shape(concl, ExistsRes, "existential target"),
                           j.conclusion.vars)
        sub = dict(zip(tgt.vars, p["witnesses"]))
        r = _monotone(proof.premises[0], ctx, subst_poly(tgt.body, sub))
        return rexistsx(r, tgt, tuple(p["witnesses"]))
    if rule == "Lexistsx":
        at = p["at"]
        actual = tuple(p["vars"])
        old = j.context[at]
        tgt = _align_quant(_shape(ctx[at], ExistsRes, "existential principal"),
                           old.vars)
        ren = {vv: RP.var(a) for vv, a in zip(tgt.vars, actual)}
        inner_cset = j.cset.union(tgt.cset.substitute(ren))
        sigma = strengthen(proof.premises[0], inner_cset)
        inner = list(ctx)
        inner[at] = subst_poly(tgt.body, ren)
        r = _monotone(sigma, inner, concl)
        return lexistsx(r, at, tgt, actual, j.cset)
    raise AssertionError(rule)


# -- substitution of formulas for atoms --------------------------------------------


def rename_atom_proof(proof: Proof, old: str, new: str) -> Proof:
    rule = proof.rule
    if rule == "Rforalla" and proof.params["atom"] == old:
        return proof
    params = dict(proof.params)
    if rule == "Lforalla":
        params["B"] = _rename_atom(params["B"], old, new)
    newj = _map_judgement(proof.claimed, lambda f: _rename_atom(f, old, new))
    prems = tuple(rename_atom_proof(q, old, new) for q in proof.premises)
    return Proof(rule, params, prems, newj)


def subst_atoms(proof: Proof, atom: str, params_: tuple[str, ...],
                image: Formula) -> Proof:
    rule = proof.rule
    j = proof.claimed
    prm = dict(proof.params)
    spare = free_rvars(image) - set(params_)

    if rule == "Rforalla":
        bound = prm["atom"]
        if bound == atom:
            return proof
        if bound in free_atoms(image):
            nb = fresh_name(bound, free_atoms(image) | {atom})
            return subst_atoms(rename_atom_proof(proof, bound, nb), atom, params_, image)

    if rule == "Pbang" and prm["x"] in spare:
        x2 = fresh_name(prm["x"], spare | proof.claimed.free_rvars())
        prem = subst_vars(proof.premises[0], {prm["x"]: RP.var(x2)})
        prm["x"] = x2
        proof = Proof(rule, prm, (prem,), j)
        prm = dict(proof.params)

    if rule in ("Rforallx", "Lexistsx") and set(prm["vars"]) & spare:
        actual = list(prm["vars"])
        renames = {}
        for i, a in enumerate(actual):
            if a in spare:
                na = fresh_name(a, spare | proof.claimed.free_rvars() | set(actual))
                renames[a] = RP.var(na)
                actual[i] = na
        prem = subst_vars(proof.premises[0], renames)
        prm["vars"] = tuple(actual)
        proof = Proof(rule, prm, (prem,), j)
        prm = dict(proof.params)

    if rule == "Lforalla":
        bparams = list(prm["params"])
        img = prm["B"]
        renames = {}
        for i, bp in enumerate(bparams):
            if bp in spare:
                nb = fresh_name(bp, spare | free_rvars(img) | set(bparams))
                renames[bp] = nb
                bparams[i] = nb
        if renames:
            img = rename_rvars(img, renames)
        prm["B"] = subst_atom(img, atom, params_, image)
        prm["params"] = tuple(bparams)

    newj = _map_judgement(j, lambda f: subst_atom(f, atom, params_, image))
    prems = tuple(subst_atoms(q, atom, params_, image) for q in proof.premises)
    return Proof(rule, prm, prems, newj)


# -- quantifier cut-reduction ----------------------------------------------------------


def reduce_quantifier_cut(proof: Proof) -> Proof:
    if proof.rule != "U":
        raise TransformError("root is not a cut")
    left, right = proof.premises
    if left.rule != "Rforallx" or right.rule != "Lforallx":
        raise TransformError("cut premises are not a forall introduction/elimination pair")
    if right.params["at"] != proof.params["cut_at"]:
        raise TransformError("the eliminated quantifier is not the cut formula")
    actual = left.params["vars"]
    witnesses = right.params["witnesses"]
    inner = subst_vars(left.premises[0],
                       {a: wt for a, wt in zip(actual, witnesses)})
    sigma = strengthen(inner, proof.claimed.cset)
    return cut(sigma, right.premises[0], proof.params["cut_at"])

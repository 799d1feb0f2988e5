"""Untrusted proof construction: rule constructors, wiring combinators, and
the standard library of word-algebra proofs (zero, successor, iteration,
duplication, numerals).

Everything built here computes its claimed judgement but is never trusted:
the kernel re-checks each node.  One generalization over the displayed rule
table: the bang-splitting rule carries both premise positions explicitly, so
the two parts need not be adjacent.
"""

from __future__ import annotations

from .constraint import ConstraintSet
from .formula import (
    Atom,
    Bang,
    ExistsRes,
    ForallAtom,
    ForallRes,
    Formula,
    Lolli,
    Tensor,
    alpha_eq,
    free_rvars,
    fresh_name,
    subst_atom,
    subst_poly,
    word_formula,
)
from .kernel import Judgement, Proof, _ins, _without
from .respoly import ResourcePoly

RP = ResourcePoly


def _j(cset, ctx, concl) -> Judgement:
    return Judgement(cset, tuple(ctx), concl)


# -- one constructor per rule -------------------------------------------------


def axiom(cset: ConstraintSet, hyp: Formula, concl: Formula | None = None) -> Proof:
    return Proof("A", {}, (), _j(cset, (hyp,), concl if concl is not None else hyp))


def cut(p1: Proof, p2: Proof, cut_at: int) -> Proof:
    j1, j2 = p1.claimed, p2.claimed
    ctx = j1.context + _without(j2.context, cut_at)
    return Proof("U", {"cut_at": cut_at}, (p1, p2), _j(j1.cset, ctx, j2.conclusion))


def weak(p: Proof, extra: Formula, at: int | None = None) -> Proof:
    j = p.claimed
    at = len(j.context) if at is None else at
    ctx = j.context[:at] + (extra,) + j.context[at:]
    return Proof("W", {"at": at}, (p,), _j(j.cset, ctx, j.conclusion))


def bang_merge(p: Proof, at: int, at2: int, split: RP, rest: RP, merged_bound: RP) -> Proof:
    """X bottom-up: premise holds !_{x<split} A at `at` and the shifted
    !_{y<rest} A{split+y/x} at `at2`; conclusion merges them to
    !_{x<merged_bound} A at `at`."""
    j = p.claimed
    part1 = j.context[at]
    assert isinstance(part1, Bang)
    merged = Bang(part1.var, merged_bound, part1.body)
    ctx = _without(_ins(j.context, at, merged), at2 if at2 > at else at2)
    if at2 < at:
        raise ValueError("bang_merge expects at < at2")
    return Proof("X", {"at": at, "at2": at2, "p": split, "q": rest}, (p,),
                 _j(j.cset, ctx, j.conclusion))


def rlolli(p: Proof, arg_at: int) -> Proof:
    j = p.claimed
    concl = Lolli(j.context[arg_at], j.conclusion)
    return Proof("Rlolli", {"arg_at": arg_at}, (p,),
                 _j(j.cset, _without(j.context, arg_at), concl))


def llolli(p1: Proof, p2: Proof, b_at: int, at: int) -> Proof:
    j1, j2 = p1.claimed, p2.claimed
    principal = Lolli(j1.conclusion, j2.context[b_at])
    base = j1.context + _without(j2.context, b_at)
    ctx = base[:at] + (principal,) + base[at:]
    return Proof("Llolli", {"at": at, "b_at": b_at}, (p1, p2),
                 _j(j1.cset, ctx, j2.conclusion))


def rtensor(p1: Proof, p2: Proof) -> Proof:
    j1, j2 = p1.claimed, p2.claimed
    return Proof("Rtensor", {}, (p1, p2),
                 _j(j1.cset, j1.context + j2.context, Tensor(j1.conclusion, j2.conclusion)))


def ltensor(p: Proof, at: int) -> Proof:
    j = p.claimed
    principal = Tensor(j.context[at], j.context[at + 1])
    ctx = j.context[:at] + (principal,) + j.context[at + 2 :]
    return Proof("Ltensor", {"at": at}, (p,), _j(j.cset, ctx, j.conclusion))


def pbang(p: Proof, x: str, bound: RP, hyp_bounds: list[RP], cset: ConstraintSet) -> Proof:
    j = p.claimed
    if len(hyp_bounds) != len(j.context):
        raise ValueError("one bound per hypothesis")
    ctx = tuple(Bang(x, q, f) for q, f in zip(hyp_bounds, j.context))
    return Proof("Pbang", {"x": x}, (p,), _j(cset, ctx, Bang(x, bound, j.conclusion)))


def dbang(p: Proof, at: int, bang: Bang) -> Proof:
    j = p.claimed
    return Proof("Dbang", {"at": at}, (p,),
                 _j(j.cset, _ins(j.context, at, bang), j.conclusion))


def nbang(p: Proof, at: int, bang: Bang, outer: RP, inner: RP, w: str, y: str, z: str) -> Proof:
    j = p.claimed
    return Proof("Nbang", {"at": at, "p": outer, "q": inner, "w": w, "y": y, "z": z},
                 (p,), _j(j.cset, _ins(j.context, at, bang), j.conclusion))


def rforalla(p: Proof, atom: str) -> Proof:
    j = p.claimed
    return Proof("Rforalla", {"atom": atom}, (p,),
                 _j(j.cset, j.context, ForallAtom(atom, j.conclusion)))


def lforalla(p: Proof, at: int, quantified: ForallAtom, image: Formula,
             params: tuple[str, ...]) -> Proof:
    j = p.claimed
    return Proof("Lforalla", {"at": at, "B": image, "params": params}, (p,),
                 _j(j.cset, _ins(j.context, at, quantified), j.conclusion))


def rforallx(p: Proof, cset: ConstraintSet, quant: ForallRes, actual: tuple[str, ...]) -> Proof:
    j = p.claimed
    return Proof("Rforallx", {"vars": actual}, (p,), _j(cset, j.context, quant))


def lforallx(p: Proof, at: int, quant: ForallRes, witnesses: tuple[RP, ...]) -> Proof:
    j = p.claimed
    return Proof("Lforallx", {"at": at, "witnesses": witnesses}, (p,),
                 _j(j.cset, _ins(j.context, at, quant), j.conclusion))


def rexistsx(p: Proof, quant: ExistsRes, witnesses: tuple[RP, ...]) -> Proof:
    j = p.claimed
    return Proof("Rexistsx", {"witnesses": witnesses}, (p,), _j(j.cset, j.context, quant))


def lexistsx(p: Proof, at: int, quant: ExistsRes, actual: tuple[str, ...],
             cset: ConstraintSet) -> Proof:
    j = p.claimed
    return Proof("Lexistsx", {"at": at, "vars": actual}, (p,),
                 _j(cset, _ins(j.context, at, quant), j.conclusion))


# -- wiring combinators ---------------------------------------------------------


def apply_chain(arg_proofs: list[Proof], result: Formula) -> Proof:
    """From proofs G_i |- F_i, derive [F_1 -o ... -o F_n -o R, G_1.., G_n..] |- R
    with the chain formula at position 0."""
    if not arg_proofs:
        raise ValueError("empty application chain")
    cset = arg_proofs[0].claimed.cset
    prev = axiom(cset, result)
    for p in reversed(arg_proofs):
        prev = llolli(p, prev, b_at=0, at=0)
    return prev


def move_to_end(p: Proof, at: int) -> Proof:
    """Rotate the hypothesis at `at` to the last context position (derivable:
    abstract it, then cut against an application proof)."""
    j = p.claimed
    f = j.context[at]
    abstracted = rlolli(p, at)
    app = llolli(axiom(j.cset, f), axiom(j.cset, j.conclusion), b_at=0, at=1)
    return cut(abstracted, app, cut_at=1)


def permute(p: Proof, order: list[int]) -> Proof:
    """Reorder the context to [ctx[i] for i in order] via rotations."""
    n = len(p.claimed.context)
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the context positions")
    if order == list(range(n)):
        return p
    cur = list(range(n))
    for idx in order:
        pos = cur.index(idx)
        p = move_to_end(p, pos)
        cur.pop(pos)
        cur.append(idx)
    return p


def weak_many(p: Proof, extras: list[tuple[int, Formula]]) -> Proof:
    """Insert several unused hypotheses; positions refer to the final context."""
    for at, f in sorted(extras):
        p = weak(p, f, at)
    return p


def contract_pair(p: Proof, i: int, j_at: int, dup: Proof) -> Proof:
    """Merge the alpha-equal hypotheses at i < j_at using a duplication proof
    `dup : cset, [F] |- F (x) F`; the merged copy lands at the end."""
    j = p.claimed
    f = j.context[i]
    if not alpha_eq(f, j.context[j_at]):
        raise ValueError("contract_pair needs alpha-equal hypotheses")
    p = move_to_end(p, j_at)
    p = move_to_end(p, i if i < j_at else i - 1)
    p = rlolli(p, len(p.claimed.context) - 1)
    p = rlolli(p, len(p.claimed.context) - 1)
    goal = j.conclusion
    inner = llolli(axiom(j.cset, f), axiom(j.cset, goal), b_at=0, at=1)
    app2 = llolli(axiom(j.cset, f), inner, b_at=1, at=2)
    tens = ltensor(app2, at=0)
    chi = cut(dup, tens, cut_at=0)
    return cut(p, chi, cut_at=1)


def tensor_intro(proofs: list[Proof]) -> Proof:
    """Left-nested tensor of independent proofs: ((F1 x F2) x F3) ..."""
    out = proofs[0]
    for p in proofs[1:]:
        out = rtensor(out, p)
    return out


def untensor_all(p: Proof, at: int, n: int) -> Proof:
    """Split a left-nested n-fold tensor hypothesis at `at` into n hypotheses
    (bottom-up builder: p's context holds the n parts at positions at..at+n-1)."""
    for _ in range(n - 1):
        p = ltensor(p, at)
    return p


# -- standard library -------------------------------------------------------------


def step_formula(atom: str, var: str, bound: RP) -> Bang:
    yv = RP.var(var)
    return Bang(var, bound, Lolli(Atom(atom, (yv,)), Atom(atom, (yv + RP.const(1),))))


def zero_proof(w: int, cset: ConstraintSet | None = None) -> Proof:
    """|- W_0 for the algebra with w unary constructors."""
    cset = cset or ConstraintSet.empty()
    zero = RP.zero()
    a0 = Atom("a", (zero,))
    core = axiom(cset, a0)
    for jdx in range(w):
        core = weak(core, step_formula("a", "y", zero), at=jdx)
    for _ in range(w + 1):
        core = rlolli(core, len(core.claimed.context) - 1)
    return rforalla(core, "a")


def succ_proof(w: int, cons: int, p: RP | None = None,
               cset: ConstraintSet | None = None) -> Proof:
    """W_p |- W_{p+1}, prepending constructor `cons`."""
    cset = cset or ConstraintSet.empty()
    p = p if p is not None else RP.var("x")
    one = RP.const(1)
    p1 = p + one
    a = "a"
    wp = word_formula(w, p, a)
    narrow = step_formula(a, "z", p)        # !_{z<p} step
    wide = step_formula(a, "z", p1)         # !_{z<p+1} step
    args: list[Proof] = []
    for jdx in range(1, w + 1):
        if jdx == cons:
            args.append(axiom(cset, narrow))
        else:
            args.append(axiom(cset, wide, narrow))
    args.append(axiom(cset, Atom(a, (RP.zero(),))))
    chain = apply_chain(args, Atom(a, (p,)))
    got = lforalla(chain, 0, wp, Atom(a, (RP.var("q0"),)), ("q0",))
    top = llolli(got, axiom(cset, Atom(a, (p1,))), b_at=0,
                 at=len(got.claimed.context))
    xv = fresh_name("u", p.free_vars())
    shifted_body = Lolli(Atom(a, (p + RP.var(xv),)),
                         Atom(a, (p + RP.var(xv) + one,)))
    top = dbang(top, len(top.claimed.context) - 1, Bang(xv, one, shifted_body))
    top = bang_merge(top, at=cons, at2=len(top.claimed.context) - 1,
                     split=p, rest=one, merged_bound=p1)
    for _ in range(w + 1):
        top = rlolli(top, len(top.claimed.context) - 1)
    return rforalla(top, a)


def word_proof(w: int, word, cset: ConstraintSet | None = None) -> Proof:
    """Numeral: |- W_n for a concrete word of length n."""
    from .lam import word_of

    cset = cset or ConstraintSet.empty()
    seq = word_of(word)
    out = zero_proof(w, cset)
    size = 0
    for cons in reversed(seq):
        step = succ_proof(w, cons, RP.const(size), cset)
        out = cut(out, step, cut_at=0)
        size += 1
    return out


def iter_proof(w: int, body: Formula, var: str, p: RP,
               cset: ConstraintSet | None = None) -> Proof:
    """The iteration proof: W_p, !_{y<p}(B{y/var} -o B{y+1/var}) repeated for
    each constructor, B{0/var} |- B{p/var}.  Requires var positive in body."""
    cset = cset or ConstraintSet.empty()
    y = fresh_name("y", free_rvars(body) | p.free_vars())
    yv = RP.var(y)
    b_y = subst_poly(body, {var: yv})
    b_y1 = subst_poly(body, {var: yv + RP.const(1)})
    step = Bang(y, p, Lolli(b_y, b_y1))
    b0 = subst_poly(body, {var: RP.zero()})
    bp = subst_poly(body, {var: p})
    args = [axiom(cset, step) for _ in range(w)] + [axiom(cset, b0)]
    chain = apply_chain(args, bp)
    return lforalla(chain, 0, word_formula(w, p, "a"), body, (var,))


def dup_proof(w: int, var: str = "x", cset: ConstraintSet | None = None) -> Proof:
    """Contraction for word algebras: W_var |- W_var (x) W_var."""
    cset = cset or ConstraintSet.empty()
    x = RP.var(var)
    y = fresh_name("y", {var})
    yv = RP.var(y)
    wy = word_formula(w, yv, "a")
    wy1 = word_formula(w, yv + RP.const(1), "a")
    pair = Tensor(wy, wy)

    bangs = []
    for cons in range(1, w + 1):
        succ = succ_proof(w, cons, yv, cset)
        both = rtensor(succ, succ)
        inner = rlolli(ltensor(both, 0), 0)
        bangs.append(pbang(inner, y, x, [], cset))
    z = zero_proof(w, cset)
    base = rtensor(z, z)

    zvar = fresh_name("z", {var, y})
    body = Tensor(word_formula(w, RP.var(zvar), "a"), word_formula(w, RP.var(zvar), "a"))
    it = iter_proof(w, body, zvar, x, cset)
    out = it
    for b in bangs:
        out = cut(b, out, cut_at=1)
    out = cut(base, out, cut_at=1)
    return out

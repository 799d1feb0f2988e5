"""Ramified recurrence on words: the function algebra, its reference
interpreter, the tier checker, and compilation into kernel-checked proofs.

A program with tiers (i1..in) -> i compiles to a proof of

    {x_k <= x : i_k = i}:  W_x1, .., W_xn  |-  W_{q(higher-tier sizes) + x}

The recursion case iterates a step invariant B(y) packaging the untouched
parameters, the accumulated result at size (y+1)*q(..,y)+x, and the rebuilt
recursion argument; conditionals reuse the same loop with the accumulator
replaced at every constructor.  Word duplication goes through the contraction
lemma proofs wherever a parameter is consumed twice.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..builders import (
    apply_chain,
    axiom,
    contract_pair,
    cut,
    iter_proof,
    llolli,
    ltensor,
    move_to_end,
    pbang,
    permute,
    rlolli,
    rtensor,
    succ_proof,
    tensor_intro,
    weak,
    word_proof,
    zero_proof,
    dup_proof,
)
from ..constraint import Constraint, ConstraintSet, Entailer
from ..formula import Formula, Lolli, Tensor, word_formula
from ..kernel import Proof
from ..respoly import ResourcePoly, leq_syntactic, sum_polys
from ..transform import monotone, strengthen, subst_vars

RP = ResourcePoly


class RrwError(Exception):
    pass


Sig = tuple[tuple[int, ...], int]


@dataclass(frozen=True)
class Id:
    sig: Sig | None = None


@dataclass(frozen=True)
class Zero:
    sig: Sig | None = None


@dataclass(frozen=True)
class Cons:
    k: int
    sig: Sig | None = None


@dataclass(frozen=True)
class Proj:
    i: int
    m: int
    sig: Sig | None = None


@dataclass(frozen=True)
class Comp:
    g: "RrwProgram"
    fs: tuple["RrwProgram", ...]
    sig: Sig | None = None


@dataclass(frozen=True)
class Rec:
    steps: tuple["RrwProgram", ...]
    base: "RrwProgram"
    sig: Sig | None = None


@dataclass(frozen=True)
class Cond:
    steps: tuple["RrwProgram", ...]
    base: "RrwProgram"
    sig: Sig | None = None


RrwProgram = Id | Zero | Cons | Proj | Comp | Rec | Cond


# -- the ramification judgement ------------------------------------------------------


def check_ramification(prog: RrwProgram, w: int, expected: Sig | None = None) -> Sig:
    sig = prog.sig or expected
    if sig is None:
        raise RrwError(f"{type(prog).__name__}: tier signature required")
    if prog.sig is not None and expected is not None and prog.sig != expected:
        raise RrwError(f"{type(prog).__name__}: ascription {prog.sig} "
                       f"does not match expected {expected}")
    args, res = sig
    if isinstance(prog, Id):
        if args != (res,):
            raise RrwError("id: signature must be (W@i) -> W@i")
    elif isinstance(prog, Zero):
        if args != ():
            raise RrwError("zero: takes no arguments")
    elif isinstance(prog, Cons):
        if not 1 <= prog.k <= w:
            raise RrwError(f"constructor {prog.k} outside algebra of width {w}")
        if args != (res,):
            raise RrwError("constructor: signature must be (W@i) -> W@i")
    elif isinstance(prog, Proj):
        if len(args) != prog.m or not 1 <= prog.i <= prog.m:
            raise RrwError("projection: arity mismatch")
        if args[prog.i - 1] != res:
            raise RrwError("projection: result tier must equal the projected tier")
    elif isinstance(prog, Comp):
        gsig = prog.g.sig
        if gsig is None:
            raise RrwError("composition: the outer function needs a tier ascription")
        if gsig[1] != res:
            raise RrwError("composition: outer result tier mismatch")
        if len(prog.fs) != len(gsig[0]):
            raise RrwError("composition: inner function count mismatch")
        check_ramification(prog.g, w, gsig)
        for f, tier in zip(prog.fs, gsig[0]):
            check_ramification(f, w, (args, tier))
    elif isinstance(prog, (Rec, Cond)):
        if len(args) < 1:
            raise RrwError("recursion/conditional needs the scrutinee argument")
        if len(prog.steps) != w:
            raise RrwError(f"need one step per constructor ({w})")
        params, j = args[:-1], args[-1]
        if isinstance(prog, Rec):
            if not res < j:
                raise RrwError("recursion: result tier must be strictly below "
                               "the recursion argument tier")
            step_sig = (params + (res, j), res)
        else:
            step_sig = (params + (j,), res)
        for s in prog.steps:
            check_ramification(s, w, step_sig)
        check_ramification(prog.base, w, (params, res))
    else:
        raise TypeError(prog)
    return sig


# -- reference interpreter --------------------------------------------------------------


def _words(args):
    from ..lam import word_of

    return [word_of(a) for a in args]


def eval_rrw(prog: RrwProgram, args: list, w: int):
    out = _eval(prog, _words(args), w)
    return len(out) if w == 1 else out


def _eval(prog, args, w) -> tuple[int, ...]:
    if isinstance(prog, Id):
        (a,) = args
        return a
    if isinstance(prog, Zero):
        return ()
    if isinstance(prog, Cons):
        (a,) = args
        return (prog.k,) + a
    if isinstance(prog, Proj):
        if len(args) != prog.m:
            raise RrwError("projection arity mismatch")
        return args[prog.i - 1]
    if isinstance(prog, Comp):
        inner = [_eval(f, args, w) for f in prog.fs]
        return _eval(prog.g, inner, w)
    if isinstance(prog, Rec):
        *params, scrut = args
        if not scrut:
            return _eval(prog.base, params, w)
        head, tail = scrut[0], scrut[1:]
        rec = _eval(prog, params + [tail], w)
        return _eval(prog.steps[head - 1], params + [rec, tail], w)
    if isinstance(prog, Cond):
        *params, scrut = args
        if not scrut:
            return _eval(prog.base, params, w)
        head, tail = scrut[0], scrut[1:]
        return _eval(prog.steps[head - 1], params + [tail], w)
    raise TypeError(prog)


# -- compilation -------------------------------------------------------------------------


_X = "x"


def _xv(i: int) -> RP:
    return RP.var(f"x{i}")


def _wf(w: int, p: RP) -> Formula:
    return word_formula(w, p)


def _concl_cset(sig: Sig) -> ConstraintSet:
    args, res = sig
    return ConstraintSet.of(
        Constraint(_xv(k + 1), RP.var(_X)) for k, t in enumerate(args) if t == res
    )


def _strip_budget(poly: RP) -> RP:
    """Remove the single additive budget monomial x from a theorem-shaped
    conclusion polynomial."""
    out = {}
    found = False
    for factors, coeff in poly.terms:
        if factors == ((_X, 1),):
            if coeff < 1:
                raise RrwError("conclusion polynomial lacks the budget variable")
            found = True
            if coeff > 1:
                out[factors] = coeff - 1
            continue
        if any(name == _X for name, _ in factors):
            raise RrwError("budget variable occurs non-additively in the conclusion")
        out[factors] = coeff
    if not found:
        raise RrwError("conclusion polynomial lacks the budget variable")
    return RP._from_map(out)


def _join(polys: list[RP]) -> RP:
    """Least comparable upper bound in the syntactic order, else the sum."""
    uniq = []
    for p in polys:
        if p not in uniq:
            uniq.append(p)
    for cand in uniq:
        if all(leq_syntactic(p, cand) for p in uniq):
            return cand
    return sum_polys(uniq)


class _Compiler:
    def __init__(self, w: int, engine: Entailer | None):
        self.w = w
        self.engine = engine
        self._dups: dict = {}

    # duplication of one word hypothesis, instantiated and strengthened
    def _dup(self, p: RP, cset: ConstraintSet) -> Proof:
        key = (p.terms, cset.constraints)
        hit = self._dups.get(key)
        if hit is None:
            base = dup_proof(self.w, "v0", ConstraintSet.empty())
            inst = subst_vars(base, {"v0": p})
            hit = strengthen(inst, cset)
            self._dups[key] = hit
        return hit

    def _contract_copies(self, proof: Proof, fixed: int, m: int) -> Proof:
        """Merge [*fixed, A1..Am, B1..Bm] into [*fixed, A1..Am] by duplication
        proofs; Ai and Bi must be word formulas over the same size."""
        for k in range(m):
            width = m - k
            i = fixed
            j = fixed + width
            f = proof.claimed.context[i]
            from ..realize import parse_word_shape

            ws = parse_word_shape(f)
            if ws is None:
                raise RrwError("can only contract word hypotheses")
            dup = self._dup(ws[1], proof.claimed.cset)
            proof = contract_pair(proof, i, j, dup)
        return proof

    # -- program cases --------------------------------------------------------

    def compile(self, prog: RrwProgram, sig: Sig) -> Proof:
        args, res = sig
        n = len(args)
        cset = _concl_cset(sig)
        x = RP.var(_X)

        if isinstance(prog, Id):
            return axiom(cset, _wf(self.w, _xv(1)), _wf(self.w, x))

        if isinstance(prog, Zero):
            z = zero_proof(self.w, cset)
            return monotone(z, [], _wf(self.w, x))

        if isinstance(prog, Cons):
            s = succ_proof(self.w, prog.k, _xv(1), cset)
            return monotone(s, [_wf(self.w, _xv(1))],
                            _wf(self.w, RP.const(1) + x))

        if isinstance(prog, Proj):
            # tight constraint set: only the projected size bounds the budget,
            # so composition can substitute an exact budget for this output
            tight = ConstraintSet.of([Constraint(_xv(prog.i), x)])
            out = axiom(tight, _wf(self.w, _xv(prog.i)), _wf(self.w, x))
            for k in range(1, n + 1):
                if k != prog.i:
                    out = weak(out, _wf(self.w, _xv(k)), at=k - 1)
            return out

        if isinstance(prog, Comp):
            return self._comp(prog, sig)

        if isinstance(prog, Rec):
            return self._loop(prog, sig, recursion=True)

        if isinstance(prog, Cond):
            return self._loop(prog, sig, recursion=False)

        raise TypeError(prog)

    def _comp(self, prog: Comp, sig: Sig) -> Proof:
        args, res = sig
        m = len(args)
        gsig = prog.g.sig
        gin, _ = gsig
        n = len(gin)
        cset = _concl_cset(sig)
        x = RP.var(_X)

        pg = self.compile(prog.g, gsig)
        pfs = [self.compile(f, (args, tier)) for f, tier in zip(prog.fs, gin)]

        same = [l for l, tier in enumerate(gin) if tier == res]
        r = _join([_concl_poly_stripped(pfs[l]) for l in same]) if same else RP.zero()

        # the shared constraint set is the union of what the same-tier
        # children actually require; everything else gets an exact budget
        cset_star = ConstraintSet.empty()
        for l in same:
            cset_star = cset_star.union(pfs[l].claimed.cset)

        out_poly: dict[int, RP] = {}
        rhos: list[Proof] = []
        for l, tier in enumerate(gin):
            if tier == res:
                target = _wf(self.w, r + x)
                rho = monotone(pfs[l], [_wf(self.w, _xv(k + 1)) for k in range(m)],
                               target)
                rho = strengthen(rho, cset_star)
                out_poly[l] = r + x
            else:
                # exact budget: the sum of the sizes this child's constraint
                # set actually bounds; keeps inner iteration bounds honest
                need = sorted({vv for c in pfs[l].claimed.cset.constraints
                               for vv in c.lhs.free_vars()})
                s_l = sum_polys(RP.var(vv) for vv in need)
                rho = subst_vars(pfs[l], {_X: s_l})
                rho = strengthen(rho, cset_star)
                out_poly[l] = _concl_poly(rho)
            rhos.append(rho)

        budget = (r + x) if same else x
        gsub = {f"x{l + 1}": out_poly[l] for l in range(n)}
        gsub[_X] = budget
        rho_g = strengthen(subst_vars(pg, gsub), cset_star)

        if n == 0:
            out = rho_g
            for k in range(m):
                out = weak(out, _wf(self.w, _xv(k + 1)), at=k)
            return out

        combined = rhos[0]
        for rho in rhos[1:]:
            combined = rtensor(combined, rho)
            combined = self._contract_copies(combined, 0, m)
        packed = rho_g
        for _ in range(n - 1):
            packed = ltensor(packed, 0)
        return cut(combined, packed, cut_at=0)

    # shared loop for recursion and conditionals
    def _loop(self, prog, sig: Sig, recursion: bool) -> Proof:
        w = self.w
        args, res = sig
        params, j_tier = args[:-1], args[-1]
        n = len(params)
        x = RP.var(_X)
        rec_var = f"x{n + 1}"
        pred = RP.var(rec_var)
        cset1 = _concl_cset(sig)        # the final constraint set
        yv = "y"
        y = RP.var(yv)

        if recursion:
            child_sig = (params + (res, j_tier), res)
        else:
            child_sig = (params + (j_tier,), res)
        p0 = self.compile(prog.base, (params, res))
        pks = [self.compile(s, child_sig) for s in prog.steps]

        q0 = _concl_poly_stripped(p0)
        qks = [_concl_poly_stripped(p) for p in pks]
        pred_child = f"x{n + 2}" if recursion else f"x{n + 1}"
        big_q = _join([q0] + qks)

        ctx_words = [_wf(w, _xv(k + 1)) for k in range(n)]

        if recursion:
            acc = lambda t: (t + RP.const(1)) * big_q.substitute({pred_child: t}) + x
            step_cset = cset1
            iter_cset = cset1
        else:
            acc = lambda t: big_q.substitute({pred_child: t}) + x
            if j_tier == res:
                step_cset = cset1.union(ConstraintSet.of([Constraint(y, x)]))
                iter_cset = cset1
            else:
                step_cset = cset1
                iter_cset = cset1

        # accumulated-result words
        def r_word(t):
            return _wf(w, acc(t))

        a_tensor = None
        if n:
            a_tensor = ctx_words[0]
            for f in ctx_words[1:]:
                a_tensor = Tensor(a_tensor, f)

        def t_tensor(t):
            mid = r_word(t)
            inner = Tensor(a_tensor, mid) if n else mid
            return Tensor(inner, _wf(w, t if isinstance(t, RP) else RP.const(t)))

        def b_formula(t):
            body = t_tensor(t)
            for f in reversed(ctx_words):
                body = Lolli(f, body)
            return body

        # base: iter_cset: [W_x1..W_xn] |- T(0)
        base = monotone(p0, list(ctx_words), r_word(RP.zero()))
        base = strengthen(base, iter_cset)
        zero = zero_proof(w, iter_cset)
        if n:
            ax_block = tensor_intro([axiom(iter_cset, f) for f in ctx_words])
            core0 = rtensor(rtensor(ax_block, base), zero)
            core0 = self._contract_copies(core0, 0, n)
            core0 = permute(core0, list(range(n)))
        else:
            core0 = rtensor(base, zero)
        sigma0 = core0
        for _ in range(n):
            sigma0 = rlolli(sigma0, len(sigma0.claimed.context) - 1)

        # steps
        sigmas = []
        for k, pk in enumerate(pks, start=1):
            rho = monotone(pk, [_wf(w, _xv(i + 1)) for i in range(len(child_sig[0]))],
                           _wf(w, big_q + x))
            if recursion:
                mu = {
                    _X: (y + RP.const(1)) * big_q.substitute(
                        {pred_child: y + RP.const(1)}) + x,
                    f"x{n + 1}": acc(y),
                    f"x{n + 2}": y,
                }
                rho = subst_vars(rho, mu)
                rho = monotone(rho, list(rho.claimed.context), r_word(y + RP.const(1)))
                rho = strengthen(rho, step_cset)
            else:
                rho = subst_vars(rho, {f"x{n + 1}": y})
                rho = monotone(rho, list(rho.claimed.context), r_word(y + RP.const(1)))
                rho = strengthen(rho, step_cset)
            succ = succ_proof(w, k, y, step_cset)
            if recursion:
                # rho ctx: [W_x1..W_xn, R(y), W_y]
                core = rtensor(rho, succ) if n == 0 else rtensor(
                    rtensor(tensor_intro([axiom(step_cset, a_tensor)]), rho), succ)
            else:
                core = rtensor(rho, succ) if n == 0 else rtensor(
                    rtensor(tensor_intro([axiom(step_cset, a_tensor)]), rho), succ)
            # core ctx: [A?] ++ rho-ctx ++ [W_y]; merge the two W_y copies
            ctx_len = len(core.claimed.context)
            ypos1 = ctx_len - 2
            ypos2 = ctx_len - 1
            dup = self._dup(y, step_cset)
            core = contract_pair(core, ypos1, ypos2, dup)
            # now ctx: [A?, W_x1.., (R(y) if rec), W_y]; for conditionals the
            # stale accumulator gets weakened in
            if not recursion:
                at = (1 if n else 0) + n
                core = weak(core, r_word(y), at=at)
            # order: [W_x1..W_xn, A?, R(y), W_y]
            ctx_len = len(core.claimed.context)
            if n:
                order = list(range(1, n + 1)) + [0] + list(range(n + 1, ctx_len))
                core = permute(core, order)
                core = ltensor(core, n)
                core = ltensor(core, n)
            else:
                core = ltensor(core, 0)
            # core: step_cset: [W_x1..W_xn, T(y)] |- T(y+1)
            if n:
                app = apply_chain([axiom(step_cset, f) for f in ctx_words],
                                  t_tensor(y))
                body = cut(app, core, cut_at=n)
                body = self._contract_copies(body, 1, n)
            else:
                body = core
                body = permute(body, [0])
            # body ctx: [B(y) if n else T(y), W_x1..W_xn]
            for _ in range(n):
                body = rlolli(body, len(body.claimed.context) - 1)
            sigma = rlolli(body, 0)
            sigmas.append(sigma)

        bangs = [pbang(s, yv, pred, [], iter_cset) for s in sigmas]

        zvar = "z0"
        it_body = b_formula(RP.var(zvar))
        it = iter_proof(w, it_body, zvar, pred, iter_cset)
        iota1 = it
        for b in bangs:
            iota1 = cut(b, iota1, cut_at=1)
        iota1 = cut(sigma0, iota1, cut_at=1)
        # iota1: iter_cset: [W_{x_{n+1}}] |- B(x_{n+1})

        out_word = r_word(pred)
        proj = axiom(iter_cset, out_word)
        if n:
            proj = weak(proj, a_tensor, at=0)
        proj = weak(proj, _wf(w, pred), at=2 if n else 1)
        proj = ltensor(proj, 0) if n else proj
        proj = ltensor(proj, 0)
        # proj: [T(x_{n+1})] |- R_out
        if n:
            app2 = apply_chain([axiom(iter_cset, f) for f in ctx_words],
                               t_tensor(pred))
            iota2 = cut(app2, proj, cut_at=0)
            iota2 = permute(iota2, list(range(1, n + 1)) + [0])
        else:
            iota2 = proj
        final = cut(iota1, iota2, cut_at=n)
        final = permute(final, list(range(1, n + 1)) + [0])
        return final


def _concl_poly(proof: Proof) -> RP:
    concl = proof.claimed.conclusion
    from ..realize import parse_word_shape

    ws = parse_word_shape(concl)
    if ws is None:
        raise RrwError("conclusion is not a word formula")
    return ws[1]


def _concl_poly_stripped(proof: Proof) -> RP:
    return _strip_budget(_concl_poly(proof))


def compile_rrw(prog: RrwProgram, w: int = 1, engine: Entailer | None = None) -> Proof:
    """Compile to a kernel-checkable proof in the theorem shape.  Internal
    nodes carry tight constraint sets (only the sizes they actually bound),
    which keeps inner iteration bounds exact; the full same-tier constraint
    set is imposed here at the boundary."""
    sig = check_ramification(prog, w)
    out = _Compiler(w, engine).compile(prog, sig)
    return strengthen(out, _concl_cset(sig))

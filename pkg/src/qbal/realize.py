"""Execution semantics: Curry-Howard denotation of forgotten proofs, the
per-valuation affine realizer extraction, and the decidable realizability
fragment.

Two independent execution paths exist for data-typed proofs and must agree:

* the denotational path interprets the forgotten second-order skeleton as a
  plain lambda term over Church-style data (duplication allowed, fueled);
* the realizer path builds, for a concrete valuation, a closed affine term
  per the constructive soundness argument (promotion fans out copies,
  universal quantifiers become finite case distinctions over encoded
  valuations, existentials package the witness valuation with the body).

Valuation encodings are tensor tuples of unary Scott numerals in quantifier
binding order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping

from .config import DEFAULT, Config
from .constraint import ConstraintSet, Entailer
from .formula import (
    Atom,
    Bang,
    ExistsRes,
    ForallAtom,
    ForallRes,
    Formula,
    Lolli,
    SkeletonMismatch,
    Tensor,
    alpha_eq,
    free_rvars,
    leq_formula,
    pretty,
    subst_poly,
    word_formula,
)
from .kernel import Judgement, Proof, SkeletonProof, forget
from .lam import (
    Term,
    ab,
    absn,
    ap,
    fresh,
    lam_tensor,
    normalize,
    scott_encode,
    scott_succ,
    tensor,
    v,
    word_of,
)
from .respoly import ResourcePoly

RP = ResourcePoly


class RealizeError(Exception):
    pass


class FragmentError(RealizeError):
    """Formula outside the decidable realizability fragment."""


# -- denotation of skeleton proofs ----------------------------------------------


def _subst_term(t: Term, name: str, s: Term) -> Term:
    """Textual substitution; builder-fresh binder names make capture impossible."""
    from . import lam

    if isinstance(t, lam.Var):
        return s if t.name == name else t
    if isinstance(t, lam.Abs):
        if t.var == name:
            return t
        return ab(t.var, _subst_term(t.body, name, s))
    return ap(_subst_term(t.fn, name, s), _subst_term(t.arg, name, s))


def denote(sk: SkeletonProof) -> tuple[Term, list[str]]:
    """Curry-Howard term of a forgotten proof; returns (term, hypothesis names)."""
    names = [fresh("h") for _ in range(sk.ctx_len)]
    return _denote(sk, names), names


def _denote(sk: SkeletonProof, names: list[str]) -> Term:
    rule, params = sk.rule, sk.params
    if rule == "A":
        return v(names[0])
    if rule == "U":
        cut_at, n1 = params
        c = fresh("c")
        t1 = _denote(sk.premises[0], names[:n1])
        rest = list(names[n1:])
        rest.insert(cut_at, c)
        t2 = _denote(sk.premises[1], rest)
        return _subst_term(t2, c, t1)
    if rule == "W":
        (at,) = params
        return _denote(sk.premises[0], names[:at] + names[at + 1 :])
    if rule == "X":
        at, at2 = params
        inner = list(names)
        inner.insert(at2, names[at])
        return _denote(sk.premises[0], inner)
    if rule == "Rimp":
        (arg_at,) = params
        a = fresh("a")
        inner = list(names)
        inner.insert(arg_at, a)
        return ab(a, _denote(sk.premises[0], inner))
    if rule == "Limp":
        at, b_at, n1 = params
        f = names[at]
        rest = names[:at] + names[at + 1 :]
        gn, dn = rest[:n1], rest[n1:]
        b = fresh("b")
        inner = list(dn)
        inner.insert(b_at, b)
        t1 = _denote(sk.premises[0], gn)
        t2 = _denote(sk.premises[1], inner)
        return _subst_term(t2, b, ap(v(f), t1))
    if rule == "Rtimes":
        (n1,) = params
        t1 = _denote(sk.premises[0], names[:n1])
        t2 = _denote(sk.premises[1], names[n1:])
        return tensor([t1, t2])
    if rule == "Ltimes":
        (at,) = params
        a, b = fresh("a"), fresh("b")
        inner = names[:at] + [a, b] + names[at + 1 :]
        return ap(v(names[at]), absn([a, b], _denote(sk.premises[0], inner)))
    if rule in ("Rfa", "Lfa"):
        return _denote(sk.premises[0], names)
    raise AssertionError(rule)


# -- data-shaped formulas ----------------------------------------------------------


def parse_word_shape(f: Formula) -> tuple[int, RP] | None:
    """Recognize the word-algebra iterator formula; returns (w, size bound)."""
    if not isinstance(f, ForallAtom):
        return None
    w = 0
    body = f.body
    while isinstance(body, Lolli) and isinstance(body.left, Bang):
        w += 1
        body = body.right
    if w == 0 or not (
        isinstance(body, Lolli)
        and isinstance(body.left, Atom)
        and isinstance(body.right, Atom)
    ):
        return None
    p = body.right.args[0] if body.right.args else None
    if p is None:
        return None
    return (w, p) if alpha_eq(f, word_formula(w, p)) else None


def parse_diamond_shape(f: Formula) -> RP | None:
    """Recognize the LFPL resource-unit translation; returns its budget."""
    if not isinstance(f, ExistsRes) or len(f.vars) != 1:
        return None
    body = f.body
    ok = (
        isinstance(body, ForallAtom)
        and isinstance(body.body, Lolli)
        and isinstance(body.body.left, Atom)
        and isinstance(body.body.right, Atom)
        and body.body.left.name == body.atom
        and not body.body.left.args
        and body.body.right.name == body.atom
    )
    if not ok:
        return None
    for c in f.cset.constraints:
        if c.lhs == RP.const(1) and f.vars[0] not in c.rhs.free_vars():
            return c.rhs
    return None


def church_word(w: int, value) -> Term:
    word = word_of(value)
    ss = [fresh("s") for _ in range(w)]
    z = fresh("z")
    body: Term = v(z)
    for cons in reversed(word):
        body = ap(v(ss[cons - 1]), body)
    return absn(ss + [z], body)


# -- helpers shared by extraction and the fragment checker --------------------------


def tuple_parts(t: Term, n: int) -> list[Term] | None:
    """Parse a normal-form n-tuple lam f. f t1 .. tn."""
    from . import lam

    if not isinstance(t, lam.Abs):
        return None
    parts = []
    body = t.body
    while isinstance(body, lam.App):
        parts.append(body.arg)
        body = body.fn
    if not (isinstance(body, lam.Var) and body.name == t.var and len(parts) == n):
        return None
    return list(reversed(parts))


def encode_valuation(values: list[int]) -> Term:
    return tensor([scott_encode(1, n) for n in values])


def _numeral_tree(scrut: Term, budget: int, leaf: Callable[[int], Term]) -> Term:
    """Case tree on a unary Scott numeral: leaf(v) for v in 0..budget."""
    if budget <= 0:
        return leaf(0)
    pred = fresh("p")
    return ap(scrut, ab(pred, _numeral_tree(v(pred), budget - 1,
                                            lambda k: leaf(k + 1))), leaf(0))


def valuation_case(scrut_names: list[str], budgets: list[int],
                   leaf: Callable[[tuple[int, ...]], Term]) -> Term:
    """Dispatch on several Scott numerals; each scrutinee is consumed exactly
    once by passing the continuation chain through applications."""

    def chain(i: int, prefix: tuple[int, ...], scrut: Term) -> Term:
        if i == len(budgets) - 1:
            return _numeral_tree(scrut, budgets[i], lambda k: leaf(prefix + (k,)))
        def deeper(k: int) -> Term:
            nxt = fresh("m")
            return ab(nxt, chain(i + 1, prefix + (k,), v(nxt)))
        return _numeral_tree(scrut, budgets[i], deeper)

    if not budgets:
        return leaf(())
    out = chain(0, (), v(scrut_names[0]))
    return ap(out, *[v(n) for n in scrut_names[1:]])


def dispatch_tuple(scrut: Term, budgets: list[int],
                   leaf: Callable[[tuple[int, ...]], Term]) -> Term:
    """Destructure an encoded valuation and dispatch on its components."""
    names = [fresh("m") for _ in budgets]
    return ap(scrut, absn(names, valuation_case(names, budgets, leaf)))


def _word_tree(scrut: Term, w: int, budget: int,
               leaf: Callable[[tuple[int, ...]], Term]) -> Term:
    """Case tree over Scott words of length <= budget."""
    def go(s: Term, fuel: int, path: tuple[int, ...]) -> Term:
        if fuel <= 0:
            return leaf(path)
        branches = []
        for cons in range(1, w + 1):
            pred = fresh("p")
            branches.append(ab(pred, go(v(pred), fuel - 1, path + (cons,))))
        return ap(s, *branches, leaf(path))

    return go(scrut, budget, ())


# -- the phi/psi retract between Scott data and iterator-formula realizers -----------


_phi_value_cache: dict[tuple, Term] = {}
_phi_cache: dict[tuple, Term] = {}
_psi_cache: dict[tuple, Term] = {}


def phi_word_value(w: int, size_bound: int, path: tuple[int, ...]) -> Term:
    """Iterator-formula realizer of one concrete word at a given bound.
    Closed and reusable; memoized so case-tree branches share structure."""
    key = (w, size_bound, path)
    hit = _phi_value_cache.get(key)
    if hit is not None:
        return hit
    steps = [fresh("S") for _ in range(w)]
    z = fresh("z")
    comp_names = [[fresh("s") for _ in range(size_bound)] for _ in range(w)]
    body: Term = v(z)
    for level, cons in enumerate(reversed(path)):
        body = ap(v(comp_names[cons - 1][level]), body)
    inner = body
    for jdx in range(w - 1, -1, -1):
        inner = ap(v(steps[jdx]), absn(comp_names[jdx], inner))
    out = absn(steps + [z], inner)
    _phi_value_cache[key] = out
    return out


def phi_word(w: int, size_bound: int) -> Term:
    """Scott word (length <= bound) to a realizer of the iterator formula."""
    key = (w, size_bound)
    hit = _phi_cache.get(key)
    if hit is not None:
        return hit
    m = fresh("m")
    out = ab(m, _word_tree(v(m), w, size_bound,
                           lambda path: phi_word_value(w, size_bound, path)))
    _phi_cache[key] = out
    return out


def psi_word(w: int, size_bound: int) -> Term:
    """Realizer of the iterator formula back to a Scott word."""
    key = (w, size_bound)
    hit = _psi_cache.get(key)
    if hit is not None:
        return hit
    t = fresh("t")
    args = [tensor([scott_succ(w, jdx + 1) for _ in range(size_bound)])
            for jdx in range(w)]
    out = ab(t, ap(v(t), *args, scott_encode(w, ())))
    _psi_cache[key] = out
    return out


def data_retract(f: Formula, read_arity: int, rebuild_bound: int) -> Term | None:
    """A term re-encoding a data-shaped realizer through the Scott retract:
    components are read at `read_arity` (the honest interface arity of an
    iteration exit) and rebuilt at `rebuild_bound` (the claimed one).  Only
    shapes whose word leaves all share the driver bound are supported;
    returns None otherwise."""
    ws = parse_word_shape(f)
    if ws is not None:
        t = fresh("t")
        return ab(t, ap(phi_word(ws[0], rebuild_bound),
                        ap(psi_word(ws[0], read_arity), v(t))))
    if isinstance(f, Tensor):
        left = data_retract(f.left, read_arity, rebuild_bound)
        right = data_retract(f.right, read_arity, rebuild_bound)
        if left is None or right is None:
            return None
        u, a, b = fresh("u"), fresh("a"), fresh("b")
        return ab(u, ap(v(u), ab(a, ab(b, tensor([ap(left, v(a)), ap(right, v(b))])))))
    return None


def _data_leaf_bounds(f: Formula):
    ws = parse_word_shape(f)
    if ws is not None:
        return [ws[1]]
    if isinstance(f, Tensor):
        left = _data_leaf_bounds(f.left)
        right = _data_leaf_bounds(f.right)
        if left is None or right is None:
            return None
        return left + right
    return None


# -- realizer extraction ---------------------------------------------------------


Valuation = Mapping[str, int]


@dataclass
class RealizerWitness:
    judgement: Judgement
    make: Callable[[Valuation], Term]

    def term(self, eta: Valuation) -> Term:
        if not self.judgement.cset.satisfies(eta):
            raise RealizeError("valuation violates the conclusion constraint set")
        return self.make(eta)


class _Extractor:
    def __init__(self, engine: Entailer):
        self.engine = engine
        self._fvs: dict[int, frozenset[str]] = {}
        self._terms: dict[tuple, Term] = {}
        self._alive: list = []  # keeps id()-keyed proof nodes valid

    def _subtree_fv(self, proof: Proof) -> frozenset[str]:
        got = self._fvs.get(id(proof))
        if got is None:
            fv = set(proof.claimed.free_rvars())
            for key, val in proof.params.items():
                if isinstance(val, RP):
                    fv |= val.free_vars()
                elif key == "witnesses":
                    for wt in val:
                        fv |= wt.free_vars()
            for prem in proof.premises:
                fv |= self._subtree_fv(prem)
            got = frozenset(fv)
            self._fvs[id(proof)] = got
            self._alive.append(proof)
        return got

    # coercions realize the axiom rule: a term turning realizers of the
    # smaller formula into realizers of the larger one, at a fixed valuation
    def coerce(self, cset: ConstraintSet, a: Formula, b: Formula, eta: Valuation) -> Term:
        if alpha_eq(a, b):
            x = fresh("x")
            return ab(x, v(x))
        if isinstance(a, Atom) and isinstance(b, Atom):
            x = fresh("x")
            return ab(x, v(x))
        if isinstance(a, Tensor) and isinstance(b, Tensor):
            x, y = fresh("x"), fresh("y")
            u = fresh("u")
            return ab(u, ap(v(u), absn([x, y], tensor([
                ap(self.coerce(cset, a.left, b.left, eta), v(x)),
                ap(self.coerce(cset, a.right, b.right, eta), v(y)),
            ]))))
        if isinstance(a, Lolli) and isinstance(b, Lolli):
            f, x = fresh("f"), fresh("x")
            pre = self.coerce(cset, b.left, a.left, eta)
            post = self.coerce(cset, a.right, b.right, eta)
            return ab(f, ab(x, ap(post, ap(v(f), ap(pre, v(x))))))
        if isinstance(a, ForallAtom) and isinstance(b, ForallAtom):
            from .formula import _rename_atom

            nb = b.body if b.atom == a.atom else _rename_atom(b.body, b.atom, a.atom)
            return self.coerce(cset, a.body, nb, eta)
        if isinstance(a, Bang) and isinstance(b, Bang):
            p_val = a.bound.eval(eta)
            q_val = b.bound.eval(eta)
            xs = [fresh("x") for _ in range(p_val)]
            u = fresh("u")
            comps = []
            for i in range(q_val):
                body_a = subst_poly(a.body, {a.var: RP.const(i)})
                body_b = subst_poly(b.body, {b.var: RP.const(i)})
                comps.append(ap(self.coerce(cset, body_a, body_b, eta), v(xs[i])))
            return ab(u, ap(v(u), absn(xs, tensor(comps))))
        if isinstance(a, ForallRes) and isinstance(b, ForallRes):
            budgets = [bb.eval(eta) for bb in b.bounds]
            t, m = fresh("t"), fresh("m")

            def leaf(mu: tuple[int, ...]) -> Term:
                ext = dict(eta)
                ext.update(zip(b.vars, mu))
                if not b.cset.satisfies(ext):
                    x = fresh("x")
                    return ab(x, v(x))
                body_a = subst_poly(a.body, dict(zip(a.vars, map(RP.const, mu))))
                body_b = subst_poly(b.body, dict(zip(b.vars, map(RP.const, mu))))
                g = fresh("g")
                return ab(g, ap(self.coerce(cset, body_a, body_b, eta),
                                ap(v(g), encode_valuation(list(mu)))))

            return ab(t, ab(m, ap(dispatch_tuple(v(m), budgets, leaf), v(t))))
        if isinstance(a, ExistsRes) and isinstance(b, ExistsRes):
            budgets = [bb.eval(eta) for bb in a.bounds]
            u, m, t = fresh("u"), fresh("m"), fresh("t")

            def leaf(mu: tuple[int, ...]) -> Term:
                ext = dict(eta)
                ext.update(zip(a.vars, mu))
                if not a.cset.satisfies(ext):
                    x = fresh("x")
                    return ab(x, v(x))
                body_a = subst_poly(a.body, dict(zip(a.vars, map(RP.const, mu))))
                body_b = subst_poly(b.body, dict(zip(b.vars, map(RP.const, mu))))
                tt = fresh("t")
                return ab(tt, tensor([encode_valuation(list(mu)),
                                      ap(self.coerce(cset, body_a, body_b, eta), v(tt))]))

            return ab(u, ap(v(u), ab(m, ab(t, ap(dispatch_tuple(v(m), budgets, leaf),
                                                 v(t))))))
        raise RealizeError(
            f"no coercion between {pretty(a)} and {pretty(b)}")

    # -- per-rule witnesses -------------------------------------------------

    def extract(self, proof: Proof) -> Callable[[Valuation], Term]:
        makers = [self.extract(p) for p in proof.premises]
        method = getattr(self, "_x_" + proof.rule)
        raw = method(proof, makers)
        fv = sorted(self._subtree_fv(proof))
        node = id(proof)

        # witnesses are closed terms depending only on the relevant slice of
        # the valuation; memoizing shares identical sub-realizers across the
        # branches of enclosing case distinctions
        def make(eta):
            key = (node, tuple((x, eta.get(x)) for x in fv))
            hit = self._terms.get(key)
            if hit is None:
                hit = raw(eta)
                self._terms[key] = hit
            return hit

        return make

    def _ctx(self, proof) -> int:
        return len(proof.claimed.context)

    def _x_A(self, proof, makers):
        j = proof.claimed

        def make(eta):
            h = fresh("h")
            return lam_tensor([h], ap(self.coerce(j.cset, j.context[0],
                                                  j.conclusion, eta), v(h)))

        return make

    def _x_U(self, proof, makers):
        n1 = len(proof.premises[0].claimed.context)
        cut_at = proof.params["cut_at"]
        n = self._ctx(proof)

        def make(eta):
            names = [fresh("h") for _ in range(n)]
            gn, dn = names[:n1], names[n1:]
            inner = [v(x) for x in dn]
            inner.insert(cut_at, ap(makers[0](eta), tensor([v(x) for x in gn])))
            return lam_tensor(names, ap(makers[1](eta), tensor(inner)))

        return make

    def _x_W(self, proof, makers):
        at = proof.params["at"]
        n = self._ctx(proof)

        def make(eta):
            names = [fresh("h") for _ in range(n)]
            kept = names[:at] + names[at + 1 :]
            return lam_tensor(names, ap(makers[0](eta), tensor([v(x) for x in kept])))

        return make

    def _x_X(self, proof, makers):
        at = proof.params["at"]
        at2 = proof.params.get("at2", at + 1)
        p, q = proof.params["p"], proof.params["q"]
        n = self._ctx(proof)

        def make(eta):
            pv, qv = p.eval(eta), q.eval(eta)
            principal = proof.claimed.context[at]
            rv = principal.bound.eval(eta)
            names = [fresh("h") for _ in range(n)]
            xs = [fresh("x") for _ in range(rv)]
            inner = [v(x) for x in names]
            inner[at] = tensor([v(x) for x in xs[:pv]])
            inner.insert(at2, tensor([v(x) for x in xs[pv : pv + qv]]))
            body = ap(makers[0](eta), tensor(inner))
            return lam_tensor(names, ap(v(names[at]), absn(xs, body)))

        return make

    def _x_Rlolli(self, proof, makers):
        arg_at = proof.params["arg_at"]
        n = self._ctx(proof)

        def make(eta):
            names = [fresh("h") for _ in range(n)]
            a = fresh("a")
            inner = [v(x) for x in names]
            inner.insert(arg_at, v(a))
            return lam_tensor(names, ab(a, ap(makers[0](eta), tensor(inner))))

        return make

    def _x_Llolli(self, proof, makers):
        at, b_at = proof.params["at"], proof.params["b_at"]
        n1 = len(proof.premises[0].claimed.context)
        n = self._ctx(proof)

        def make(eta):
            names = [fresh("h") for _ in range(n)]
            rest = names[:at] + names[at + 1 :]
            gn, dn = rest[:n1], rest[n1:]
            arg = ap(makers[0](eta), tensor([v(x) for x in gn]))
            inner = [v(x) for x in dn]
            inner.insert(b_at, ap(v(names[at]), arg))
            return lam_tensor(names, ap(makers[1](eta), tensor(inner)))

        return make

    def _x_Rtensor(self, proof, makers):
        n1 = len(proof.premises[0].claimed.context)
        n = self._ctx(proof)

        def make(eta):
            names = [fresh("h") for _ in range(n)]
            return lam_tensor(names, tensor([
                ap(makers[0](eta), tensor([v(x) for x in names[:n1]])),
                ap(makers[1](eta), tensor([v(x) for x in names[n1:]])),
            ]))

        return make

    def _x_Ltensor(self, proof, makers):
        at = proof.params["at"]
        n = self._ctx(proof)

        def make(eta):
            names = [fresh("h") for _ in range(n)]
            a, b = fresh("a"), fresh("b")
            inner = [v(x) for x in names[:at]] + [v(a), v(b)] + [v(x) for x in names[at + 1 :]]
            return lam_tensor(names, ap(v(names[at]),
                                        absn([a, b], ap(makers[0](eta), tensor(inner)))))

        return make

    def _x_Pbang(self, proof, makers):
        x = proof.params["x"]
        n = self._ctx(proof)
        j = proof.claimed

        def make(eta):
            pv = j.conclusion.bound.eval(eta)
            qs = [f.bound.eval(eta) for f in j.context]
            names = [fresh("h") for _ in range(n)]
            comp = [[fresh("c") for _ in range(qs[i])] for i in range(n)]
            copies = []
            for i in range(pv):
                ext = dict(eta)
                ext[x] = i
                copies.append(ap(makers[0](ext),
                                 tensor([v(comp[k][i]) for k in range(n)])))
            body: Term = tensor(copies)
            for k in range(n - 1, -1, -1):
                body = ap(v(names[k]), absn(comp[k], body))
            return lam_tensor(names, body)

        return make

    def _x_Dbang(self, proof, makers):
        at = proof.params["at"]
        n = self._ctx(proof)
        j = proof.claimed

        def make(eta):
            pv = j.context[at].bound.eval(eta)
            names = [fresh("h") for _ in range(n)]
            xs = [fresh("x") for _ in range(pv)]
            inner = [v(x) for x in names]
            inner[at] = v(xs[0])
            return lam_tensor(names, ap(v(names[at]),
                                        absn(xs, ap(makers[0](eta), tensor(inner)))))

        return make

    def _x_Nbang(self, proof, makers):
        at = proof.params["at"]
        p, q, w_var = proof.params["p"], proof.params["q"], proof.params["w"]
        n = self._ctx(proof)
        j = proof.claimed

        def make(eta):
            rv = j.context[at].bound.eval(eta)
            pv = p.eval(eta)
            names = [fresh("h") for _ in range(n)]
            xs = [fresh("x") for _ in range(rv)]
            groups = []
            offset = 0
            for i in range(pv):
                ext = dict(eta)
                ext[w_var] = i
                qi = q.eval(ext)
                groups.append(tensor([v(x) for x in xs[offset : offset + qi]]))
                offset += qi
            inner = [v(x) for x in names]
            inner[at] = tensor(groups)
            return lam_tensor(names, ap(v(names[at]),
                                        absn(xs, ap(makers[0](eta), tensor(inner)))))

        return make

    def _x_Rforalla(self, proof, makers):
        return makers[0]

    def _x_Lforalla(self, proof, makers):
        # Instantiating the quantified atom consumes the hypothesis at a
        # concrete interpretation.  Word-shaped hypotheses are renormalized
        # through the Scott retract first: an iterator realizer may carry its
        # honest value at an index below the formula bound (bounds are
        # inequalities), and only the Scott reading is genuinely monotone in
        # the size index.  Round-tripping psi then phi rebuilds a full-arity
        # realizer for the exact bound, which the instantiated consumer may
        # then destructure positionally.
        at = proof.params["at"]
        principal = proof.claimed.context[at]
        ws = parse_word_shape(principal)
        concl = proof.claimed.conclusion
        n = self._ctx(proof)
        if ws is None:
            return makers[0]
        w_arity, bound = ws
        leafb = _data_leaf_bounds(concl)
        indexed_exit = leafb is not None and all(b == bound for b in leafb)

        if not indexed_exit:
            def make(eta):
                size = bound.eval(eta)
                names = [fresh("h") for _ in range(n)]
                inner = [v(x) for x in names]
                inner[at] = ap(phi_word(w_arity, size),
                               ap(psi_word(w_arity, size), v(names[at])))
                return lam_tensor(names, ap(makers[0](eta), tensor(inner)))

            return make

        # the conclusion is data indexed exactly by the driver size (the
        # duplication pattern): dispatch on the driver's honest value, feed
        # the premise a clean full-arity copy, and re-encode the exit from its
        # honest interface arity (the value's length) up to the claimed bound
        def make(eta):
            size = bound.eval(eta)
            names = [fresh("h") for _ in range(n)]
            rest = names[:at] + names[at + 1 :]

            def leaf(word):
                g = fresh("g")
                fresh_rest = [fresh("o") for _ in rest]
                inner = [v(x) for x in fresh_rest]
                inner.insert(at, phi_word_value(w_arity, size, word))
                out = data_retract(concl, len(word), size)
                return ab(g, ap(v(g), absn(fresh_rest,
                                           ap(out, ap(makers[0](eta), tensor(inner))))))

            scrut = ap(psi_word(w_arity, size), v(names[at]))
            body = ap(_word_tree(scrut, w_arity, size, leaf), tensor([v(x) for x in rest]))
            return lam_tensor(names, body)

        return make

    def _x_Rforallx(self, proof, makers):
        quant = proof.claimed.conclusion
        actual = proof.params["vars"]
        n = self._ctx(proof)

        def make(eta):
            budgets = [b.eval(eta) for b in quant.bounds]
            names = [fresh("h") for _ in range(n)]
            m = fresh("m")

            def leaf(mu):
                ext = dict(eta)
                ext.update(zip(actual, mu))
                sub = dict(zip(quant.vars, map(RP.const, mu)))
                if not quant.cset.substitute(sub).satisfies(eta):
                    x = fresh("x")
                    return ab(x, v(x))
                return makers[0](ext)

            return lam_tensor(names, ab(m, ap(dispatch_tuple(v(m), budgets, leaf),
                                              tensor([v(x) for x in names]))))

        return make

    def _x_Lforallx(self, proof, makers):
        at = proof.params["at"]
        witnesses = proof.params["witnesses"]
        n = self._ctx(proof)

        def make(eta):
            names = [fresh("h") for _ in range(n)]
            mu = encode_valuation([wit.eval(eta) for wit in witnesses])
            inner = [v(x) for x in names]
            inner[at] = ap(v(names[at]), mu)
            return lam_tensor(names, ap(makers[0](eta), tensor(inner)))

        return make

    def _x_Rexistsx(self, proof, makers):
        witnesses = proof.params["witnesses"]
        n = self._ctx(proof)

        def make(eta):
            names = [fresh("h") for _ in range(n)]
            mu = encode_valuation([wit.eval(eta) for wit in witnesses])
            return lam_tensor(names, tensor([
                mu, ap(makers[0](eta), tensor([v(x) for x in names]))
            ]))

        return make

    def _x_Lexistsx(self, proof, makers):
        at = proof.params["at"]
        actual = proof.params["vars"]
        n = self._ctx(proof)
        principal = proof.claimed.context[at]

        def make(eta):
            budgets = [b.eval(eta) for b in principal.bounds]
            names = [fresh("h") for _ in range(n)]
            others = names[:at] + names[at + 1 :]
            m, t = fresh("m"), fresh("t")

            def leaf(mu):
                ext = dict(eta)
                ext.update(zip(actual, mu))
                sub = dict(zip(principal.vars, map(RP.const, mu)))
                if not principal.cset.substitute(sub).satisfies(eta):
                    x = fresh("x")
                    return ab(x, ab(x + "_", v(x)))
                tt, gg = fresh("t"), fresh("g")
                fresh_others = [fresh("o") for _ in others]
                inner = [v(x) for x in fresh_others]
                inner.insert(at, v(tt))
                return ab(tt, ab(gg, ap(v(gg), absn(fresh_others,
                                                    ap(makers[0](ext), tensor(inner))))))

            body = ap(v(names[at]),
                      ab(m, ab(t, ap(dispatch_tuple(v(m), budgets, leaf),
                                     v(t), tensor([v(x) for x in others])))))
            return lam_tensor(names, body)

        return make


def extract_realizer(proof: Proof, engine: Entailer | None = None) -> RealizerWitness:
    ext = _Extractor(engine or Entailer())
    return RealizerWitness(proof.claimed, ext.extract(proof))


# -- running data-typed proofs -----------------------------------------------------


@dataclass
class DataShape:
    """Context and conclusion shapes of a runnable judgement."""

    inputs: list[tuple]          # ("word", w, poly) or ("diamond", poly)
    output: list[tuple[int, RP]]  # tensor components, each ("word")


def data_shape(j: Judgement) -> DataShape:
    inputs = []
    for f in j.context:
        ws = parse_word_shape(f)
        if ws is not None:
            inputs.append(("word",) + ws)
            continue
        dp = parse_diamond_shape(f)
        if dp is not None:
            inputs.append(("diamond", dp))
            continue
        raise RealizeError(f"context formula is not runnable data: {pretty(f)}")
    out = []
    stack = [j.conclusion]
    while stack:
        f = stack.pop()
        if isinstance(f, Tensor):
            stack.append(f.right)
            stack.append(f.left)
            continue
        ws = parse_word_shape(f)
        if ws is None:
            raise RealizeError(f"conclusion is not runnable data: {pretty(f)}")
        out.append(ws)
    return DataShape(inputs, out)


def _pick_valuation(j: Judgement, known: dict[str, int], bound_hint: int,
                    fits: list[tuple[RP, int]]) -> dict[str, int]:
    def ok(eta):
        return j.cset.satisfies(eta) and all(p.eval(eta) >= size for p, size in fits)

    missing = sorted(j.free_rvars() - set(known))
    if not missing:
        if not ok(known):
            raise RealizeError("input sizes violate the conclusion constraint set")
        return dict(known)
    for ceiling in range(bound_hint + 2):
        for combo in itertools.product(range(ceiling + 1), repeat=len(missing)):
            eta = dict(known)
            eta.update(zip(missing, combo))
            if ok(eta):
                return eta
    raise RealizeError("could not satisfy the constraint set with small sizes")


def run_valuation(proof: Proof, inputs: list) -> dict[str, int]:
    """Default valuation: input-size variables from the inputs, remaining
    variables minimized subject to the constraint set."""
    j = proof.claimed
    shape = data_shape(j)
    if len(inputs) != len(shape.inputs):
        raise RealizeError(f"expected {len(shape.inputs)} inputs")
    known: dict[str, int] = {}
    sizes = []
    fits: list[tuple[RP, int]] = []
    for spec, value in zip(shape.inputs, inputs):
        if spec[0] == "diamond":
            fits.append((spec[1], 1))  # a unit realizer needs budget >= 1
            continue
        size = len(word_of(value))
        sizes.append(size)
        poly = spec[2]
        fv = sorted(poly.free_vars())
        if len(fv) == 1 and poly == RP.var(fv[0]):
            prev = known.get(fv[0])
            if prev is not None and prev != size:
                raise RealizeError("conflicting sizes for shared size variable")
            known[fv[0]] = size
        else:
            fits.append((poly, size))
    return _pick_valuation(j, known, max(sizes, default=0) + 1, fits)


def run_denotational(proof: Proof, inputs: list, eta: Mapping[str, int] | None = None,
                     cfg: Config = DEFAULT):
    j = proof.claimed
    shape = data_shape(j)
    if eta is None:
        eta = run_valuation(proof, inputs)
    term, names = denote(forget(proof))
    for name, spec, value in zip(names, shape.inputs, inputs):
        if spec[0] == "word":
            arg = church_word(spec[1], value)
        else:
            a = fresh("a")
            arg = ab(a, v(a))
        term = _subst_term(term, name, arg)
    return _decode_output(term, shape, eta, cfg, scott=False)


def data_witness(proof: Proof, engine: Entailer | None = None) -> RealizerWitness:
    """Composite witness through the Scott retract: takes Scott-encoded
    inputs (curried) and returns Scott-encoded output."""
    j = proof.claimed
    shape = data_shape(j)
    inner = extract_realizer(proof, engine)

    def make(eta):
        ms = [fresh("m") for _ in shape.inputs]
        args = []
        for name, spec in zip(ms, shape.inputs):
            if spec[0] == "word":
                args.append(ap(phi_word(spec[1], spec[2].eval(eta)), v(name)))
            else:
                a = fresh("a")
                args.append(tensor([encode_valuation([0]), ab(a, v(a))]))
        body = ap(inner.make(eta), tensor(args))
        body = _psi_output(body, shape, eta)
        names = [m for m, spec in zip(ms, shape.inputs) if spec[0] == "word"]
        dropped = {m for m, spec in zip(ms, shape.inputs) if spec[0] != "word"}
        return absn([m for m in ms if m not in dropped], body)

    return RealizerWitness(j, make)


def _psi_output(body: Term, shape: DataShape, eta) -> Term:
    if len(shape.output) == 1:
        w, p = shape.output[0]
        return ap(psi_word(w, p.eval(eta)), body)
    # left-nested tensor of words: unpack and re-pack decoded components
    def unpack(term: Term, comps: list[tuple[int, RP]]) -> Term:
        if len(comps) == 1:
            w, p = comps[0]
            return ap(psi_word(w, p.eval(eta)), term)
        a, b = fresh("a"), fresh("b")
        left = unpack(v(a), comps[:-1])
        w, p = comps[-1]
        return ap(term, absn([a, b], tensor([left, ap(psi_word(w, p.eval(eta)), v(b))])))

    return unpack(body, shape.output)


_witness_cache: dict[int, RealizerWitness] = {}
_witness_alive: list = []


def cached_data_witness(proof: Proof, engine: Entailer | None = None) -> RealizerWitness:
    """Per-proof witness with shared extraction caches across valuations."""
    got = _witness_cache.get(id(proof))
    if got is None:
        got = data_witness(proof, engine)
        _witness_cache[id(proof)] = got
        _witness_alive.append(proof)
    return got


def run_realizer(proof: Proof, inputs: list, eta: Mapping[str, int] | None = None,
                 engine: Entailer | None = None, cfg: Config = DEFAULT):
    shape = data_shape(proof.claimed)
    if eta is None:
        eta = run_valuation(proof, inputs)
    witness = cached_data_witness(proof, engine)
    term = witness.term(eta)
    scott_args = [scott_encode(spec[1], value)
                  for spec, value in zip(shape.inputs, inputs) if spec[0] == "word"]
    return _decode_output(ap(term, *scott_args), shape, eta, cfg, scott=True)


def _decode_output(term: Term, shape: DataShape, eta, cfg: Config, scott: bool):
    from .lam import scott_decode

    if not scott:
        # Church output: feed Scott constructors to read back
        comps = shape.output
        if len(comps) == 1:
            w, p = comps[0]
            term = ap(term, *[scott_succ(w, jdx + 1) for jdx in range(w)],
                      scott_encode(w, ()))
        else:
            def unpack(t, cs):
                if len(cs) == 1:
                    w, _ = cs[0]
                    return ap(t, *[scott_succ(w, jdx + 1) for jdx in range(w)],
                              scott_encode(w, ()))
                a, b = fresh("a"), fresh("b")
                w, _ = cs[-1]
                return ap(t, absn([a, b], tensor([
                    unpack(v(a), cs[:-1]),
                    ap(v(b), *[scott_succ(w, jdx + 1) for jdx in range(w)],
                       scott_encode(w, ())),
                ])))

            term = unpack(term, shape.output)
    res = normalize(term, cfg)
    return _decode_tree(res.term, shape.output), res


def _decode_tree(nf: Term, comps: list[tuple[int, RP]]):
    from .lam import scott_decode

    if len(comps) == 1:
        return scott_decode(comps[0][0], nf)
    parts = tuple_parts(nf, 2)
    if parts is None:
        raise RealizeError("output does not decode as a tensor")
    left = _decode_tree(parts[0], comps[:-1])
    right = scott_decode(comps[-1][0], parts[1])
    if len(comps) == 2:
        return (left, right)
    return left + (right,)


def run(proof: Proof, inputs: list, path: str = "denote",
        eta: Mapping[str, int] | None = None, engine: Entailer | None = None,
        cfg: Config = DEFAULT):
    """Execute a data-typed proof.  path: denote | realize | both."""
    if path == "denote":
        return run_denotational(proof, inputs, eta, cfg)[0]
    if path == "realize":
        return run_realizer(proof, inputs, eta, engine, cfg)[0]
    if path == "both":
        a = run_denotational(proof, inputs, eta, cfg)[0]
        b = run_realizer(proof, inputs, eta, engine, cfg)[0]
        if a != b:
            raise RealizeError(f"execution paths disagree: {a} vs {b}")
        return a
    raise ValueError(path)


# -- the decidable realizability fragment --------------------------------------------


@dataclass(frozen=True)
class WordInterp:
    """Interpretation of an atom as the tally realizability set of a word
    algebra: realizers are exactly Scott encodings, sizes bounded by the
    first polynomial argument."""

    width: int = 1


DEFAULT_INTERP = {"N": WordInterp(1)}


def check_realizes(eta: Valuation, t: Term, value, f: Formula,
                   interp: Mapping[str, WordInterp] | None = None,
                   cfg: Config = DEFAULT) -> bool:
    interp = DEFAULT_INTERP if interp is None else interp
    nf = normalize(t, cfg).term
    return _realizes(dict(eta), nf, value, f, interp, cfg)


def _realizes(eta, nf, value, f, interp, cfg) -> bool:
    if isinstance(f, Atom):
        spec = interp.get(f.name)
        if spec is None or len(f.args) != 1:
            raise FragmentError(f"atom {f.name!r} has no data interpretation")
        word = word_of(value)
        if any(not 1 <= c <= spec.width for c in word):
            return False
        if len(word) > f.args[0].eval(eta):
            return False
        from .lam import alpha_eq_term

        return alpha_eq_term(nf, normalize(scott_encode(spec.width, word)).term)
    if isinstance(f, Tensor):
        parts = tuple_parts(nf, 2)
        if parts is None or not isinstance(value, tuple) or len(value) != 2:
            return False
        return (_realizes(eta, normalize(parts[0]).term, value[0], f.left, interp, cfg)
                and _realizes(eta, normalize(parts[1]).term, value[1], f.right, interp, cfg))
    if isinstance(f, Bang):
        count = f.bound.eval(eta)
        parts = tuple_parts(nf, count)
        if parts is None:
            return False
        for i, part in enumerate(parts):
            ext = dict(eta)
            ext[f.var] = i
            if not _realizes(ext, normalize(part).term, value, f.body, interp, cfg):
                return False
        return True
    if isinstance(f, Lolli):
        if not callable(value):
            raise FragmentError("function values must be callable")
        for arg_value, arg_term in _enumerate(eta, f.left, interp, cfg):
            out = normalize(ap(nf, arg_term), cfg).term
            if not _realizes(eta, out, value(arg_value), f.right, interp, cfg):
                return False
        return True
    if isinstance(f, ForallRes):
        for mu in _valid_mus(eta, f, cfg):
            ext = dict(eta)
            ext.update(zip(f.vars, mu))
            body = subst_poly(f.body, {vv: RP.const(k) for vv, k in zip(f.vars, mu)})
            out = normalize(ap(nf, encode_valuation(list(mu))), cfg).term
            if not _realizes(ext, out, value, body, interp, cfg):
                return False
        return True
    if isinstance(f, ExistsRes):
        parts = tuple_parts(nf, 2)
        if parts is None:
            return False
        comps = tuple_parts(normalize(parts[0], cfg).term, len(f.vars))
        if comps is None:
            return False
        from .lam import scott_decode

        try:
            mu = tuple(scott_decode(1, normalize(c, cfg).term) for c in comps)
        except Exception:
            return False
        ext = dict(eta)
        ext.update(zip(f.vars, mu))
        sub = {vv: RP.const(k) for vv, k in zip(f.vars, mu)}
        if not f.cset.substitute(sub).satisfies(eta):
            return False
        body = subst_poly(f.body, sub)
        return _realizes(ext, normalize(parts[1], cfg).term, value, body, interp, cfg)
    raise FragmentError(f"formula outside the fragment: {pretty(f)}")


def _valid_mus(eta, quant, cfg):
    budgets = []
    for b in quant.bounds:
        if b is None:
            raise FragmentError("unannotated quantifier in the fragment checker")
        budgets.append(b.eval(eta))
    for mu in itertools.product(*(range(b + 1) for b in budgets)):
        sub = {vv: RP.const(k) for vv, k in zip(quant.vars, mu)}
        if quant.cset.substitute(sub).satisfies(eta):
            yield mu


def _enumerate(eta, f, interp, cfg):
    """Canonical (value, realizer) pairs of a data formula, bounded."""
    if isinstance(f, Atom):
        spec = interp.get(f.name)
        if spec is None or len(f.args) != 1:
            raise FragmentError(f"atom {f.name!r} has no data interpretation")
        limit = min(f.args[0].eval(eta), cfg.ext_test_size)
        for length in range(limit + 1):
            for word in itertools.product(range(1, spec.width + 1), repeat=length):
                yield (word if spec.width > 1 else length), scott_encode(spec.width, word)
        return
    if isinstance(f, Tensor):
        for va, ta in _enumerate(eta, f.left, interp, cfg):
            for vb, tb in _enumerate(eta, f.right, interp, cfg):
                yield (va, vb), tensor([ta, tb])
        return
    if isinstance(f, Bang):
        count = f.bound.eval(eta)
        base = dict(eta)
        base[f.var] = 0
        for value, _ in _enumerate(base, f.body, interp, cfg):
            comps = []
            ok = True
            for i in range(count):
                ext = dict(eta)
                ext[f.var] = i
                cand = None
                for cval, cterm in _enumerate(ext, f.body, interp, cfg):
                    if cval == value:
                        cand = cterm
                        break
                if cand is None:
                    ok = False
                    break
                comps.append(cand)
            if ok:
                yield value, tensor(comps)
        return
    raise FragmentError(f"cannot enumerate realizers of {pretty(f)}")

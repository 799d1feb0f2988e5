"""The trusted core: judgement checking for the seventeen sequent rules.

A proof node carries its rule tag, rule-specific payload, premises, and the
judgement it claims to derive.  Nothing is trusted: `check` re-verifies every
node bottom-up, including well-formedness of all formulas and every
entailment side condition.  An Unknown verdict from the constraint engine
fails the check (kernel soundness beats completeness).

Deviation from the source rule table, recorded in the project notes: the
dereliction rule's premise uses the instance at 0 (the side condition
1 <= p guarantees that copy exists); the instance at 1 would make the
standard numeral and successor derivations impossible and contradicts the
0-based semantics of the modality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator

from .config import DEFAULT, Config
from .constraint import Constraint, ConstraintSet, Entailer, Verdict
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
    WellFormedError,
    alpha_eq,
    free_atoms,
    free_rvars,
    fresh_name,
    leq_formula,
    pretty,
    subst_atom,
    subst_poly,
    well_formed,
)
from .respoly import ResourcePoly

RULES = (
    "A", "U", "W", "X",
    "Rlolli", "Llolli", "Rtensor", "Ltensor",
    "Pbang", "Dbang", "Nbang",
    "Rforalla", "Lforalla",
    "Rforallx", "Lforallx", "Rexistsx", "Lexistsx",
)


@dataclass(frozen=True)
class Judgement:
    cset: ConstraintSet
    context: tuple[Formula, ...]
    conclusion: Formula

    def free_rvars(self) -> frozenset[str]:
        out = self.cset.free_vars() | free_rvars(self.conclusion)
        for f in self.context:
            out |= free_rvars(f)
        return out

    def __str__(self) -> str:  # pragma: no cover - convenience
        from .syntax import print_judgement

        return print_judgement(self)


@dataclass(frozen=True, eq=False)
class Proof:
    rule: str
    params: dict[str, Any]
    premises: tuple["Proof", ...]
    claimed: Judgement

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}")

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)

    def nodes(self) -> Iterator["Proof"]:
        yield self
        for p in self.premises:
            yield from p.nodes()


class CheckError(Exception):
    def __init__(self, path: tuple[int, ...], rule: str, message: str,
                 verdict: Verdict | None = None):
        self.path = path
        self.rule = rule
        self.verdict = verdict
        where = "root" if not path else "/".join(map(str, path))
        super().__init__(f"[{rule} at {where}] {message}")


def _ins(ctx: tuple, at: int, *items) -> tuple:
    return ctx[:at] + tuple(items) + ctx[at + 1 :]


def _without(ctx: tuple, at: int) -> tuple:
    return ctx[:at] + ctx[at + 1 :]


class Checker:
    """Verifies proofs against a constraint engine; caches well-formedness."""

    def __init__(self, engine: Entailer | None = None, cfg: Config = DEFAULT):
        self.engine = engine or Entailer(cfg)
        self._wf_ok: set = set()

    # -- public -----------------------------------------------------------

    def check(self, proof: Proof) -> Judgement:
        self._check(proof, ())
        return proof.claimed

    # -- helpers ------------------------------------------------------------

    def _wf(self, f: Formula, path, rule):
        if f in self._wf_ok:
            return
        try:
            well_formed(f, self.engine)
        except WellFormedError as e:
            raise CheckError(path, rule, f"ill-formed formula: {e} in {pretty(e.node)}",
                             e.verdict) from e
        self._wf_ok.add(f)

    def _need_valid(self, verdict: Verdict, path, rule, what: str):
        if verdict.is_valid:
            return
        if verdict.is_invalid:
            raise CheckError(path, rule, f"side condition fails: {what}; "
                             f"counterexample {verdict.counterexample}", verdict)
        raise CheckError(path, rule, f"undecided side condition: {what}", verdict)

    def _leq(self, cset, a, b, path, rule, what):
        try:
            verdict = leq_formula(cset, a, b, self.engine)
        except SkeletonMismatch as e:
            raise CheckError(path, rule, f"skeleton mismatch in {what}: {e}") from e
        self._need_valid(verdict, path, rule, what)

    def _same_cset(self, j1: Judgement, j2: Judgement, path, rule):
        if j1.cset != j2.cset:
            raise CheckError(path, rule, "premise constraint set differs from conclusion")

    def _eq_formula(self, a, b, path, rule, what):
        if not alpha_eq(a, b):
            raise CheckError(path, rule,
                             f"{what}: expected {pretty(b)}, found {pretty(a)}")

    def _eq_ctx(self, got: tuple, want: tuple, path, rule, what):
        if len(got) != len(want):
            raise CheckError(path, rule,
                             f"{what}: context length {len(got)} vs {len(want)}")
        for i, (a, b) in enumerate(zip(got, want)):
            self._eq_formula(a, b, path, rule, f"{what} (position {i})")

    def _param(self, proof: Proof, path, name, kind=None):
        if name not in proof.params:
            raise CheckError(path, proof.rule, f"missing parameter {name!r}")
        val = proof.params[name]
        if kind is not None and not isinstance(val, kind):
            raise CheckError(path, proof.rule, f"parameter {name!r} has wrong type")
        return val

    def _principal(self, j: Judgement, at: int, cls, path, rule):
        if not 0 <= at < len(j.context):
            raise CheckError(path, rule, f"principal index {at} out of range")
        f = j.context[at]
        if not isinstance(f, cls):
            raise CheckError(path, rule,
                             f"principal formula is {type(f).__name__}, "
                             f"expected {cls.__name__}")
        return f

    # -- the rule table -----------------------------------------------------

    def _check(self, proof: Proof, path: tuple[int, ...]) -> None:
        for i, prem in enumerate(proof.premises):
            self._check(prem, path + (i,))
        j = proof.claimed
        for f in j.context + (j.conclusion,):
            self._wf(f, path, proof.rule)
        getattr(self, "_rule_" + proof.rule)(proof, path)

    def _expect_premises(self, proof, path, n):
        if len(proof.premises) != n:
            raise CheckError(path, proof.rule,
                             f"expected {n} premises, found {len(proof.premises)}")

    def _rule_A(self, proof, path):
        self._expect_premises(proof, path, 0)
        j = proof.claimed
        if len(j.context) != 1:
            raise CheckError(path, "A", "axiom context must have exactly one formula")
        self._leq(j.cset, j.context[0], j.conclusion, path, "A",
                  "hypothesis <=form conclusion")

    def _rule_U(self, proof, path):
        self._expect_premises(proof, path, 2)
        j = proof.claimed
        j1, j2 = (p.claimed for p in proof.premises)
        cut_at = self._param(proof, path, "cut_at", int)
        if not 0 <= cut_at < len(j2.context):
            raise CheckError(path, "U", "cut position out of range")
        self._same_cset(j1, j, path, "U")
        self._same_cset(j2, j, path, "U")
        self._eq_formula(j2.context[cut_at], j1.conclusion, path, "U", "cut formula")
        self._eq_ctx(j.context, j1.context + _without(j2.context, cut_at),
                     path, "U", "conclusion context")
        self._eq_formula(j.conclusion, j2.conclusion, path, "U", "conclusion")

    def _rule_W(self, proof, path):
        self._expect_premises(proof, path, 1)
        j = proof.claimed
        j1 = proof.premises[0].claimed
        at = self._param(proof, path, "at", int)
        if not 0 <= at < len(j.context):
            raise CheckError(path, "W", "weakening position out of range")
        self._same_cset(j1, j, path, "W")
        self._eq_ctx(_without(j.context, at), j1.context, path, "W", "context")
        self._eq_formula(j.conclusion, j1.conclusion, path, "W", "conclusion")

    def _rule_X(self, proof, path):
        self._expect_premises(proof, path, 1)
        j = proof.claimed
        j1 = proof.premises[0].claimed
        at = self._param(proof, path, "at", int)
        at2 = proof.params.get("at2", at + 1)
        p = self._param(proof, path, "p", ResourcePoly)
        q = self._param(proof, path, "q", ResourcePoly)
        principal = self._principal(j, at, Bang, path, "X")
        x, r, body = principal.var, principal.bound, principal.body
        if not at < at2 <= len(j.context):
            raise CheckError(path, "X", "second premise position out of range")
        self._same_cset(j1, j, path, "X")
        self._eq_formula(j.conclusion, j1.conclusion, path, "X", "conclusion")
        yf = fresh_name("y", free_rvars(body) | p.free_vars() | q.free_vars() | {x})
        shifted = subst_poly(body, {x: p.add(ResourcePoly.var(yf))})
        want = list(_ins(j.context, at, Bang(x, p, body)))
        want.insert(at2, Bang(yf, q, shifted))
        self._eq_ctx(j1.context, tuple(want), path, "X", "premise context")
        self._need_valid(self.engine.poly_leq(j.cset, p.add(q), r),
                         path, "X", "p + q <= r")

    def _rule_Rlolli(self, proof, path):
        self._expect_premises(proof, path, 1)
        j = proof.claimed
        j1 = proof.premises[0].claimed
        arg_at = self._param(proof, path, "arg_at", int)
        if not 0 <= arg_at < len(j1.context):
            raise CheckError(path, "Rlolli", "argument position out of range")
        if not isinstance(j.conclusion, Lolli):
            raise CheckError(path, "Rlolli", "conclusion is not a lollipop")
        self._same_cset(j1, j, path, "Rlolli")
        self._eq_formula(j.conclusion.left, j1.context[arg_at], path, "Rlolli",
                         "abstracted hypothesis")
        self._eq_formula(j.conclusion.right, j1.conclusion, path, "Rlolli", "body")
        self._eq_ctx(j.context, _without(j1.context, arg_at), path, "Rlolli", "context")

    def _rule_Llolli(self, proof, path):
        self._expect_premises(proof, path, 2)
        j = proof.claimed
        j1, j2 = (p.claimed for p in proof.premises)
        at = self._param(proof, path, "at", int)
        b_at = self._param(proof, path, "b_at", int)
        principal = self._principal(j, at, Lolli, path, "Llolli")
        if not 0 <= b_at < len(j2.context):
            raise CheckError(path, "Llolli", "b position out of range")
        self._same_cset(j1, j, path, "Llolli")
        self._same_cset(j2, j, path, "Llolli")
        self._eq_formula(principal.left, j1.conclusion, path, "Llolli",
                         "argument side of the principal formula")
        self._eq_formula(principal.right, j2.context[b_at], path, "Llolli",
                         "result side of the principal formula")
        want = j1.context + _without(j2.context, b_at)
        self._eq_ctx(_without(j.context, at), want, path, "Llolli", "context")
        self._eq_formula(j.conclusion, j2.conclusion, path, "Llolli", "conclusion")

    def _rule_Rtensor(self, proof, path):
        self._expect_premises(proof, path, 2)
        j = proof.claimed
        j1, j2 = (p.claimed for p in proof.premises)
        if not isinstance(j.conclusion, Tensor):
            raise CheckError(path, "Rtensor", "conclusion is not a tensor")
        self._same_cset(j1, j, path, "Rtensor")
        self._same_cset(j2, j, path, "Rtensor")
        self._eq_formula(j.conclusion.left, j1.conclusion, path, "Rtensor", "left")
        self._eq_formula(j.conclusion.right, j2.conclusion, path, "Rtensor", "right")
        self._eq_ctx(j.context, j1.context + j2.context, path, "Rtensor", "context")

    def _rule_Ltensor(self, proof, path):
        self._expect_premises(proof, path, 1)
        j = proof.claimed
        j1 = proof.premises[0].claimed
        at = self._param(proof, path, "at", int)
        principal = self._principal(j, at, Tensor, path, "Ltensor")
        self._same_cset(j1, j, path, "Ltensor")
        self._eq_formula(j.conclusion, j1.conclusion, path, "Ltensor", "conclusion")
        want = _ins(j.context, at, principal.left, principal.right)
        self._eq_ctx(j1.context, want, path, "Ltensor", "premise context")

    def _rule_Pbang(self, proof, path):
        self._expect_premises(proof, path, 1)
        j = proof.claimed
        j1 = proof.premises[0].claimed
        x = self._param(proof, path, "x", str)
        if not isinstance(j.conclusion, Bang):
            raise CheckError(path, "Pbang", "conclusion is not a bang")
        p = j.conclusion.bound
        if x in j.cset.free_vars():
            raise CheckError(path, "Pbang",
                             f"modality variable {x!r} occurs in the constraint set")
        self._eq_formula(j.conclusion, Bang(x, p, j1.conclusion), path, "Pbang",
                         "conclusion")
        if len(j.context) != len(j1.context):
            raise CheckError(path, "Pbang", "context length mismatch")
        for i, (banged, plain) in enumerate(zip(j.context, j1.context)):
            if not isinstance(banged, Bang):
                raise CheckError(path, "Pbang", f"context position {i} is not a bang")
            self._eq_formula(banged, Bang(x, banged.bound, plain), path, "Pbang",
                             f"context position {i}")
            self._need_valid(self.engine.poly_leq(j.cset, p, banged.bound),
                             path, "Pbang", f"p <= q_{i}")
        hyp = j.cset.add(Constraint(ResourcePoly.var(x).add(ResourcePoly.const(1)), p))
        self._need_valid(self.engine.entails(hyp, j1.cset), path, "Pbang",
                         "conclusion constraints plus x < p entail premise constraints")

    def _rule_Dbang(self, proof, path):
        self._expect_premises(proof, path, 1)
        j = proof.claimed
        j1 = proof.premises[0].claimed
        at = self._param(proof, path, "at", int)
        principal = self._principal(j, at, Bang, path, "Dbang")
        self._same_cset(j1, j, path, "Dbang")
        self._eq_formula(j.conclusion, j1.conclusion, path, "Dbang", "conclusion")
        derelict = subst_poly(principal.body, {principal.var: ResourcePoly.zero()})
        self._eq_ctx(j1.context, _ins(j.context, at, derelict), path, "Dbang",
                     "premise context")
        self._need_valid(self.engine.poly_leq(j.cset, ResourcePoly.const(1),
                                              principal.bound),
                         path, "Dbang", "1 <= p")

    def _rule_Nbang(self, proof, path):
        self._expect_premises(proof, path, 1)
        j = proof.claimed
        j1 = proof.premises[0].claimed
        at = self._param(proof, path, "at", int)
        p = self._param(proof, path, "p", ResourcePoly)
        q = self._param(proof, path, "q", ResourcePoly)
        w = self._param(proof, path, "w", str)
        y = self._param(proof, path, "y", str)
        z = self._param(proof, path, "z", str)
        principal = self._principal(j, at, Bang, path, "Nbang")
        x, r, body = principal.var, principal.bound, principal.body
        self._same_cset(j1, j, path, "Nbang")
        self._eq_formula(j.conclusion, j1.conclusion, path, "Nbang", "conclusion")
        qy = q.substitute({w: ResourcePoly.var(y)})
        partial = q.bounded_sum(w, y)  # sum of q for w < y
        inner_body = subst_poly(body, {x: ResourcePoly.var(z).add(partial)})
        want = Bang(y, p, Bang(z, qy, inner_body))
        self._eq_ctx(j1.context, _ins(j.context, at, want), path, "Nbang",
                     "premise context")
        tmp = fresh_name("t", p.free_vars() | q.free_vars() | r.free_vars() | {w})
        total = q.bounded_sum(w, tmp).substitute({tmp: p})
        self._need_valid(self.engine.poly_leq(j.cset, total, r), path, "Nbang",
                         "sum of q below p <= r")

    def _rule_Rforalla(self, proof, path):
        self._expect_premises(proof, path, 1)
        j = proof.claimed
        j1 = proof.premises[0].claimed
        atom = self._param(proof, path, "atom", str)
        if not isinstance(j.conclusion, ForallAtom):
            raise CheckError(path, "Rforalla", "conclusion is not an atom quantifier")
        self._same_cset(j1, j, path, "Rforalla")
        self._eq_formula(j.conclusion, ForallAtom(atom, j1.conclusion), path,
                         "Rforalla", "conclusion")
        self._eq_ctx(j.context, j1.context, path, "Rforalla", "context")
        for i, f in enumerate(j.context):
            if atom in free_atoms(f):
                raise CheckError(path, "Rforalla",
                                 f"atom {atom!r} occurs free in context position {i}")

    def _rule_Lforalla(self, proof, path):
        self._expect_premises(proof, path, 1)
        j = proof.claimed
        j1 = proof.premises[0].claimed
        at = self._param(proof, path, "at", int)
        image = self._param(proof, path, "B")
        bparams = tuple(self._param(proof, path, "params"))
        principal = self._principal(j, at, ForallAtom, path, "Lforalla")
        self._same_cset(j1, j, path, "Lforalla")
        self._eq_formula(j.conclusion, j1.conclusion, path, "Lforalla", "conclusion")
        try:
            instantiated = subst_atom(principal.body, principal.atom, bparams, image)
        except Exception as e:
            raise CheckError(path, "Lforalla", f"instantiation rejected: {e}") from e
        self._eq_ctx(j1.context, _ins(j.context, at, instantiated), path, "Lforalla",
                     "premise context")

    def _rule_Rforallx(self, proof, path):
        self._expect_premises(proof, path, 1)
        j = proof.claimed
        j1 = proof.premises[0].claimed
        actual = tuple(self._param(proof, path, "vars"))
        if not isinstance(j.conclusion, ForallRes):
            raise CheckError(path, "Rforallx", "conclusion is not a quantifier")
        quant = j.conclusion
        if len(actual) != len(quant.vars) or len(set(actual)) != len(actual):
            raise CheckError(path, "Rforallx", "variable list mismatch")
        ren = {v: ResourcePoly.var(a) for v, a in zip(quant.vars, actual)}
        self._eq_ctx(j.context, j1.context, path, "Rforallx", "context")
        for i, f in enumerate(j.context):
            if set(actual) & free_rvars(f):
                raise CheckError(path, "Rforallx",
                                 f"quantified variable occurs free in context position {i}")
        if set(actual) & j.cset.free_vars():
            raise CheckError(path, "Rforallx",
                             "quantified variable occurs free in the constraint set")
        want_cset = j.cset.union(quant.cset.substitute(ren))
        if j1.cset != want_cset:
            raise CheckError(path, "Rforallx", "premise constraint set mismatch")
        self._eq_formula(j1.conclusion, subst_poly(quant.body, ren), path,
                         "Rforallx", "premise conclusion")

    def _rule_Lforallx(self, proof, path):
        self._expect_premises(proof, path, 1)
        j = proof.claimed
        j1 = proof.premises[0].claimed
        at = self._param(proof, path, "at", int)
        witnesses = tuple(self._param(proof, path, "witnesses"))
        principal = self._principal(j, at, ForallRes, path, "Lforallx")
        if len(witnesses) != len(principal.vars):
            raise CheckError(path, "Lforallx", "witness count mismatch")
        sub = dict(zip(principal.vars, witnesses))
        self._same_cset(j1, j, path, "Lforallx")
        self._eq_formula(j.conclusion, j1.conclusion, path, "Lforallx", "conclusion")
        self._eq_ctx(j1.context, _ins(j.context, at, subst_poly(principal.body, sub)),
                     path, "Lforallx", "premise context")
        self._need_valid(self.engine.entails(j.cset, principal.cset.substitute(sub)),
                         path, "Lforallx", "witnesses satisfy the quantifier constraints")

    def _rule_Rexistsx(self, proof, path):
        self._expect_premises(proof, path, 1)
        j = proof.claimed
        j1 = proof.premises[0].claimed
        witnesses = tuple(self._param(proof, path, "witnesses"))
        if not isinstance(j.conclusion, ExistsRes):
            raise CheckError(path, "Rexistsx", "conclusion is not an existential")
        quant = j.conclusion
        if len(witnesses) != len(quant.vars):
            raise CheckError(path, "Rexistsx", "witness count mismatch")
        sub = dict(zip(quant.vars, witnesses))
        self._same_cset(j1, j, path, "Rexistsx")
        self._eq_ctx(j.context, j1.context, path, "Rexistsx", "context")
        self._eq_formula(j1.conclusion, subst_poly(quant.body, sub), path,
                         "Rexistsx", "premise conclusion")
        self._need_valid(self.engine.entails(j.cset, quant.cset.substitute(sub)),
                         path, "Rexistsx", "witnesses satisfy the quantifier constraints")

    def _rule_Lexistsx(self, proof, path):
        self._expect_premises(proof, path, 1)
        j = proof.claimed
        j1 = proof.premises[0].claimed
        at = self._param(proof, path, "at", int)
        actual = tuple(self._param(proof, path, "vars"))
        principal = self._principal(j, at, ExistsRes, path, "Lexistsx")
        if len(actual) != len(principal.vars) or len(set(actual)) != len(actual):
            raise CheckError(path, "Lexistsx", "variable list mismatch")
        ren = {v: ResourcePoly.var(a) for v, a in zip(principal.vars, actual)}
        self._eq_formula(j.conclusion, j1.conclusion, path, "Lexistsx", "conclusion")
        for i, f in enumerate(_without(j.context, at)):
            if set(actual) & free_rvars(f):
                raise CheckError(path, "Lexistsx",
                                 "quantified variable occurs free in the context")
        if set(actual) & (free_rvars(j.conclusion) | j.cset.free_vars()):
            raise CheckError(path, "Lexistsx",
                             "quantified variable occurs free in conclusion or constraints")
        want_cset = j.cset.union(principal.cset.substitute(ren))
        if j1.cset != want_cset:
            raise CheckError(path, "Lexistsx", "premise constraint set mismatch")
        self._eq_ctx(j1.context, _ins(j.context, at, subst_poly(principal.body, ren)),
                     path, "Lexistsx", "premise context")


def check(proof: Proof, engine: Entailer | None = None, cfg: Config = DEFAULT) -> Judgement:
    return Checker(engine, cfg).check(proof)


# -- the forgetful map ---------------------------------------------------------


_ERASED = {"Pbang", "Dbang", "Nbang", "Rforallx", "Lforallx", "Rexistsx", "Lexistsx"}


@dataclass(frozen=True)
class SkeletonProof:
    """A second-order intuitionistic sequent proof, identified by its rule
    tree and hypothesis wiring; exponential and first-order steps are erased."""

    rule: str
    params: tuple[int, ...]
    premises: tuple["SkeletonProof", ...]
    ctx_len: int

    def tree_key(self) -> tuple:
        return (self.rule, self.params, tuple(p.tree_key() for p in self.premises))

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)


def forget(proof: Proof) -> SkeletonProof:
    rule = proof.rule
    if rule in _ERASED:
        return forget(proof.premises[0])
    ps = tuple(forget(p) for p in proof.premises)
    n = len(proof.claimed.context)
    if rule == "A":
        return SkeletonProof("A", (), (), 1)
    if rule == "U":
        return SkeletonProof("U", (proof.params["cut_at"], ps[0].ctx_len), ps, n)
    if rule == "W":
        return SkeletonProof("W", (proof.params["at"],), ps, n)
    if rule == "X":
        at = proof.params["at"]
        return SkeletonProof("X", (at, proof.params.get("at2", at + 1)), ps, n)
    if rule == "Rlolli":
        return SkeletonProof("Rimp", (proof.params["arg_at"],), ps, n)
    if rule == "Llolli":
        return SkeletonProof("Limp", (proof.params["at"], proof.params["b_at"],
                                      ps[0].ctx_len), ps, n)
    if rule == "Rtensor":
        return SkeletonProof("Rtimes", (ps[0].ctx_len,), ps, n)
    if rule == "Ltensor":
        return SkeletonProof("Ltimes", (proof.params["at"],), ps, n)
    if rule == "Rforalla":
        return SkeletonProof("Rfa", (), ps, n)
    if rule == "Lforalla":
        return SkeletonProof("Lfa", (proof.params["at"],), ps, n)
    raise AssertionError(rule)


def skeleton_formula(f: Formula):
    """G2i image of a formula: tensors to products, lollipops to arrows,
    modalities and first-order quantifiers erased."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Tensor):
        return ("x", skeleton_formula(f.left), skeleton_formula(f.right))
    if isinstance(f, Lolli):
        return ("->", skeleton_formula(f.left), skeleton_formula(f.right))
    if isinstance(f, ForallAtom):
        return ("fa", f.atom, skeleton_formula(f.body))
    if isinstance(f, Bang):
        return skeleton_formula(f.body)
    if isinstance(f, (ForallRes, ExistsRes)):
        return skeleton_formula(f.body)
    raise TypeError(f)

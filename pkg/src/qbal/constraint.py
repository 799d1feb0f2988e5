"""Constraints p <= q, constraint sets, and tri-state entailment.

Semantic entailment between constraint sets is undecidable, so the engine
splits it three ways: a sound symbolic prover (Valid), a sound bounded
counterexample search (Invalid, carrying a witness valuation), and Unknown
for everything else.  Callers that need a side condition treat Unknown as
failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .config import DEFAULT, Config
from .respoly import ResourcePoly


@dataclass(frozen=True)
class Constraint:
    lhs: ResourcePoly
    rhs: ResourcePoly

    def free_vars(self) -> frozenset[str]:
        return self.lhs.free_vars() | self.rhs.free_vars()

    def holds(self, eta: Mapping[str, int]) -> bool:
        return self.lhs.eval(eta) <= self.rhs.eval(eta)

    def substitute(self, subst: Mapping[str, ResourcePoly]) -> "Constraint":
        return Constraint(self.lhs.substitute(subst), self.rhs.substitute(subst))


def strict(lhs: ResourcePoly, rhs: ResourcePoly) -> Constraint:
    """p < q stored as p + 1 <= q."""
    return Constraint(lhs.add(ResourcePoly.const(1)), rhs)


@dataclass(frozen=True)
class ConstraintSet:
    constraints: tuple[Constraint, ...]

    @staticmethod
    def of(items: Iterable[Constraint]) -> "ConstraintSet":
        uniq = {(c.lhs.terms, c.rhs.terms): c for c in items}
        ordered = sorted(uniq.values(), key=lambda c: (c.lhs.terms, c.rhs.terms))
        return ConstraintSet(tuple(ordered))

    @staticmethod
    def empty() -> "ConstraintSet":
        return ConstraintSet(())

    def union(self, other: "ConstraintSet") -> "ConstraintSet":
        return ConstraintSet.of(self.constraints + other.constraints)

    def add(self, *items: Constraint) -> "ConstraintSet":
        return ConstraintSet.of(self.constraints + items)

    def free_vars(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for c in self.constraints:
            out |= c.free_vars()
        return out

    def substitute(self, subst: Mapping[str, ResourcePoly]) -> "ConstraintSet":
        return ConstraintSet.of(c.substitute(subst) for c in self.constraints)

    def satisfies(self, eta: Mapping[str, int]) -> bool:
        return all(c.holds(eta) for c in self.constraints)

    def polarity(self, var: str) -> str:
        """Side-of-inequality classification: positive/negative/both/absent."""
        neg = any(var in c.lhs.free_vars() for c in self.constraints)
        pos = any(var in c.rhs.free_vars() for c in self.constraints)
        if pos and neg:
            return "both"
        if pos:
            return "positive"
        if neg:
            return "negative"
        return "absent"

    def __str__(self) -> str:  # pragma: no cover - convenience
        from .syntax import print_cset

        return print_cset(self)


class Verdict:
    """Valid | Invalid(counterexample valuation) | Unknown."""

    __slots__ = ("kind", "counterexample")

    def __init__(self, kind: str, counterexample: dict[str, int] | None = None):
        self.kind = kind
        self.counterexample = counterexample

    @staticmethod
    def valid() -> "Verdict":
        return Verdict("valid")

    @staticmethod
    def invalid(eta: Mapping[str, int]) -> "Verdict":
        return Verdict("invalid", dict(eta))

    @staticmethod
    def unknown() -> "Verdict":
        return Verdict("unknown")

    @property
    def is_valid(self) -> bool:
        return self.kind == "valid"

    @property
    def is_invalid(self) -> bool:
        return self.kind == "invalid"

    def __repr__(self):
        if self.is_invalid:
            return f"Invalid({self.counterexample})"
        return self.kind.capitalize()


def combine(verdicts: Iterable[Verdict]) -> Verdict:
    """Any Invalid dominates, else any Unknown, else Valid."""
    out = Verdict.valid()
    for v in verdicts:
        if v.is_invalid:
            return v
        if v.kind == "unknown":
            out = v
    return out


def _diff_coeffs(p: ResourcePoly, q: ResourcePoly) -> dict:
    """Coefficient map of q - p over the integers (binomial basis)."""
    acc = {f: c for f, c in q.terms}
    for f, c in p.terms:
        acc[f] = acc.get(f, 0) - c
    return {f: c for f, c in acc.items() if c != 0}


def _dominates(p: ResourcePoly, q: ResourcePoly, a: ResourcePoly, b: ResourcePoly) -> bool:
    """(q - p) - (b - a) has nonnegative basis coefficients, so a<=b forces p<=q."""
    acc = _diff_coeffs(p, q)
    for f, c in _diff_coeffs(a, b).items():
        acc[f] = acc.get(f, 0) - c
    return all(c >= 0 for c in acc.values())


def _coeff_leq(p: ResourcePoly, q: ResourcePoly) -> bool:
    """Fast syntactic order on canonical forms: every basis coefficient of
    q - p is nonnegative.  Coincides with leq_syntactic (the Newton
    differences of a binomial-basis polynomial are its coefficients)."""
    return all(c >= 0 for c in _diff_coeffs(p, q).values())


def _deg(p: ResourcePoly) -> int:
    return max((sum(i for _, i in f) for f, _ in p.terms), default=0)


class Entailer:
    """Caching wrapper around the symbolic prover and counterexample search."""

    def __init__(self, cfg: Config = DEFAULT):
        self.cfg = cfg
        self._sat_cache: dict = {}
        self._verdict_cache: dict = {}
        self._prove_cache: dict = {}

    # -- saturation ------------------------------------------------------

    def _saturate(self, cset: ConstraintSet) -> list[tuple[ResourcePoly, ResourcePoly]]:
        key = cset.constraints
        hit = self._sat_cache.get(key)
        if hit is not None:
            return hit
        seen = {(c.lhs.terms, c.rhs.terms): (c.lhs, c.rhs) for c in cset.constraints}
        pool = list(seen.values())
        frontier = list(pool)
        for _ in range(self.cfg.prover_depth):
            if not frontier or len(pool) >= self.cfg.max_saturation:
                break
            fresh = []
            for a, b in frontier:
                for c, d in pool:
                    for lo, hi in self._congruences(a, b, c, d):
                        k = (lo.terms, hi.terms)
                        if k not in seen:
                            seen[k] = (lo, hi)
                            fresh.append((lo, hi))
                if len(pool) + len(fresh) >= self.cfg.max_saturation:
                    break
            pool.extend(fresh)
            frontier = fresh
        del pool[self.cfg.max_saturation :]
        self._sat_cache[key] = pool
        return pool

    @staticmethod
    def _congruences(a, b, c, d):
        out = [(a.add(c), b.add(d))]
        if _deg(b) + _deg(d) <= 6 and len(b.terms) * len(d.terms) <= 24:
            out.append((a.mul(c), b.mul(d)))
        if _coeff_leq(b, c):  # transitive join through b <= c
            out.append((a, d))
        if _coeff_leq(d, a):  # and the symmetric join through d <= a
            out.append((c, b))
        return out

    def _prove(self, cset: ConstraintSet, p: ResourcePoly, q: ResourcePoly, depth: int) -> bool:
        if _coeff_leq(p, q):
            return True
        key = (cset.constraints, p.terms, q.terms, depth)
        hit = self._prove_cache.get(key)
        if hit is not None:
            return hit
        self._prove_cache[key] = False  # cut cycles pessimistically
        result = self._prove_inner(cset, p, q, depth)
        self._prove_cache[key] = result
        return result

    def _prove_inner(self, cset, p, q, depth):
        pool = self._saturate(cset)
        for a, b in pool:
            if _dominates(p, q, a, b):
                return True
        if depth > 0:
            for a, b in pool:
                # chain p <= a <= b <= q when one link is syntactic
                if _coeff_leq(p, a) and self._prove(cset, b, q, depth - 1):
                    return True
                if _coeff_leq(b, q) and self._prove(cset, p, a, depth - 1):
                    return True
        return False

    # -- counterexample search -------------------------------------------

    def _search_violation(
        self, cset: ConstraintSet, goals: tuple[Constraint, ...]
    ) -> dict[str, int] | None:
        vars_ = sorted(cset.free_vars() | frozenset(v for g in goals for v in g.free_vars()))
        if not vars_:
            eta: dict[str, int] = {}
            if cset.satisfies(eta) and any(not g.holds(eta) for g in goals):
                return eta
            return None
        # widen the box gradually; failures live at tiny values
        for bound in (1, 2, 4, self.cfg.brute_bound):
            eta = {v: 0 for v in vars_}
            found = self._scan(cset, goals, vars_, bound, eta, 0)
            if found is not None:
                return found
            if bound >= self.cfg.brute_bound:
                break
        return None

    def _scan(self, cset, goals, vars_, bound, eta, i):
        if i == len(vars_):
            if cset.satisfies(eta) and any(not g.holds(eta) for g in goals):
                return dict(eta)
            return None
        for v in range(bound + 1):
            eta[vars_[i]] = v
            got = self._scan(cset, goals, vars_, bound, eta, i + 1)
            if got is not None:
                return got
        return None

    # -- public operations -------------------------------------------------

    def poly_leq(self, cset: ConstraintSet, p: ResourcePoly, q: ResourcePoly) -> Verdict:
        return self.entails(cset, ConstraintSet.of([Constraint(p, q)]))

    def entails(self, cset: ConstraintSet, goals: ConstraintSet) -> Verdict:
        key = (cset.constraints, goals.constraints)
        hit = self._verdict_cache.get(key)
        if hit is not None:
            return hit
        unproved = [
            g
            for g in goals.constraints
            if not self._prove(cset, g.lhs, g.rhs, self.cfg.prover_depth)
        ]
        if not unproved:
            verdict = Verdict.valid()
        else:
            ce = self._search_violation(cset, tuple(unproved))
            verdict = Verdict.invalid(ce) if ce is not None else Verdict.unknown()
        self._verdict_cache[key] = verdict
        return verdict


_default_entailer = Entailer(DEFAULT)


def entails(cset: ConstraintSet, goals: ConstraintSet, engine: Entailer | None = None) -> Verdict:
    return (engine or _default_entailer).entails(cset, goals)


def poly_leq(
    cset: ConstraintSet, p: ResourcePoly, q: ResourcePoly, engine: Entailer | None = None
) -> Verdict:
    return (engine or _default_entailer).poly_leq(cset, p, q)

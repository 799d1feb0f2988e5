"""Exact arithmetic on resource polynomials in the binomial-coefficient basis.

A monomial is a product of binomial coefficients C(x, n) in pairwise distinct
variables, scaled by a positive integer.  A resource polynomial is a finite sum
of monomials.  The basis is closed under sums, products, composition and
bounded sums, and every polynomial maps naturals to naturals.  Normal forms
are unique: two polynomials are equal iff they compare structurally equal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb, factorial
from typing import Callable, Iterable, Mapping


class ResPolyError(Exception):
    """Raised on precondition violations (unbound variable, bad bounded sum)."""


# factors: ((var, index), ...) sorted by variable name, every index >= 1
Factors = tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class Monomial:
    factors: Factors
    coefficient: int

    def degree(self) -> int:
        return sum(i for _, i in self.factors)


def _grlex_key(factors: Factors) -> tuple:
    return (sum(i for _, i in factors), factors)


@dataclass(frozen=True)
class ResourcePoly:
    """Canonical sum of monomials, ordered graded-lexicographically."""

    terms: tuple[tuple[Factors, int], ...]

    # -- construction ----------------------------------------------------

    @staticmethod
    def _from_map(m: Mapping[Factors, int]) -> "ResourcePoly":
        items = [(f, c) for f, c in m.items() if c != 0]
        for f, c in items:
            if c < 0:
                raise ResPolyError(f"negative coefficient {c} for {f}")
        items.sort(key=lambda fc: _grlex_key(fc[0]))
        return ResourcePoly(tuple(items))

    @staticmethod
    def zero() -> "ResourcePoly":
        return ResourcePoly(())

    @staticmethod
    def const(n: int) -> "ResourcePoly":
        if n < 0:
            raise ResPolyError(f"negative constant {n}")
        if n == 0:
            return ResourcePoly.zero()
        return ResourcePoly((((), n),))

    @staticmethod
    def binom(var: str, index: int) -> "ResourcePoly":
        if index < 0:
            raise ResPolyError(f"negative binomial index {index}")
        if index == 0:
            return ResourcePoly.const(1)
        return ResourcePoly(((((var, index),), 1),))

    @staticmethod
    def var(name: str) -> "ResourcePoly":
        return ResourcePoly.binom(name, 1)

    # -- basic structure -------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def monomials(self) -> tuple[Monomial, ...]:
        return tuple(Monomial(f, c) for f, c in self.terms)

    def free_vars(self) -> frozenset[str]:
        return frozenset(v for f, _ in self.terms for v, _ in f)

    def constant_value(self) -> int | None:
        """The value of a closed polynomial, None if any variable occurs."""
        if not self.terms:
            return 0
        if len(self.terms) == 1 and self.terms[0][0] == ():
            return self.terms[0][1]
        return None

    def var_degree_bound(self, var: str) -> int:
        """Safe per-variable degree bound: sum of that variable's indices."""
        return sum(i for f, _ in self.terms for v, i in f if v == var)

    # -- evaluation ------------------------------------------------------

    def eval(self, valuation: Mapping[str, int]) -> int:
        total = 0
        for factors, coeff in self.terms:
            prod = coeff
            for v, i in factors:
                if v not in valuation:
                    raise ResPolyError(f"unbound variable {v!r} in valuation")
                prod *= comb(valuation[v], i)
                if prod == 0:
                    break
            total += prod
        return total

    # -- ring operations -------------------------------------------------

    def add(self, other: "ResourcePoly") -> "ResourcePoly":
        acc = dict(self.terms)
        for f, c in other.terms:
            acc[f] = acc.get(f, 0) + c
        return ResourcePoly._from_map(acc)

    def scale(self, n: int) -> "ResourcePoly":
        if n == 0:
            return ResourcePoly.zero()
        if n < 0:
            raise ResPolyError(f"negative scale {n}")
        return ResourcePoly(tuple((f, c * n) for f, c in self.terms))

    def mul(self, other: "ResourcePoly") -> "ResourcePoly":
        acc: dict[Factors, int] = {}
        for f1, c1 in self.terms:
            for f2, c2 in other.terms:
                for f, c in _mono_mul(f1, f2, c1 * c2):
                    acc[f] = acc.get(f, 0) + c
        return ResourcePoly._from_map(acc)

    def substitute(self, subst: Mapping[str, "ResourcePoly"]) -> "ResourcePoly":
        """Composition, renormalized through Newton forward differences."""
        fv = self.free_vars()
        if not fv:
            return self
        images = {v: subst.get(v, ResourcePoly.var(v)) for v in fv}
        if all(images[v] == ResourcePoly.var(v) for v in fv):
            return self
        out_bounds: dict[str, int] = {}
        for factors, _ in self.terms:
            for v, i in factors:
                for w in images[v].free_vars():
                    out_bounds[w] = out_bounds.get(w, 0) + i * images[v].var_degree_bound(w)

        def fn(eta: Mapping[str, int]) -> int:
            return self.eval({v: images[v].eval(eta) for v in fv})

        coeffs = newton_coeffs(fn, out_bounds)
        return ResourcePoly._from_map(coeffs)

    def bounded_sum(self, var: str, upper: str) -> "ResourcePoly":
        """Sum of this polynomial over var = 0 .. upper-1, via the hockey stick."""
        if upper in self.free_vars():
            raise ResPolyError(f"bounded sum upper variable {upper!r} occurs in summand")
        if var == upper:
            raise ResPolyError("bounded sum variable equals its upper bound")
        acc: dict[Factors, int] = {}
        for factors, coeff in self.terms:
            rest = [(v, i) for v, i in factors if v != var]
            n = next((i for v, i in factors if v == var), 0)
            new = tuple(sorted(rest + [(upper, n + 1)]))
            acc[new] = acc.get(new, 0) + coeff
        return ResourcePoly._from_map(acc)

    # -- operator sugar ----------------------------------------------------

    def __add__(self, other):
        return self.add(other)

    def __mul__(self, other):
        return self.mul(other)

    def __str__(self) -> str:  # pragma: no cover - convenience
        from .syntax import print_poly

        return print_poly(self)


def _binom_pair(var: str, m: int, n: int) -> list[tuple[Factors, int]]:
    """C(x,m) * C(x,n) expanded by the multinomial identity."""
    if m > n:
        m, n = n, m
    out = []
    for k in range(m + 1):
        c = factorial(m + n - k) // (factorial(k) * factorial(m - k) * factorial(n - k))
        out.append((((var, m + n - k),), c))
    return out


def _mono_mul(f1: Factors, f2: Factors, coeff: int) -> list[tuple[Factors, int]]:
    d1, d2 = dict(f1), dict(f2)
    # (factors, coeff) partial products; same-variable pairs expand to polys
    parts: list[tuple[Factors, int]] = [((), coeff)]
    for v in sorted(set(d1) | set(d2)):
        if v in d1 and v in d2:
            expansion = _binom_pair(v, d1[v], d2[v])
        else:
            expansion = [(((v, d1.get(v) or d2[v]),), 1)]
        parts = [
            (tuple(sorted(f + g)), c * e)
            for f, c in parts
            for g, e in expansion
        ]
    return parts


def newton_coeffs(
    fn: Callable[[Mapping[str, int]], int], var_bounds: Mapping[str, int]
) -> dict[Factors, int]:
    """Multivariate forward differences of fn at the origin.

    Returns the coefficient of prod C(v, k_v) for every k below var_bounds
    (inclusive).  Integer-valued fn in the binomial basis is recovered exactly;
    coefficients may be negative for non-resource-polynomial differences.
    """
    vars_ = sorted(var_bounds)
    shape = [var_bounds[v] + 1 for v in vars_]
    table: dict[tuple[int, ...], int] = {}
    for pt in itertools.product(*(range(s) for s in shape)):
        table[pt] = fn(dict(zip(vars_, pt)))
    for ax in range(len(vars_)):
        # classic in-place pass: afterwards the entry with pt[ax] = k holds
        # the k-th forward difference along this axis taken at 0; within a
        # round, positions run top-down so the (k-1)-round values survive
        for k in range(1, shape[ax]):
            for i in range(shape[ax] - 1, k - 1, -1):
                rest_axes = [range(s) for a, s in enumerate(shape) if a != ax]
                for rest in itertools.product(*rest_axes):
                    pt = rest[:ax] + (i,) + rest[ax:]
                    prev = rest[:ax] + (i - 1,) + rest[ax:]
                    table[pt] -= table[prev]
    out: dict[Factors, int] = {}
    for pt, val in table.items():
        if val != 0:
            factors = tuple((v, k) for v, k in zip(vars_, pt) if k >= 1)
            out[factors] = val
    return out


def leq_syntactic(p: ResourcePoly, q: ResourcePoly) -> bool:
    """BLL's syntactic order: q - p is itself a resource polynomial.

    Checked by taking all multivariate forward differences of q - p at the
    origin up to the joint degree bound and testing them for nonnegativity.
    """
    bounds: dict[str, int] = {}
    for v in p.free_vars() | q.free_vars():
        bounds[v] = p.var_degree_bound(v) + q.var_degree_bound(v)

    def diff(eta: Mapping[str, int]) -> int:
        return q.eval(eta) - p.eval(eta)

    return all(c >= 0 for c in newton_coeffs(diff, bounds).values())


def sum_polys(polys: Iterable[ResourcePoly]) -> ResourcePoly:
    acc = ResourcePoly.zero()
    for p in polys:
        acc = acc.add(p)
    return acc

"""Untyped lambda terms, affine-linearity, normalization, Scott encodings.

Terms are immutable-by-convention trees (possibly with shared subterms, so
really DAGs); every node caches its size and its free-variable count map.
Normalization is a closure machine running normal-order reduction with an
exact beta-step count and an incrementally tracked materialized size, so the
affine bounds (steps < |t|, every intermediate reduct no larger than |t|) can
be asserted rather than assumed.  Readback renames binders to de-Bruijn-level
names, so normal forms of alpha-equivalent terms compare structurally equal.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass

from .config import DEFAULT, Config

# deep terms show up routinely (case trees, long spines); plain recursion is
# fine once the interpreter limit is out of the way
sys.setrecursionlimit(max(sys.getrecursionlimit(), 200_000))


class LamError(Exception):
    pass


class FuelExhausted(LamError):
    pass


class Var:
    __slots__ = ("name", "size", "_fvc")

    def __init__(self, name: str):
        self.name = name
        self.size = 1
        self._fvc = None


class Abs:
    __slots__ = ("var", "body", "size", "_fvc")

    def __init__(self, var: str, body: "Term"):
        self.var = var
        self.body = body
        self.size = body.size + 1
        self._fvc = None


class App:
    __slots__ = ("fn", "arg", "size", "_fvc")

    def __init__(self, fn: "Term", arg: "Term"):
        self.fn = fn
        self.arg = arg
        self.size = fn.size + arg.size + 1
        self._fvc = None


Term = Var | Abs | App

_gensym = itertools.count()


def fresh(prefix: str = "g") -> str:
    return f"{prefix}{next(_gensym)}"


def v(name: str) -> Var:
    return Var(name)


def ab(var: str, body: Term) -> Abs:
    return Abs(var, body)


def absn(names, body: Term) -> Term:
    for n in reversed(list(names)):
        body = Abs(n, body)
    return body


def ap(fn: Term, *args: Term) -> Term:
    for a in args:
        fn = App(fn, a)
    return fn


def fvc(t: Term) -> dict[str, int]:
    """Free-variable occurrence counts (virtual-tree semantics), cached."""
    got = t._fvc
    if got is not None:
        return got
    if isinstance(t, Var):
        out = {t.name: 1}
    elif isinstance(t, Abs):
        inner = fvc(t.body)
        if t.var in inner:
            out = dict(inner)
            del out[t.var]
        else:
            out = inner
    else:
        left, right = fvc(t.fn), fvc(t.arg)
        if not left:
            out = right
        elif not right:
            out = left
        else:
            out = dict(left)
            for k, n in right.items():
                out[k] = out.get(k, 0) + n
    t._fvc = out
    return out


def free_var_counts(t: Term) -> dict[str, int]:
    return dict(fvc(t))


def term_key(t: Term, depth: int = 0, env=None) -> tuple:
    """Alpha-canonical structural key (bound names replaced by levels)."""
    if env is None:
        env = {}
    if isinstance(t, Var):
        return ("v", env.get(t.name, t.name))
    if isinstance(t, Abs):
        env2 = dict(env)
        env2[t.var] = depth
        return ("l", term_key(t.body, depth + 1, env2))
    return ("a", term_key(t.fn, depth, env), term_key(t.arg, depth, env))


def alpha_eq_term(a: Term, b: Term) -> bool:
    return term_key(a) == term_key(b)


def is_affine(t: Term) -> bool:
    """Every variable, free or bound, occurs at most once (up to alpha).

    Shared subterms are closed realizer pieces; the check visits each
    physical node once and uses virtual occurrence counts.
    """
    if any(n > 1 for n in fvc(t).values()):
        return False
    seen: set[int] = set()
    stack = [t]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Abs):
            if fvc(node.body).get(node.var, 0) > 1:
                return False
            stack.append(node.body)
        elif isinstance(node, App):
            stack.append(node.fn)
            stack.append(node.arg)
    return True


# -- tensor sugar ------------------------------------------------------------


def tensor(parts: list[Term]) -> Term:
    k = fresh("k")
    return ab(k, ap(v(k), *parts))


def lam_tensor(names: list[str], body: Term) -> Term:
    u = fresh("u")
    return ab(u, ap(v(u), absn(names, body)))


# -- Scott encodings ----------------------------------------------------------


def word_of(value) -> tuple[int, ...]:
    """Normalize a word: ints are unary words, tuples list constructor indices
    outermost first (word c1(c2(eps)) is (1, 2))."""
    if isinstance(value, int):
        if value < 0:
            raise LamError("negative natural")
        return (1,) * value
    return tuple(value)


def scott_encode(w: int, value) -> Term:
    word = word_of(value)
    for i in word:
        if not 1 <= i <= w:
            raise LamError(f"constructor {i} outside algebra of width {w}")
    t: Term = absn([f"x{i}" for i in range(1, w + 1)] + ["y"], v("y"))
    for i in reversed(word):
        t = absn(
            [f"x{j}" for j in range(1, w + 1)] + ["y"],
            ap(v(f"x{i}"), t),
        )
    return t


def scott_decode(w: int, t: Term):
    """Inverse of scott_encode on normal forms; raises LamError off-shape."""
    word = []
    while True:
        binders = []
        body = t
        for _ in range(w + 1):
            if not isinstance(body, Abs):
                raise LamError("term is not a Scott word: missing binders")
            binders.append(body.var)
            body = body.body
        if isinstance(body, Var):
            if body.name != binders[-1]:
                raise LamError("term is not a Scott word: bad zero case")
            return tuple(word) if w > 1 else len(word)
        if (
            isinstance(body, App)
            and isinstance(body.fn, Var)
            and body.fn.name in binders[:-1]
        ):
            word.append(binders.index(body.fn.name) + 1)
            t = body.arg
            continue
        raise LamError("term is not a Scott word: bad constructor case")


def scott_succ(w: int, i: int) -> Term:
    """Closed term prepending constructor i to a Scott word."""
    m = fresh("m")
    names = [fresh("s") for _ in range(w)] + [fresh("z")]
    return ab(m, absn(names, ap(v(names[i - 1]), v(m))))


# -- normalization machine -----------------------------------------------------


class _Frame:
    __slots__ = ("name", "value", "parent")

    def __init__(self, name, value, parent):
        self.name = name
        self.value = value
        self.parent = parent


def _lookup(env, name):
    while env is not None:
        if env.name == name:
            return env.value
        env = env.parent
    return None


class _FreeMark:
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name


class _Closure:
    __slots__ = ("term", "env", "msize")

    def __init__(self, term, env):
        self.term = term
        self.env = env
        self.msize = None


@dataclass
class NormResult:
    term: Term
    steps: int
    initial_size: int
    max_size: int

    @property
    def size_bound_ok(self) -> bool:
        return self.max_size <= self.initial_size


class _Machine:
    def __init__(self, fuel: int):
        self.fuel = fuel
        self.steps = 0
        self.cur_size = 0
        self.max_size = 0

    def msize(self, cl) -> int:
        if isinstance(cl, _FreeMark):
            return 1
        if cl.msize is None:
            total = cl.term.size
            for name, count in fvc(cl.term).items():
                val = _lookup(cl.env, name)
                if val is not None and not isinstance(val, _FreeMark):
                    total += count * (self.msize(val) - 1)
            cl.msize = total
        return cl.msize

    def whnf(self, cl: _Closure):
        """Returns ('abs', var, body, env) or ('neutral', name, spine)."""
        term, env = cl.term, cl.env
        stack: list[_Closure] = []
        while True:
            if isinstance(term, App):
                stack.append(_Closure(term.arg, env))
                term = term.fn
            elif isinstance(term, Var):
                val = _lookup(env, term.name)
                if val is None:
                    return ("neutral", term.name, stack)
                if isinstance(val, _FreeMark):
                    return ("neutral", val.name, stack)
                term, env = val.term, val.env
            else:  # Abs
                if not stack:
                    return ("abs", term.var, term.body, env)
                arg = stack.pop()
                self.steps += 1
                if self.steps > self.fuel:
                    raise FuelExhausted(f"no normal form within {self.fuel} beta steps")
                cnt = fvc(term.body).get(term.var, 0)
                if cnt == 1:
                    self.cur_size -= 3
                else:
                    self.cur_size += (cnt - 1) * self.msize(arg) - cnt - 2
                if self.cur_size > self.max_size:
                    self.max_size = self.cur_size
                env = _Frame(term.var, arg, env)
                term = term.body

    def reify(self, cl: _Closure, depth: int) -> Term:
        kind, *rest = self.whnf(cl)
        if kind == "abs":
            var, body, env = rest
            name = f"u{depth}"
            inner = _Frame(var, _FreeMark(name), env)
            return ab(name, self.reify(_Closure(body, inner), depth + 1))
        name, spine = rest
        out: Term = v(name)
        for c in reversed(spine):  # spine was pushed outermost-first
            out = ap(out, self.reify(c, depth))
        return out


def normalize(t: Term, cfg: Config = DEFAULT, fuel: int | None = None) -> NormResult:
    machine = _Machine(fuel if fuel is not None else cfg.fuel)
    machine.cur_size = machine.max_size = t.size
    nf = machine.reify(_Closure(t, None), 0)
    return NormResult(nf, machine.steps, t.size, machine.max_size)

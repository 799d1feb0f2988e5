"""Regenerate the text corpus under corpus/ from the proof builders.

Each file carries a header comment naming the construction it exercises.
Run from the repository root: python scripts/gen_corpus.py
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from qbal.builders import (
    axiom,
    cut,
    dup_proof,
    iter_proof,
    llolli,
    lforallx,
    rforallx,
    rlolli,
    rexistsx,
    lexistsx,
    succ_proof,
    word_proof,
    zero_proof,
)
from qbal.constraint import Constraint, ConstraintSet as CS, Entailer
from qbal.formula import Atom, ExistsRes, ForallRes, Lolli, nat_formula, word_formula
from qbal.kernel import Proof, Judgement, check
from qbal.respoly import ResourcePoly as RP
from qbal.syntax import print_proof
from qbal.transform import strengthen, subst_vars

ROOT = pathlib.Path(__file__).resolve().parent.parent / "corpus"
E = Entailer()


def emit(name: str, header: str, text: str) -> None:
    path = ROOT / name
    path.write_text(f"# {header}\n{text}\n")
    print("wrote", path)


def cut_reduct_demo() -> Proof:
    # a successor computed through a bounded universal quantifier, so the
    # root is a cut between a forall introduction and its elimination
    x = RP.var("x")
    one = RP.const(1)
    zv = "z"
    base = succ_proof(1, 1)
    inner = subst_vars(base, {"x": x + RP.var(zv)})
    inner = strengthen(inner, CS.of([Constraint(RP.var(zv), one)]))
    inner = rlolli(inner, 0)
    quant = ForallRes((zv,), CS.of([Constraint(RP.var(zv), one)]), (one,),
                      Lolli(word_formula(1, x + RP.var(zv)),
                            word_formula(1, x + RP.var(zv) + one)))
    left = rforallx(inner, CS.empty(), quant, (zv,))
    app = llolli(axiom(CS.empty(), word_formula(1, x + RP.zero())),
                 axiom(CS.empty(), word_formula(1, x + RP.zero() + one),
                       word_formula(1, x + one)),
                 b_at=0, at=1)
    right = lforallx(app, at=1, quant=quant, witnesses=(RP.zero(),))
    return cut(left, right, cut_at=1)


def unat_construction() -> Proof:
    # the unsound unbounded-quantifier construction; rejected at
    # well-formedness because the existential carries no derivable bound
    x = RP.var("x")
    unat = ExistsRes(("u",), CS.empty(), (None,), nat_formula(RP.var("u")))
    two_steps = cut(succ_proof(1, 1),
                    subst_vars(succ_proof(1, 1), {"x": x + RP.const(1)}), 0)
    packed = rexistsx(two_steps, unat, (x + RP.const(2),))
    return lexistsx(packed, at=0, quant=unat, actual=("x",), cset=CS.empty())


def main() -> None:
    ROOT.mkdir(exist_ok=True)

    it = iter_proof(1, Atom("al", (RP.var("x"),)), "x", RP.const(3))
    check(it, E)
    emit("iter_nat3.qbal", "iteration over unary numerals, length bound 3",
         print_proof(it))

    s = succ_proof(1, 1)
    check(s, E)
    emit("nat_succ.qbal", "successor on unary numerals", print_proof(s))

    n3 = word_proof(1, 3)
    check(n3, E)
    emit("numeral3.qbal", "the numeral three as a closed proof", print_proof(n3))

    z = zero_proof(2)
    check(z, E)
    emit("word2_zero.qbal", "empty word of the binary algebra", print_proof(z))

    d1 = dup_proof(1)
    check(d1, E)
    emit("dup1.qbal", "duplication of unary numerals", print_proof(d1))

    d2 = dup_proof(2)
    check(d2, E)
    emit("dup2.qbal", "duplication of binary words", print_proof(d2))

    red = cut_reduct_demo()
    check(red, E)
    emit("cut_quantifier.qbal", "cut against a bounded universal, reducible",
         print_proof(red))

    emit("unat_exp.qbal", "unbounded quantification; must be rejected",
         print_proof(unat_construction()))

    emit("rrw_id.rrw", "identity at one tier", "id : (W@0) -> W@0")
    emit("rrw_add.rrw", "addition by recursion on the higher-tier argument",
         "rec(comp(cons(1) : (W@0) -> W@0; proj(2, 3)); id) : (W@0, W@1) -> W@0")
    emit("rrw_mul.rrw", "multiplication iterating addition",
         "rec(comp(rec(comp(cons(1) : (W@0) -> W@0; proj(2, 3)); id) : (W@0, W@1) -> W@0;"
         " proj(2, 3), proj(1, 3));"
         " comp(zero : () -> W@0)) : (W@1, W@1) -> W@0")
    emit("rrw_pred.rrw", "predecessor; conditional with scrutinee at the result tier",
         "cond(id; zero) : (W@0) -> W@0")
    emit("rrw_iszero.rrw", "zero test; conditional scrutinee above the result tier",
         "cond(comp(zero : () -> W@0); comp(cons(1) : (W@0) -> W@0; zero : () -> W@0))"
         " : (W@1) -> W@0")
    emit("rrw_sign.rrw", "sign; conditional scrutinee below the result tier",
         "cond(comp(cons(1) : (W@1) -> W@1; comp(zero : () -> W@1)); zero) : (W@0) -> W@1")
    emit("rrw_copy2.rrw", "structural copy over the binary algebra",
         "rec(comp(cons(1) : (W@0) -> W@0; proj(1, 2)),"
         " comp(cons(2) : (W@0) -> W@0; proj(1, 2)); zero) : (W@1) -> W@0")

    emit("lfpl_succ.lfpl", "the successor rule", "(s)")
    emit("lfpl_id.lfpl", "identity on numerals", '(ilolli (ax "nat"))')
    emit("lfpl_add.lfpl", "addition as iterated successor",
         '(t\n  (ilolli (ilolli (elolli (ilolli (s))'
         ' (elolli (ax "nat -o nat") (ax "nat")))))\n  (ilolli (ax "nat")))')

    emit("sample.rpoly", "polynomial grammar sample", "2*C(x,2)*y + x + 3")
    emit("sample.cset", "constraint grammar sample", "{x <= y + 1, z < 3}")
    emit("sample.qf", "formula grammar sample",
         "forall a. !{y < x} (a(y) -o a(1 + y)) -o a(0) -o a(x)")


if __name__ == "__main__":
    main()

"""Command-line surface: parse, check, transform, compile, extract and run.

Exit codes: 0 success, 1 check/verdict failure, 2 parse error.  Every report
echoes the numeric flags so runs are reproducible; --format json emits the
same report as a machine-readable document.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import Config
from .constraint import Entailer
from .formula import SkeletonMismatch, WellFormedError
from .kernel import CheckError, Checker, SkeletonProof, forget
from .realize import RealizeError, extract_realizer, run, run_valuation
from .syntax import (
    ParseError,
    parse_cset,
    parse_formula,
    parse_lfpl,
    parse_poly,
    parse_proof,
    parse_rrw,
    print_judgement,
    print_poly,
    print_proof,
    print_term,
)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qbal", description=__doc__)
    ap.add_argument("--format", choices=("text", "json"), default="text")
    ap.add_argument("--brute-bound", type=int, default=8)
    ap.add_argument("--prover-depth", type=int, default=3)
    ap.add_argument("--fuel", type=int, default=1_000_000)
    ap.add_argument("--ext-test-size", type=int, default=4)
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="check proof files")
    c.add_argument("files", nargs="+")

    po = sub.add_parser("poly", help="normalize a resource polynomial")
    po.add_argument("expr")
    po.add_argument("--eval", dest="valuation", default=None,
                    help="comma-separated bindings, e.g. x=2,y=3")

    en = sub.add_parser("entail", help="decide entailment between constraint sets")
    en.add_argument("hypotheses")
    en.add_argument("goals")

    lq = sub.add_parser("leq", help="compare two formulas under a constraint set")
    lq.add_argument("cset")
    lq.add_argument("left")
    lq.add_argument("right")

    cl = sub.add_parser("compile-lfpl", help="compile an LFPL derivation file")
    cl.add_argument("file")
    cl.add_argument("-o", "--output", default=None)

    cr = sub.add_parser("compile-rrw", help="compile a ramified-recurrence file")
    cr.add_argument("file")
    cr.add_argument("-o", "--output", default=None)
    cr.add_argument("--width", type=int, default=1, help="word algebra constructors")

    rn = sub.add_parser("run", help="execute a data-typed proof or program")
    rn.add_argument("file")
    rn.add_argument("inputs", nargs="*")
    rn.add_argument("--width", type=int, default=1)
    rn.add_argument("--path", choices=("denote", "realize", "both"), default="denote")

    ex = sub.add_parser("extract", help="print the realizer term at a valuation")
    ex.add_argument("file")
    ex.add_argument("--at", dest="valuation", default="",
                    help="comma-separated bindings, e.g. x=3")

    fg = sub.add_parser("forget", help="print the forgotten skeleton tree")
    fg.add_argument("file")
    return ap


def _parse_valuation(text: str) -> dict[str, int]:
    out: dict[str, int] = {}
    if not text:
        return out
    for item in text.split(","):
        name, _, value = item.partition("=")
        out[name.strip()] = int(value)
    return out


def _parse_input(text: str):
    if "," in text:
        return tuple(int(c) for c in text.split(","))
    return int(text)


def _emit(report: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(report, sort_keys=True))
        return
    for key, value in report.items():
        if key == "flags":
            continue
        print(f"{key}: {value}")


def _read(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _load_proof(path: str, width: int, engine: Entailer):
    if path.endswith(".rrw"):
        from .frontends.rrw import compile_rrw

        return compile_rrw(parse_rrw(_read(path)), width, engine)
    if path.endswith(".lfpl"):
        from .frontends.lfpl import compile_lfpl

        return compile_lfpl(parse_lfpl(_read(path)), engine)
    return parse_proof(_read(path))


def _skeleton_lines(sk: SkeletonProof, indent: int = 0) -> list[str]:
    pad = "  " * indent
    out = [f"{pad}{sk.rule}{list(sk.params) if sk.params else ''}"]
    for p in sk.premises:
        out.extend(_skeleton_lines(p, indent + 1))
    return out


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = Config(brute_bound=args.brute_bound, prover_depth=args.prover_depth,
                 fuel=args.fuel, ext_test_size=args.ext_test_size)
    engine = Entailer(cfg)
    flags = {"brute_bound": cfg.brute_bound, "prover_depth": cfg.prover_depth,
             "fuel": cfg.fuel, "ext_test_size": cfg.ext_test_size}
    report: dict = {"command": args.command, "flags": flags}
    fmt = args.format

    try:
        if args.command == "check":
            checker = Checker(engine, cfg)
            results = []
            failed = False
            for path in args.files:
                try:
                    j = checker.check(parse_proof(_read(path)))
                    results.append({"file": path, "ok": True,
                                    "judgement": print_judgement(j)})
                except (CheckError, WellFormedError) as e:
                    failed = True
                    results.append({"file": path, "ok": False, "error": str(e)})
            report["results"] = results
            if fmt == "text":
                for r in results:
                    if r["ok"]:
                        print(f"ok {r['file']}: {r['judgement']}")
                    else:
                        print(f"FAIL {r['file']}: {r['error']}")
                print(f"flags: {flags}")
            else:
                _emit(report, fmt)
            return 1 if failed else 0

        if args.command == "poly":
            poly = parse_poly(args.expr)
            report["normal_form"] = print_poly(poly)
            if args.valuation is not None:
                report["value"] = poly.eval(_parse_valuation(args.valuation))
            report["flags_echo"] = str(flags)
            _emit(report, fmt)
            return 0

        if args.command == "entail":
            cs = parse_cset(args.hypotheses)
            goals = parse_cset(args.goals)
            verdict = engine.entails(cs, goals)
            report["verdict"] = verdict.kind
            if verdict.counterexample is not None:
                report["counterexample"] = verdict.counterexample
            report["flags_echo"] = str(flags)
            _emit(report, fmt)
            return 0 if verdict.is_valid else 1

        if args.command == "leq":
            from .formula import leq_formula

            cs = parse_cset(args.cset)
            left = parse_formula(args.left)
            right = parse_formula(args.right)
            try:
                verdict = leq_formula(cs, left, right, engine)
            except SkeletonMismatch as e:
                report["verdict"] = "skeleton-mismatch"
                report["detail"] = str(e)
                _emit(report, fmt)
                return 1
            report["verdict"] = verdict.kind
            if verdict.counterexample is not None:
                report["counterexample"] = verdict.counterexample
            report["flags_echo"] = str(flags)
            _emit(report, fmt)
            return 0 if verdict.is_valid else 1

        if args.command in ("compile-lfpl", "compile-rrw"):
            if args.command == "compile-lfpl":
                from .frontends.lfpl import compile_lfpl

                proof = compile_lfpl(parse_lfpl(_read(args.file)), engine)
            else:
                from .frontends.rrw import compile_rrw

                proof = compile_rrw(parse_rrw(_read(args.file)), args.width, engine)
            Checker(engine, cfg).check(proof)
            report["judgement"] = print_judgement(proof.claimed)
            report["nodes"] = proof.size()
            text = print_proof(proof)
            if args.output:
                with open(args.output, "w") as fh:
                    fh.write(text + "\n")
                report["written"] = args.output
            _emit(report, fmt)
            return 0

        if args.command == "run":
            width = args.width
            proof = _load_proof(args.file, width, engine)
            Checker(engine, cfg).check(proof)
            inputs = [_parse_input(t) for t in args.inputs]
            value = run(proof, inputs, path=args.path, engine=engine, cfg=cfg)
            report["judgement"] = print_judgement(proof.claimed)
            report["path"] = args.path
            report["result"] = list(value) if isinstance(value, tuple) else value
            _emit(report, fmt)
            return 0

        if args.command == "extract":
            proof = _load_proof(args.file, 1, engine)
            Checker(engine, cfg).check(proof)
            eta = _parse_valuation(args.valuation)
            if not eta:
                eta = run_valuation(proof, []) if not proof.claimed.context else {}
            witness = extract_realizer(proof, engine)
            term = witness.term(eta)
            report["valuation"] = eta
            report["term"] = print_term(term)
            _emit(report, fmt)
            return 0

        if args.command == "forget":
            proof = _load_proof(args.file, 1, engine)
            Checker(engine, cfg).check(proof)
            sk = forget(proof)
            report["nodes"] = sk.size()
            report["tree"] = "\n".join(_skeleton_lines(sk))
            if fmt == "text":
                print("\n".join(_skeleton_lines(sk)))
                print(f"nodes: {sk.size()}")
                print(f"flags: {flags}")
            else:
                _emit(report, fmt)
            return 0

        raise AssertionError(args.command)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return 2
    except (CheckError, WellFormedError, RealizeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

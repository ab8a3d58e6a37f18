"""Command-line front end: reduce, betti, decide, brute, verify.

Every run writes a JSON report with a fixed schema (tool version, config
echo, result, wall-clock timing); reports are byte-stable for identical
inputs apart from the timing section.  Exit codes: 0 success/True,
1 False, 2 Unknown or non-converged, 3 usage error, 4 internal error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction

from . import __version__
from .betti import BettiEstimate
from .brute import Decision, brute_decide
from .cubical import poincare_cubical
from .fixtures import SUITES
from .formula import Formula, FormulaError
from .oracles import OracleConfig, make_oracle
from .reducer import ReduceOptions, decide, reduce_sentence, size_report
from .sampled import poincare_sampled
from .sexpr import FormulaSyntaxError, parse_formula, print_formula

EXIT_TRUE = 0
EXIT_FALSE = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 3
EXIT_INTERNAL = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spherec",
        description="Compile quantified sphere formulas and decide them by Betti numbers")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True):
        if needs_input:
            p.add_argument("--input", required=True, help="formula source file")
        p.add_argument("--out", default=None, help="report file (default: stdout)")
        p.add_argument("--oracle", default="auto", choices=["cubical", "sampled", "auto"])
        p.add_argument("--resolution", type=int, default=32)
        p.add_argument("--samples", type=int, default=2000)
        p.add_argument("--radius", type=float, default=None)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--margin", type=float, default=0.05)
        p.add_argument("--join-param", default="m_plus_1", choices=["m_plus_1", "paper_m"])

    common(sub.add_parser("reduce", help="compile to a quantifier-free formula plus chain"))
    common(sub.add_parser("betti", help="Betti numbers of a quantifier-free formula"))
    common(sub.add_parser("decide", help="decide a sentence through the compiled pipeline"))
    common(sub.add_parser("brute", help="decide a sentence by grid evaluation"))
    verify = sub.add_parser("verify", help="run a verification suite")
    common(verify, needs_input=False)
    verify.add_argument("--suite", required=True,
                        choices=sorted(SUITES) + ["all"])
    return parser


def _config_echo(args) -> dict:
    keys = ["command", "input", "out", "oracle", "resolution", "samples",
            "radius", "seed", "margin", "join_param", "suite"]
    cfg = {k: getattr(args, k, None) for k in keys}
    cfg["threads"] = os.environ.get("TODA_REDUCE_THREADS", "1")
    return cfg


def _write_report(args, payload: dict, started: float) -> None:
    report = {
        "tool": "spherec",
        "version": __version__,
        "config": _config_echo(args),
        "result": payload,
        "timing": {"wall_s": round(time.time() - started, 3)},
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(args) -> Formula:
    with open(args.input, "r", encoding="utf-8") as fh:
        return parse_formula(fh.read())


def _oracle_config(args) -> OracleConfig:
    return OracleConfig(samples=args.samples, seed=args.seed, radius=args.radius,
                        resolution=args.resolution)


def _param_point(artifact):
    block = artifact.param_block
    return tuple([Fraction(1)] + [Fraction(0)] * block.sphere_dim)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.time()
    try:
        return _dispatch(args, started)
    except (FormulaSyntaxError, FormulaError, ValueError) as exc:
        _write_report(args, {"error": str(exc), "kind": "usage"}, started)
        return EXIT_USAGE
    except OSError as exc:
        _write_report(args, {"error": str(exc), "kind": "io"}, started)
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover - defensive
        _write_report(args, {"error": repr(exc), "kind": "internal"}, started)
        return EXIT_INTERNAL


def _dispatch(args, started: float) -> int:
    options = ReduceOptions(join_param_policy=args.join_param) if hasattr(args, "join_param") \
        else ReduceOptions()

    if args.command == "reduce":
        artifact = reduce_sentence(_load(args), options)
        payload = artifact.to_report()
        payload["size"] = size_report(artifact).to_dict()
        _write_report(args, payload, started)
        return EXIT_TRUE

    if args.command == "betti":
        f = _load(args)
        if not f.is_quantifier_free():
            raise FormulaError("betti requires a quantifier-free formula")
        total = f.n_free_coords()
        if args.oracle == "cubical" or (args.oracle == "auto" and total <= 3):
            est = poincare_cubical(f, [(-2.0, 2.0)], args.resolution)
        else:
            est = poincare_sampled(f, n_samples=args.samples, radius=args.radius,
                                   seed=args.seed, need_b1=True)
        _write_report(args, _estimate_payload(est), started)
        return EXIT_TRUE if est.converged else EXIT_UNKNOWN

    if args.command == "decide":
        artifact = reduce_sentence(_load(args), options)
        oracle = make_oracle(args.oracle, _oracle_config(args))
        report = decide(artifact, _param_point(artifact), oracle)
        payload = report.to_dict()
        payload["theta"] = print_formula(artifact.theta)
        _write_report(args, payload, started)
        return {Decision.TRUE: EXIT_TRUE, Decision.FALSE: EXIT_FALSE,
                Decision.UNKNOWN: EXIT_UNKNOWN}[report.decision]

    if args.command == "brute":
        result = brute_decide(_load(args), delta=args.margin)
        _write_report(args, {"truth": result.value}, started)
        return {Decision.TRUE: EXIT_TRUE, Decision.FALSE: EXIT_FALSE,
                Decision.UNKNOWN: EXIT_UNKNOWN}[result]

    if args.command == "verify":
        names = sorted(SUITES) if args.suite == "all" else [args.suite]
        all_cases = {}
        ok = True
        for name in names:
            cases = SUITES[name]()
            all_cases[name] = cases
            ok = ok and all(c["pass"] for c in cases)
        payload = {
            "suites": all_cases,
            "passed": sum(c["pass"] for cs in all_cases.values() for c in cs),
            "total": sum(len(cs) for cs in all_cases.values()),
        }
        _write_report(args, payload, started)
        return EXIT_TRUE if ok else EXIT_FALSE

    raise FormulaError(f"unknown command {args.command!r}")


def _estimate_payload(est: BettiEstimate) -> dict:
    return {
        "betti": {str(k): v for k, v in sorted(est.betti.items())},
        "converged": est.converged,
        "diagnostics": _jsonable(est.diagnostics),
    }


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, int, float, str)) or value is None:
        return value
    return str(value)


if __name__ == "__main__":
    sys.exit(main())

"""Command line interface.

Subcommands: ``algebra``, ``loop``, ``grading``, ``normalize``,
``classify``, ``selfcheck``.  Reports are JSON (schema "loopgrad/1"),
written to --output or stdout.  Exit codes: 0 success, 2 structured
mathematical rejection (the report names the violated condition), 1 I/O or
numerical failure.  LOOPGRAD_TOL provides the default tolerance.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import classify as classify_mod
from . import gradation, lie_core, loop_algebra, normalizer, selfcheck
from . import serialization as ser
from .errors import LoopgradError, MathematicalRejection, NumericalFailure

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_REJECTION = 2


def _default_tol():
    raw = os.environ.get("LOOPGRAD_TOL")
    if raw is None:
        return 1e-9
    try:
        value = float(raw)
    except ValueError:
        raise MathematicalRejection(
            f"LOOPGRAD_TOL={raw!r} is not a number")
    if value <= 0:
        raise MathematicalRejection("LOOPGRAD_TOL must be positive")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="loopgrad",
        description="Twisted loop Lie algebras: gradations, normalization "
                    "to standard form, finite-order classification.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--input", action="append", default=[],
                       help="input JSON file (repeatable where two "
                            "operands are needed)")
        p.add_argument("--output", help="output JSON path (default stdout)")
        p.add_argument("--tol", type=float, default=None,
                       help="tolerance (default LOOPGRAD_TOL or 1e-9)")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("algebra", help="build and validate an algebra")
    common(p)
    p.add_argument("--algebra", required=True, help="label, e.g. A2")

    p = sub.add_parser("loop", help="loop-element operations")
    common(p)
    p.add_argument("action", choices=("validate", "bracket", "evaluate",
                                      "seminorm"))
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--order", type=int, default=1,
                   help="seminorm derivative depth m")

    p = sub.add_parser("grading", help="grading-operator operations")
    common(p)
    p.add_argument("action", choices=("verify", "apply"))
    p.add_argument("--window", type=int, default=4)

    p = sub.add_parser("normalize", help="normalize to standard form")
    common(p)
    p.add_argument("--steps", type=int, default=normalizer.DEFAULT_STEPS)
    p.add_argument("--window", type=int, default=None)

    p = sub.add_parser("classify", help="enumerate finite-order classes")
    common(p)
    p.add_argument("--algebra", required=True)
    p.add_argument("--order", type=int, required=True, help="class order K")
    p.add_argument("--twist", type=int, default=1, choices=(1, 2),
                   help="diagram twist order r")

    p = sub.add_parser("selfcheck", help="run the invariant battery")
    common(p)
    return parser


def _emit(report, args):
    text = ser.dump(report, args.output)
    if args.output is None:
        sys.stdout.write(text)
    return EXIT_OK


def _need_inputs(args, n):
    if len(args.input) != n:
        raise MathematicalRejection(
            f"this action needs exactly {n} --input file(s), "
            f"got {len(args.input)}")
    return [ser.load(p) for p in args.input]


def cmd_algebra(args, tol):
    alg = lie_core.build_algebra(args.algebra)
    report = ser.algebra_to_json(alg)
    report["jacobi_residual"] = lie_core.jacobi_residual(alg)
    return _emit(report, args)


def cmd_loop(args, tol):
    if args.action == "bracket":
        d1, d2 = _need_inputs(args, 2)
        xi = ser.loop_element_from_json(d1, tol=tol)
        eta = ser.loop_element_from_json(d2, tol=tol)
        return _emit(ser.loop_element_to_json(
            loop_algebra.loop_bracket(xi, eta)), args)
    (data,) = _need_inputs(args, 1)
    xi = ser.loop_element_from_json(data, tol=tol)
    if args.action == "validate":
        report = {"schema": ser.SCHEMA, "kind": "loop_validation",
                  "ok": True, "modes": xi.support(),
                  "max_mode": xi.max_mode()}
        return _emit(report, args)
    if args.action == "evaluate":
        value = loop_algebra.evaluate(xi, args.sigma)
        return _emit(ser.element_to_json(value), args)
    est, bound = loop_algebra.seminorm_with_bound(xi, args.order)
    report = {"schema": ser.SCHEMA, "kind": "seminorm",
              "order": args.order, "estimate": est,
              "certified_upper_bound": bound}
    return _emit(report, args)


def cmd_grading(args, tol):
    (data,) = _need_inputs(args, 1)
    Q = ser.grading_operator_from_json(data, tol=tol)
    if args.action == "verify":
        table = gradation.grading_subspaces(Q, args.window,
                                            tol=max(tol, 1e-9))
        return _emit(ser.gradation_table_to_json(table), args)
    eta = Q.eta
    out = gradation.apply_grading_operator(Q, eta)
    return _emit(ser.loop_element_to_json(out), args)


def cmd_normalize(args, tol):
    (data,) = _need_inputs(args, 1)
    Q = ser.grading_operator_from_json(data, tol=max(tol, 1e-9))
    result = normalizer.normalize(Q, tol=max(tol, 1e-9),
                                  steps=args.steps, window=args.window)
    return _emit(ser.normalization_to_json(result), args)


def cmd_classify(args, tol):
    alg = lie_core.build_algebra(args.algebra)
    report = classify_mod.classification_report(alg, args.order,
                                                r=args.twist)
    code = _emit(ser.classification_to_json(report), args)
    stream = sys.stdout if args.output is not None else sys.stderr
    stream.write(report.table() + "\n")
    return code


def cmd_selfcheck(args, tol):
    report = selfcheck.run_selfcheck(seed=args.seed)
    code = _emit(report, args)
    if not report["ok"]:
        return EXIT_FAILURE
    return code


_COMMANDS = {
    "algebra": cmd_algebra,
    "loop": cmd_loop,
    "grading": cmd_grading,
    "normalize": cmd_normalize,
    "classify": cmd_classify,
    "selfcheck": cmd_selfcheck,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tol = args.tol if args.tol is not None else _default_tol()
        np.random.seed(args.seed % 2 ** 31)
        return _COMMANDS[args.command](args, tol)
    except MathematicalRejection as err:
        _report_error(err, args, EXIT_REJECTION)
        return EXIT_REJECTION
    except NumericalFailure as err:
        _report_error(err, args, EXIT_FAILURE)
        return EXIT_FAILURE
    except LoopgradError as err:
        _report_error(err, args, EXIT_FAILURE)
        return EXIT_FAILURE
    except OSError as err:
        sys.stderr.write(f"io error: {err}\n")
        return EXIT_FAILURE


def _report_error(err, args, code):
    report = {
        "schema": ser.SCHEMA,
        "kind": "rejection" if code == EXIT_REJECTION else "failure",
        "error": type(err).__name__,
        "condition": getattr(err, "condition", "error"),
        "detail": str(err),
    }
    try:
        text = ser.dump(report, args.output)
        if args.output is None:
            sys.stdout.write(text)
    except OSError:
        sys.stderr.write(f"{report['error']}: {report['detail']}\n")


if __name__ == "__main__":
    sys.exit(main())

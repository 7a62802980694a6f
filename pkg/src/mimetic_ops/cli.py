"""Command line driver.

Exit status: 0 when every check holds (for ``counterexample``: when the
violation is observed and matches its target), 1 when a check fails, 2 on
usage errors. Reports are JSON; ``converge`` writes CSV by default.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from mimetic_ops import checks, suites
from mimetic_ops.errors import MimeticError
from mimetic_ops.operators import DiffOp

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# {{{ helpers


def _int_list(text: str) -> List[int]:
    try:
        values = [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty size list")
    return values


def _u64(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer: {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 bits: {text!r}")
    return value


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _numpy_default(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _json(report: Dict[str, Any]) -> str:
    return json.dumps(report, indent=2, default=_numpy_default) + "\n"


def _sizes(args: argparse.Namespace, default: Sequence[int]) -> List[int]:
    return args.n if args.n is not None else list(default)


# }}}


# {{{ test functions for convergence studies

# name -> (u, u', u'')
TEST_FUNCTIONS: Dict[str, Tuple[Callable, Callable, Callable]] = {
    "sin": (np.sin, np.cos, lambda x: -np.sin(x)),
    "cos": (np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)),
    "exp": (np.exp, np.exp, np.exp),
}


def _reference(op_name: str, test: str) -> Callable[[np.ndarray], np.ndarray]:
    _, du, d2u = TEST_FUNCTIONS[test]
    if op_name in ("d2-varcoef", "d2-nonmimetic"):
        # (eps u')' with eps = 2 + sin x
        return lambda x: np.cos(x) * du(x) + suites.default_eps(x) * d2u(x)
    if op_name in suites.SECOND_DERIVATIVE_OPS:
        return d2u
    return du


# }}}


# {{{ subcommands


def cmd_verify(args: argparse.Namespace) -> Tuple[Dict[str, Any], bool]:
    seed = suites.resolve_seed(args.seed)
    sizes = _sizes(args, [64])
    if len(sizes) != 1:
        raise UsageError("verify takes a single --n")
    n = sizes[0]

    if args.suite == "dissipation":
        if args.op not in suites.SECOND_DERIVATIVE_OPS:
            raise UsageError(f"dissipation needs a second derivative --op, got {args.op}")
        entropies = [args.entropy] if args.entropy else ["square", "linear", "smoothhinge"]
        kw = {} if args.tol is None else {"tol": args.tol}
        report = suites.dissipation_suite(
            args.op, entropies, trials=args.trials or 1000, seed=seed, **kw
        )
        return report, report["passed"]

    op = suites.make_operator(args.op, n)
    if args.suite == "exactness":
        report = suites.exactness_suite(op)
        return report, report["passed"]

    if args.op not in suites.FIRST_DERIVATIVE_OPS:
        raise UsageError(f"{args.suite} needs a first derivative --op, got {args.op}")

    trials = args.trials or 100
    if args.suite == "product-rule":
        kw = {} if args.tol is None else {"tol": args.tol}
        report = suites.product_rule_suite(op, trials=trials, seed=seed, **kw)
    else:
        kw = {} if args.tol is None else {"tol": args.tol}
        report = suites.chain_rule_suite(op, trials=trials, seed=seed, **kw)

    return report, report["passed"]


def cmd_counterexample(args: argparse.Namespace) -> Tuple[Dict[str, Any], bool]:
    if args.name == "lobatto":
        report = checks.counterexample_lobatto()
    elif args.name == "nonmimetic-d2":
        report = checks.counterexample_nonmimetic_d2()
    else:
        sizes = _sizes(args, [8])
        report = checks.counterexample_hinge_entropy(
            args.eps, n=sizes[0], smoothing=args.smoothing
        )

    return report, bool(report["violation_observed"] and report["matches_expected"])


def cmd_converge(args: argparse.Namespace) -> Tuple[Any, bool]:
    if args.op.startswith("lobatto"):
        raise UsageError("collocation operators have fixed nodes and cannot be refined")
    if args.test == "exp" and args.op != "sbp2":
        raise UsageError("exp is not periodic; use it with --op sbp2")

    sizes = _sizes(args, [16, 32, 64, 128])
    u, _, _ = TEST_FUNCTIONS[args.test]
    reference = _reference(args.op, args.test)

    def builder(n: int) -> Tuple[DiffOp, Callable]:
        return suites.make_operator(args.op, n), reference

    table = checks.convergence_study(
        builder, u, sizes, norm=args.norm, region=args.region
    )
    return table, True


def cmd_feasibility(args: argparse.Namespace) -> Tuple[Dict[str, Any], bool]:
    if args.op not in suites.FIRST_DERIVATIVE_OPS:
        raise UsageError(f"feasibility needs a first derivative --op, got {args.op}")

    tol = 1.0e-12 if args.tol is None else args.tol
    expected = args.op in suites.MIMETIC_OPS
    sizes = [0] if args.op.startswith("lobatto") else _sizes(args, [16, 32, 64, 128])

    results = []
    for n in sizes:
        op = suites.make_operator(args.op, max(n, 2))
        for bw in range(1, args.bandwidth + 1):
            rep = checks.product_rule_feasibility(op, bw, tol)
            results.append(rep.to_dict(include_rows=False))

    if expected:
        passed = all(r["feasible"] for r in results)
    else:
        passed = all(r["min_residual"] > tol for r in results)

    report = {
        "operator": args.op,
        "tolerance": tol,
        "expected_feasible": expected,
        "results": results,
        "passed": passed,
    }
    return report, passed


def cmd_bv_check(args: argparse.Namespace) -> Tuple[Dict[str, Any], bool]:
    kw = {}
    if args.tol is not None:
        kw = {"product_tol": args.tol, "chain_tol": args.tol}
    report = suites.bv_suite(
        trials=args.trials or 100,
        jumps=args.jumps,
        max_degree=args.max_degree,
        seed=suites.resolve_seed(args.seed),
        **kw,
    )
    return report, report["passed"]


# }}}


# {{{ parser


def _common(p: argparse.ArgumentParser, fmt_default: str = "json") -> None:
    p.add_argument("--seed", type=_u64, default=None,
                   help=f"base seed (falls back to ${suites.SEED_ENV}, then {suites.DEFAULT_SEED})")
    p.add_argument("--tol", type=float, default=None, help="tolerance override")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default=fmt_default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimetic-ops",
        description="Discrete product rule, chain rule and entropy dissipation checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run a seeded verification suite")
    p.add_argument("--suite", required=True,
                   choices=("product-rule", "chain-rule", "dissipation", "exactness"))
    p.add_argument("--op", required=True, choices=suites.OPERATOR_NAMES)
    p.add_argument("--n", type=_int_list, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--entropy", default=None,
                   help="square | linear | hinge:<c> | smoothhinge:<c>:<w>")
    _common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("counterexample", help="reproduce a mimetic-rule violation")
    p.add_argument("--name", required=True,
                   choices=("lobatto", "nonmimetic-d2", "hinge-entropy"))
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--smoothing", type=float, default=None)
    p.add_argument("--n", type=_int_list, default=None)
    _common(p)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("converge", help="observed orders under refinement")
    p.add_argument("--op", required=True, choices=suites.OPERATOR_NAMES)
    p.add_argument("--test", choices=tuple(TEST_FUNCTIONS), default="sin")
    p.add_argument("--n", type=_int_list, default=None)
    p.add_argument("--norm", choices=("max", "l2"), default="max")
    p.add_argument("--region", choices=("all", "interior", "boundary"), default="all")
    _common(p, fmt_default="csv")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("feasibility", help="search for product-rule averaging rows")
    p.add_argument("--op", required=True, choices=suites.FIRST_DERIVATIVE_OPS)
    p.add_argument("--n", type=_int_list, default=None)
    p.add_argument("--bandwidth", type=int, default=4)
    _common(p)
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("bv-check", help="product and chain rules for step functions")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--jumps", type=int, default=5)
    p.add_argument("--max-degree", type=int, default=8)
    _common(p)
    p.set_defaults(func=cmd_bv_check)

    return parser


# }}}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE

    try:
        if args.format == "csv" and args.command != "converge":
            raise UsageError("csv output is only available for converge")
        result, passed = args.func(args)
    except (UsageError, MimeticError) as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{parser.prog}: error: {exc}\n")
        return EXIT_USAGE

    if isinstance(result, checks.ConvergenceTable):
        text = result.to_csv() if args.format == "csv" else _json(result.to_dict())
    else:
        text = _json(result)

    _emit(text, args.out)
    if not passed and args.out is not None:
        # keep the diagnostic visible when the report went to a file
        sys.stderr.write(_json({"passed": False, "report": args.out}))
    return EXIT_OK if passed else EXIT_FAIL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command line interface: ``szpiro <command> ...``.

Exit codes: 0 success, 1 usage error, 2 domain rejection, 3 internal error or factoring cap.
"""
import argparse
import json
import logging
import sys
from typing import Callable, Dict, List, Optional

from dagster import get_dagster_logger

from dagster_szpiro.arith import (
    DEFAULT_MAX_RHO_ITERATIONS,
    DEFAULT_RHO_SEED,
    DEFAULT_TRIAL_BOUND,
    factorize,
)
from dagster_szpiro.ellcurve import WeierstrassModel, conductor
from dagster_szpiro.errors import (
    DomainError,
    FactoringEffortExceeded,
    InternalError,
    UsageError,
)
from dagster_szpiro.families import family_from_config, verify_identities
from dagster_szpiro.parsing import parse_poly
from dagster_szpiro.scan import (
    LUCA_TABLE,
    check_condition,
    luca_table,
    render_csv,
    render_json,
    scan_family,
    scan_gpf,
)
from dagster_szpiro.types import DEFAULT_CHUNK_SIZE, ScanOutput, ScanSettings

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_INTERNAL = 3


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _settings(args) -> ScanSettings:
    return ScanSettings(
        seed=args.seed,
        max_rho_iterations=args.max_rho_iterations,
        trial_bound=args.trial_bound,
        chunk_size=args.chunk_size,
    )


def _factor_options(args) -> Dict[str, int]:
    return _settings(args).factor_options


def _run_options(args, log: logging.Logger) -> dict:
    return {
        "out_path": args.out,
        "fmt": args.format,
        "checkpoint_path": args.resume,
        "resume": args.resume is not None,
        "max_workers": args.workers,
        "log": log,
    }


def _report(output: ScanOutput, fmt: str) -> None:
    if output.records is not None:
        render = render_csv if fmt == "csv" else render_json
        sys.stdout.write(render(output.records))
        sys.stderr.write(json.dumps(output.summary, indent=2) + "\n")
    else:
        sys.stdout.write(json.dumps(output.summary, indent=2) + "\n")


def _factor(args, log: logging.Logger) -> int:
    factorization = factorize(args.m, **_factor_options(args))
    print(f"{args.m} = {factorization}")
    print(f"gpf = {factorization.greatest_prime_factor}")
    print(f"rad = {factorization.radical}")
    print(f"valuation_product = {factorization.valuation_product}")
    if factorization.probable:
        print("note: some factors are probable primes")
    return EXIT_OK


def _gpf_scan(args, log: logging.Logger) -> int:
    output = scan_gpf(
        parse_poly(args.poly), args.lo, args.hi, _settings(args), **_run_options(args, log)
    )
    _report(output, args.format)
    return EXIT_OK


def _family_scan(args, log: logging.Logger) -> int:
    family = family_from_config(
        {
            "A_poly": args.A_poly,
            "B_poly": args.B_poly,
            "quadratic": args.quadratic,
            "cubic": args.cubic,
        }
    )
    output = scan_family(family, args.lo, args.hi, _settings(args), **_run_options(args, log))
    _report(output, args.format)
    return EXIT_OK


def _condition_check(args, log: logging.Logger) -> int:
    output = check_condition(
        parse_poly(args.poly), args.lo, args.hi, _settings(args), **_run_options(args, log)
    )
    _report(output, args.format)
    return EXIT_OK


def _curve(args, log: logging.Logger) -> int:
    model = WeierstrassModel(args.a1, args.a2, args.a3, args.a4, args.a6)
    g = conductor(model, **_factor_options(args))
    print(f"model = {model}")
    print(f"minimal_model = {g.minimal_model.model} (u = {g.u})")
    print(f"delta_min = {g.delta_min}")
    print(f"conductor = {g.conductor}")
    for data in g.locals:
        print(
            f"p = {data.p}: {data.kind}, {data.kodaira}, f = {data.f_p}, "
            f"v = {data.v_delta_min}, c = {data.tamagawa}"
        )
    return EXIT_OK


def _verify_identities(args, log: logging.Logger) -> int:
    seed = args.seed if args.identity_seed is None else args.identity_seed
    report = verify_identities(args.trials, seed)
    print(
        f"{report.trials} quadratic and {report.trials} cubic trials: "
        f"{len(report.quadratic_failures)} and {len(report.cubic_failures)} failures"
    )
    if not report.ok:
        raise InternalError("Discriminant identity failed")
    return EXIT_OK


def _luca(args, log: logging.Logger) -> int:
    table = luca_table(**_factor_options(args))
    for n, gpf in table:
        print(f"{n} {gpf}")
    if tuple(table) != LUCA_TABLE:
        raise InternalError("Recomputed Luca table differs from the reference values")
    return EXIT_OK


def _add_scan_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--from", dest="lo", type=int, required=True, help="First n, inclusive")
    parser.add_argument("--to", dest="hi", type=int, required=True, help="Last n, inclusive")
    parser.add_argument("--out", help="Record file; rows go to stdout without one")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument(
        "--resume",
        metavar="CKPT",
        help="Checkpoint file, written after every chunk and continued from when present",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="szpiro", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=DEFAULT_RHO_SEED, help="Rho seed")
    parser.add_argument(
        "--max-rho-iterations", type=int, default=DEFAULT_MAX_RHO_ITERATIONS, help="Rho budget"
    )
    parser.add_argument("--trial-bound", type=int, default=DEFAULT_TRIAL_BOUND)
    parser.add_argument("--chunk-size", type=int, default=DEFAULT_CHUNK_SIZE)
    parser.add_argument("--workers", type=int, default=1, help="Worker processes for scans")
    parser.add_argument("--verbose", action="store_true", help="Log scan progress")
    commands = parser.add_subparsers(dest="command", parser_class=_ArgumentParser)
    commands.required = True

    factor = commands.add_parser("factor", help="Factor an integer")
    factor.add_argument("m", type=int)
    factor.set_defaults(handler=_factor)

    gpf = commands.add_parser("gpf-scan", help="Greatest prime factors of f(n)")
    gpf.add_argument("--poly", required=True)
    _add_scan_arguments(gpf)
    gpf.set_defaults(handler=_gpf_scan)

    family = commands.add_parser("family-scan", help="Curve invariants along a family")
    family.add_argument("--A-poly", dest="A_poly")
    family.add_argument("--B-poly", dest="B_poly")
    family.add_argument("--quadratic", metavar="a,b,c")
    family.add_argument("--cubic", metavar="a,b,c")
    _add_scan_arguments(family)
    family.set_defaults(handler=_family_scan)

    curve = commands.add_parser("curve", help="Minimal discriminant, conductor and local data")
    for name in ("a1", "a2", "a3", "a4", "a6"):
        curve.add_argument(f"--{name}", type=int, default=0)
    curve.set_defaults(handler=_curve)

    identities = commands.add_parser("verify-identities", help="Check discriminant identities")
    identities.add_argument("--trials", type=int, default=1000)
    identities.add_argument(
        "--seed", dest="identity_seed", type=int, help="Overrides the global --seed"
    )
    identities.set_defaults(handler=_verify_identities)

    condition = commands.add_parser("condition-check", help="Valuation-product exponents")
    condition.add_argument("--poly", required=True)
    _add_scan_arguments(condition)
    condition.set_defaults(handler=_condition_check)

    luca = commands.add_parser("luca", help="Recompute the Luca table")
    luca.set_defaults(handler=_luca)
    return parser


_EXIT_CODES: List[tuple] = [
    (UsageError, EXIT_USAGE),
    (DomainError, EXIT_DOMAIN),
    (InternalError, EXIT_INTERNAL),
    (FactoringEffortExceeded, EXIT_INTERNAL),
]


def main(argv: Optional[List[str]] = None) -> int:
    log = get_dagster_logger()
    try:
        args = build_parser().parse_args(argv)
        log.setLevel(logging.INFO if args.verbose else logging.WARNING)
        handler: Callable = args.handler
        return handler(args, log)
    except tuple(error for error, _ in _EXIT_CODES) as e:
        print(f"szpiro: {e}", file=sys.stderr)
        for error, code in _EXIT_CODES:
            if isinstance(e, error):
                return code
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

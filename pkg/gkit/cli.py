#!/usr/bin/env python3
"""A command line application for Grothendieck-bounded functionals."""
import argparse
import logging
import os
import sys
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

import gkit.exceptions as exceptions
from gkit import __version__
from gkit import parser as codec
from gkit.config import RunConfig
from gkit.contrib import sweeps
from gkit.fubini import (
    MultilinearForm,
    fubini_evaluate,
    operator_form_check,
    permutation_sweep,
)
from gkit.helpers import setup_logger, substream
from gkit.kernels import (
    Kernel,
    builtin_kernel,
    compose,
    discretize,
    fubini_kernel_check,
    green_1d,
    hs_norm,
    make_grid,
    operator_norm,
    spectral_check,
    weyl_slope,
)
from gkit.sdp import check_witness, grothendieck_ratio, represent
from gkit.spaces import (
    BilinearForm,
    SpaceSpec,
    TensorElement,
    bilinear_norm,
    projective_norm,
    total_variation_vs_norm,
)

logger = logging.getLogger(__name__)

# (report, passed, csv body or None)
Outcome = Tuple[Dict, bool, Optional[str]]


class GkitArgumentParser(argparse.ArgumentParser):
    """Usage errors are input errors and exit 1, like every other bad input."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def main(argv: Optional[List[str]] = None) -> None:
    """Command line application for Grothendieck-bounded functionals."""
    # noinspection PyTypeChecker
    parser = GkitArgumentParser(prog="gkit", description=main.__doc__)
    args = _parse_args(parser, argv)
    if getattr(args, "verbose", False):
        setup_logger(logging.DEBUG, log_filename=args.logfile)
        logger.debug(f"gkit version: {__version__}")

    if not args.command:
        parser.print_help()
        sys.exit(1)

    try:
        config = RunConfig.from_args(args)
        report, passed, csv_body = COMMANDS[args.command](args, config)
        _emit(args.command, report, csv_body, config)
    except exceptions.GkitError as e:
        print(f"gkit {args.command}: {e}", file=sys.stderr)
        sys.exit(e.exit_code)

    if not passed:
        sys.exit(3)


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-10, help="Tolerance for agreement checks")
    common.add_argument("--seed", type=int, default=0, help="Root seed of every random stream")
    common.add_argument(
        "--kg", type=float, default=1.782, help="Effective Grothendieck constant",
    )
    common.add_argument(
        "--enum-limit",
        type=int,
        default=22,
        dest="enum_limit",
        help="Most sign variables an exact enumeration may use",
    )
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker threads (default: GKIT_THREADS, else every cpu)",
    )
    common.add_argument("-o", "--output", help="Write the report here instead of stdout")
    common.add_argument(
        "--format", choices=("json", "csv"), default="json", help="Report format",
    )
    common.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        dest="verbose",
        help="Set logger output to verbose output.",
    )
    common.add_argument(
        "--logfile",
        action="store",
        help="logging debug and error messages into a log file",
    )
    return common


def _parse_args(
    parser: argparse.ArgumentParser, args: Optional[List] = None
) -> argparse.Namespace:
    common = _common_flags()
    parser.add_argument(
        "--version", action="version", version="%(prog)s " + __version__,
    )
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("norm", parents=[common], help="Norm of a bilinear form")
    p.add_argument("form", help="Form JSON file")
    p.add_argument(
        "--inexact",
        action="store_true",
        help="Return a sampled interval instead of failing beyond --enum-limit",
    )

    p = sub.add_parser("sdp", parents=[common], help="Grothendieck SDP ratio of a form")
    p.add_argument("form", help="Form JSON file on (linf, linf)")
    p.add_argument("--rank", type=int, help="Vector dimension of the relaxation")
    p.add_argument("--restarts", type=int, default=8, help="Random restarts")
    p.add_argument("--max-iters", type=int, default=5000, dest="max_iters")
    p.add_argument("--witness-file", dest="witness_file", help="Write U, V here as csv")

    p = sub.add_parser("fubini", parents=[common], help="Both orders of a bilinear integral")
    p.add_argument("form", nargs="?", help="Form JSON file")
    p.add_argument("element", nargs="?", help="Tensor element JSON file")
    p.add_argument("--random", help="Random n,m instance instead of files")
    p.add_argument("--terms", type=int, default=3, help="Terms of the random element")

    p = sub.add_parser(
        "multifubini", parents=[common], help="Every contraction order of a multilinear form"
    )
    p.add_argument("form", nargs="?", help="Multilinear JSON file with 'vectors'")
    p.add_argument("--random", help="Random d1,d2,...,dn instance instead of a file")

    p = sub.add_parser("kernel", parents=[common], help="Norms and checks of a kernel operator")
    p.add_argument("kernel", help="Built-in kernel name or kernel CSV file")
    _grid_flags(p, 512)
    p.add_argument("--spectral", action="store_true", help="Include the spectral report")

    p = sub.add_parser("green", parents=[common], help="Green's operator of the 1-D Laplacian")
    p.add_argument("--n", type=int, default=1000, help="Grid nodes")
    p.add_argument("--weyl", action="store_true", help="Fit the eigenvalue decay slope")
    p.add_argument("--eigs", type=int, default=5, help="Leading eigenvalues to report")

    p = sub.add_parser("compose", parents=[common], help="Compose two kernels")
    p.add_argument("first", help="Kernel on X x Y (name or CSV)")
    p.add_argument("second", help="Kernel on Y x Z (name or CSV)")
    _grid_flags(p, 200)

    p = sub.add_parser("pnorm", parents=[common], help="Projective norm of a tensor element")
    p.add_argument("element", help="Tensor element JSON file")

    p = sub.add_parser("tv", parents=[common], help="Total variation against the form norm")
    p.add_argument("form", help="Form JSON file on (linf, linf)")

    p = sub.add_parser("represent", parents=[common], help="Hilbert-space factorization")
    p.add_argument("form", help="Form JSON file")
    p.add_argument("--witness-file", dest="witness_file", help="Write U, V here as csv")

    p = sub.add_parser("sweep", parents=[common], help="Seeded acceptance sweeps")
    p.add_argument("suite", choices=("ratio", "fubini", "refine"))
    p.add_argument("--count", type=int, help="Instances in the sweep")

    return parser.parse_args(args)


def _grid_flags(p: argparse.ArgumentParser, n: int) -> None:
    p.add_argument("--n", type=int, default=n, help="Grid nodes for built-in kernels")
    p.add_argument(
        "--rule",
        choices=("GaussLegendre", "Trapezoid"),
        default="GaussLegendre",
        help="Quadrature rule for built-in kernels",
    )
    p.add_argument("--a", type=float, default=0.0, help="Left end of the interval")
    p.add_argument("--b", type=float, default=1.0, help="Right end of the interval")


def _emit(command: str, report: Dict, csv_body: Optional[str], config: RunConfig) -> None:
    if config.fmt == "csv" and csv_body is not None:
        text = csv_body
    else:
        text = codec.dump_json({"command": command, **report})
    if config.output:
        with open(config.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        logger.debug("report written to %s", config.output)
    else:
        sys.stdout.write(text)


def _dims(text: str) -> List[int]:
    try:
        dims = [int(d) for d in text.split(",")]
    except ValueError:
        raise exceptions.ParseError(f"dimensions must look like 3,4,2, got {text!r}")
    if not dims or min(dims) < 1:
        raise exceptions.ParseError(f"dimensions must be positive, got {text!r}")
    return dims


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _load_kernel(spec: str, args: argparse.Namespace, config: RunConfig) -> Kernel:
    if os.path.isfile(spec):
        return codec.load_kernel(spec)
    name, fn = builtin_kernel(spec)
    grid = make_grid(args.n, args.a, args.b, args.rule)
    return discretize(fn, grid, grid, config.threads, name)


def run_norm(args: argparse.Namespace, config: RunConfig) -> Outcome:
    phi = codec.load_form(args.form)
    cert = bilinear_norm(
        phi,
        enum_limit=config.enum_limit,
        exact=not args.inexact,
        seed=config.seed,
        threads=config.threads,
    )
    report = cert.to_dict()
    report["grothendieck"] = cert.upper <= config.kg_effective
    return report, True, None


def run_sdp(args: argparse.Namespace, config: RunConfig) -> Outcome:
    phi = codec.load_form(args.form)
    result = grothendieck_ratio(
        phi,
        config.constants,
        rank=args.rank,
        max_iters=args.max_iters,
        restarts=args.restarts,
        seed=config.seed,
        threads=config.threads,
        enum_limit=config.enum_limit,
    )
    report = result.to_dict()
    passed = result.ratio <= config.kg_effective + 1e-6
    report["pass"] = passed
    report["witness_file"] = None
    csv_body = None
    if result.solution is not None:
        csv_body = codec.write_witness_csv(result.solution.U, result.solution.V)
        if args.witness_file:
            _write(args.witness_file, csv_body)
            report["witness_file"] = args.witness_file
    return report, passed, csv_body


def run_fubini(args: argparse.Namespace, config: RunConfig) -> Outcome:
    if args.random:
        n, m = _dims(args.random)[:2]
        rng = substream(config.seed, "fubini")
        phi = BilinearForm(rng.standard_normal((n, m)), SpaceSpec(n), SpaceSpec(m))
        x = TensorElement(
            tuple((rng.standard_normal(n), rng.standard_normal(m)) for _ in range(args.terms)),
            phi.spaces,
        )
    elif args.form and args.element:
        phi = codec.load_form(args.form)
        x = codec.load_element(args.element, phi.spaces)
    else:
        raise exceptions.ParseError("fubini needs a form and an element, or --random")
    report = fubini_evaluate(phi, x).to_dict()
    report["operator_discrepancy"] = operator_form_check(phi, x)
    return report, report["spread"] <= config.tol, None


def run_multifubini(args: argparse.Namespace, config: RunConfig) -> Outcome:
    if args.random:
        dims = _dims(args.random)
        rng = substream(config.seed, "multifubini")
        mu = MultilinearForm(rng.standard_normal(dims), tuple(SpaceSpec(d) for d in dims))
        vectors = [rng.standard_normal(d) for d in dims]
    elif args.form:
        obj = codec.parse_json(codec.read_text(args.form))
        mu = codec.multilinear_from_dict(obj)
        vectors = codec.vectors_from_dict(obj)
    else:
        raise exceptions.ParseError("multifubini needs a form file or --random")
    sweep = permutation_sweep(mu, vectors, config.threads)
    return sweep.to_dict(), sweep.spread <= config.tol, None


def run_kernel(args: argparse.Namespace, config: RunConfig) -> Outcome:
    k = _load_kernel(args.kernel, args, config)
    ones_x, ones_y = np.ones(k.grid_x.n), np.ones(k.grid_y.n)
    check = fubini_kernel_check(k, ones_x, ones_y)
    report = {
        "kernel": k.name,
        "grid_x": k.grid_x.to_dict(),
        "grid_y": k.grid_y.to_dict(),
        "op_norm": operator_norm(k),
        "hs_norm": hs_norm(k),
        "fubini": check.to_dict(),
    }
    if args.spectral:
        report["spectral"] = spectral_check(k, config.constants).to_dict()
    return report, check.spread <= config.tol, codec.write_kernel_csv(k)


def run_green(args: argparse.Namespace, config: RunConfig) -> Outcome:
    k = green_1d(args.n, threads=config.threads)
    spectrum = spectral_check(k, config.constants)
    j = np.arange(1, args.eigs + 1)
    analytic = 1.0 / (j * np.pi) ** 2
    leading = spectrum.eigenvalues[: args.eigs]
    report = {
        "n": args.n,
        "op_norm": spectrum.op_norm,
        "hs_norm": spectrum.hs_norm,
        "psd": spectrum.psd,
        "eigenvalues": [float(v) for v in leading],
        "analytic": analytic.tolist(),
        "relative_error": (np.abs(leading - analytic) / analytic).tolist(),
    }
    if args.weyl:
        report["weyl_slope"] = weyl_slope(spectrum.eigenvalues)
    return report, True, codec.write_kernel_csv(k)


def run_compose(args: argparse.Namespace, config: RunConfig) -> Outcome:
    k1 = _load_kernel(args.first, args, config)
    k2 = _load_kernel(args.second, args, config)
    result = compose(k1, k2, constants=config.constants, tol=max(config.tol, 1e-12))
    return result.to_dict(), True, codec.write_kernel_csv(result.kernel)


def run_pnorm(args: argparse.Namespace, config: RunConfig) -> Outcome:
    x = codec.load_element(args.element)
    cert = projective_norm(x, seed=config.seed, threads=config.threads)
    return cert.to_dict(), True, None


def run_tv(args: argparse.Namespace, config: RunConfig) -> Outcome:
    rho = codec.load_form(args.form)
    report = total_variation_vs_norm(rho, config.enum_limit, config.threads)
    return report.to_dict(), True, None


def run_represent(args: argparse.Namespace, config: RunConfig) -> Outcome:
    phi = codec.load_form(args.form)
    witness = represent(phi, config.enum_limit, config.threads)
    check = check_witness(phi, witness, config.constants, config.enum_limit, config.threads)
    report = {**witness.to_dict(), **check.to_dict(), "witness_file": None}
    csv_body = codec.write_witness_csv(witness.U, witness.V)
    if args.witness_file:
        _write(args.witness_file, csv_body)
        report["witness_file"] = args.witness_file
    return report, check.reconstruction_error <= max(config.tol, 1e-10), csv_body


def run_sweep(args: argparse.Namespace, config: RunConfig) -> Outcome:
    if args.suite == "ratio":
        result = sweeps.ratio_sweep(
            count=args.count or 200,
            seed=config.seed,
            constants=config.constants,
            threads=config.threads,
        )
    elif args.suite == "fubini":
        count = args.count or 1000
        result = sweeps.fubini_suite(
            bilinear=count,
            multilinear=max(1, count // 5),
            seed=config.seed,
            tol=max(config.tol, 1e-12),
            threads=config.threads,
        )
    else:
        result = sweeps.refinement_suite(threads=config.threads)
    return result.to_dict(), result.passed, None


COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig], Outcome]] = {
    "norm": run_norm,
    "sdp": run_sdp,
    "fubini": run_fubini,
    "multifubini": run_multifubini,
    "kernel": run_kernel,
    "green": run_green,
    "compose": run_compose,
    "pnorm": run_pnorm,
    "tv": run_tv,
    "represent": run_represent,
    "sweep": run_sweep,
}


if __name__ == "__main__":
    main()

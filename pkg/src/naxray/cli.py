"""``naxray`` command line: phantom, plan, forward, reconstruct, verify,
counterexample. All files are deterministic ``naxray/1`` JSON.

Exit codes: 0 success, 1 verification above ``--tol``, 2 invalid input
(flags, files, missing rays), 3 reconstruction hit a domain or singularity
error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

from . import jsonio
from .errors import DomainError, MissingRay, SingularError
from .fields import (
    ADDITIVE,
    MULTIPLICATIVE,
    LatticeField,
    Sinogram,
    random_additive_field,
    random_multiplicative_field,
)
from .pipeline import (
    METHODS,
    consistency_report,
    counterexample_document,
    forward,
    parse_annulus,
    reconstruct,
    residual_report,
    validate_reconstruction,
)
from .plan import StarPlan, build_star_plan

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INVALID = 2
EXIT_RECONSTRUCTION = 3


class UsageError(Exception):
    pass


class _ReconstructionFailure(Exception):
    pass


def _positive_int(name, minimum):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer") from None
        if v < minimum:
            raise argparse.ArgumentTypeError(f"{name} must be >= {minimum}")
        return v
    return parse


def _positive_float(name):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return v
    return parse


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("seed must be an integer") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="naxray", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *names):
        if "d" in names:
            p.add_argument("--d", type=_positive_int("d", 2), default=2)
        if "n" in names:
            p.add_argument("--n", type=_positive_int("n", 1), default=2)
        if "r" in names:
            p.add_argument("--r", type=_positive_float("r"), required=True)
        if "M" in names:
            p.add_argument("--M", type=_positive_float("M"), default=1.0)
        if "method" in names:
            p.add_argument("--method", choices=METHODS, required=True)
        if "annulus" in names:
            p.add_argument("--annulus", metavar="ALPHA,BETA")
        if "plan" in names:
            p.add_argument("--plan", metavar="PLAN.json")
        if "in" in names:
            p.add_argument("--in", dest="input", metavar="FILE", required=True)
        p.add_argument("--out", metavar="FILE", help="output path (default: stdout)")

    p = sub.add_parser("phantom", help="seeded random lattice field")
    common(p, "d", "n", "r", "M")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--regime", choices=(MULTIPLICATIVE, ADDITIVE), default=MULTIPLICATIVE)

    p = sub.add_parser("plan", help="ray plan for star-transform reconstruction")
    common(p, "d", "r", "M")

    p = sub.add_parser("forward", help="measure a field on a method's ray family")
    common(p, "method", "annulus", "plan", "in")
    p.add_argument("--threads", type=_positive_int("threads", 1))

    p = sub.add_parser("reconstruct", help="invert a sinogram")
    common(p, "method", "annulus", "plan", "in")
    p.add_argument("--ref", metavar="FIELD.json", help="reference field for the report")
    p.add_argument("--report", metavar="FILE", help="report path (default: stderr)")

    p = sub.add_parser("verify", help="compare two fields, or replay a sinogram")
    common(p, "annulus", "in")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--ref", metavar="FIELD.json")
    group.add_argument("--sinogram", metavar="SINO.json")
    p.add_argument("--tol", type=float, default=1e-9)

    p = sub.add_parser("counterexample", help="two fields with one star transform")
    common(p, "r", "M")
    p.add_argument("--k", type=int, default=1)
    return parser


def _load(path, what, loader):
    try:
        doc = jsonio.read(path)
    except OSError as exc:
        raise UsageError(f"cannot read {what} {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} {path} is not JSON: {exc}") from None
    return loader(doc)


def _emit(obj, path) -> None:
    if path is None:
        sys.stdout.write(jsonio.dumps(obj) + "\n")
    else:
        jsonio.write(path, obj)


def _plan(args):
    if args.plan is None:
        if args.method == "star":
            raise UsageError("method 'star' needs --plan")
        return None
    return _load(args.plan, "plan", StarPlan.from_json)


def _cmd_phantom(args):
    if args.regime == MULTIPLICATIVE:
        field = random_multiplicative_field(args.d, args.n, args.r, args.seed)
    else:
        field = random_additive_field(args.d, args.n, args.r, args.seed, args.M, scale=None)
    _emit(field.to_json(), args.out)


def _cmd_plan(args):
    _emit(build_star_plan(args.r, args.M, args.d).to_json(), args.out)


def _cmd_forward(args):
    field = _load(args.input, "field", LatticeField.from_json)
    sino = forward(field, args.method, annulus=parse_annulus(args.annulus),
                   plan=_plan(args), threads=args.threads)
    _emit(sino.to_json(), args.out)


def _cmd_reconstruct(args):
    sino = _load(args.input, "sinogram", Sinogram.from_json)
    annulus = parse_annulus(args.annulus)
    plan = _plan(args)
    ref = _load(args.ref, "reference field", LatticeField.from_json) if args.ref else None
    validate_reconstruction(sino, args.method, annulus=annulus, plan=plan)
    start = time.perf_counter()
    try:
        field, provider = reconstruct(sino, args.method, annulus=annulus, plan=plan)
    except (DomainError, SingularError) as exc:
        raise _ReconstructionFailure(str(exc)) from None
    elapsed = time.perf_counter() - start
    _emit(field.to_json(), args.out)
    extra = {"method": args.method, "measurements": provider.count}
    if plan is not None:
        extra["layers"] = plan.depth
    if ref is not None:
        report = residual_report(field, ref, annulus=annulus, extra=extra)
    else:
        report = {"format": jsonio.FORMAT_TAG, "kind": "reconstruction", **extra}
    if args.report:
        jsonio.write(args.report, report)
    else:
        sys.stderr.write(jsonio.dumps(report) + "\n")
    sys.stderr.write(f"reconstructed {len(field.support)} cells in {elapsed:.3f} s\n")


def _cmd_verify(args):
    field = _load(args.input, "field", LatticeField.from_json)
    if args.ref:
        ref = _load(args.ref, "reference field", LatticeField.from_json)
        report = residual_report(field, ref, annulus=parse_annulus(args.annulus))
    else:
        sino = _load(args.sinogram, "sinogram", Sinogram.from_json)
        report = consistency_report(field, sino)
    report["tolerance"] = args.tol
    report["pass"] = report["max_residual"] < args.tol
    _emit(report, args.out)
    if not report["pass"]:
        sys.stderr.write(f"max residual {report['max_residual']:.3e} exceeds {args.tol:g}\n")
        return EXIT_MISMATCH
    return EXIT_OK


def _cmd_counterexample(args):
    try:
        plan = build_star_plan(args.r, args.M, 2)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    _emit(counterexample_document(args.k, plan), args.out)


COMMANDS = {
    "phantom": _cmd_phantom,
    "plan": _cmd_plan,
    "forward": _cmd_forward,
    "reconstruct": _cmd_reconstruct,
    "verify": _cmd_verify,
    "counterexample": _cmd_counterexample,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        status = COMMANDS[args.command](args)
    except _ReconstructionFailure as exc:
        sys.stderr.write(f"naxray {args.command}: reconstruction failed: {exc}\n")
        return EXIT_RECONSTRUCTION
    except (UsageError, DomainError, SingularError, MissingRay) as exc:
        sys.stderr.write(f"naxray {args.command}: {exc}\n")
        return EXIT_INVALID
    return EXIT_OK if status is None else status


if __name__ == "__main__":
    sys.exit(main())

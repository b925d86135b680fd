"""Command-line front end: experiment records, CSV/JSON emission, exit codes.

Exit codes: 0 on success, 1 on an infeasible outcome or a failed
verification, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from . import constructor as ctor
from . import density as dens
from . import multiplicative as mult
from .numerics import (
    BigFixed,
    Comparison,
    compare_to_threshold,
    exact_rational_sum,
    fraction_str,
)
from .sieve import SieveTable, dickman_rho_grid
from .support import SignSequence, SupportSet

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_USAGE = 2


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


def _parse_args(argv):
    top = argparse.ArgumentParser(
        prog="harmsum",
        description="Construct and rigorously verify tiny signed harmonic sums",
    )
    top.add_argument("--config", type=str, default=None, help="JSON file of flag defaults")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=str, default=None, help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--precision-bits", type=int, default=128)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sieve", parents=[common], help="dump smooth-count tables and rho grids")
    p.add_argument("--limit", type=int, default=1_000_000)
    p.add_argument("--psi", type=str, default=None, help="comma list of x:y pairs")
    p.add_argument("--rho", type=str, default=None, help="u_max[:coarse_step]")

    p = sub.add_parser("density", parents=[common], help="decay profile and certificate")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", type=str, default=None, help="set spec for A (default N/2..N)")
    p.add_argument("--b", type=str, default=None, help="set spec for B (default primes in A)")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--profile-out", type=str, default=None, help="CSV path for the profile")

    p = sub.add_parser("construct", parents=[common], help="build a sign sequence")
    p.add_argument("--set", type=str, default=None, help='"a..b", "mod m: r,s" or "@file"')
    p.add_argument("--interval", type=str, default=None, help='shorthand for --set "a..b"')
    p.add_argument("--n", type=int, default=None, help="scale bound for residue/file sets")
    p.add_argument(
        "--method",
        choices=["greedy", "flip", "mitm", "random", "pipeline"],
        default="pipeline",
    )
    p.add_argument("--x0", type=_fraction, default=Fraction(0))
    p.add_argument("--eta", type=_fraction, default=None)
    p.add_argument("--alpha", type=_fraction, default=Fraction(0), help="flip target")
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--eps0", type=float, default=0.2)
    p.add_argument("--max-free", type=int, default=48)
    p.add_argument("--max-iters", type=int, default=100_000)

    p = sub.add_parser("pipeline", parents=[common], help="multiplicative two-block pipeline")
    p.add_argument("--seed-rule", choices=sorted(mult.SEED_RULES), default="liouville")
    p.add_argument("--override", type=str, default=None, help='"p:+1,q:-1" prime signs')
    p.add_argument("--c-cross", type=int, default=6)
    p.add_argument("--scales", type=str, default="2000,16000")
    p.add_argument("--c0", type=float, default=1.0 / 1000)
    p.add_argument("--eta", type=_fraction, default=Fraction(1, 10**10))
    p.add_argument("--max-free", type=int, default=48)
    p.add_argument("--allow-nonpositive-delta", action="store_true")

    p = sub.add_parser("verify", parents=[common], help="re-check a construction report")
    p.add_argument("--signs", type=str, required=True, help="report JSON path")
    p.add_argument("--eta", type=_fraction, default=None, help="override the stored target")

    p = sub.add_parser("oracle", parents=[common], help="exhaustive optimum for small sets")
    p.add_argument("--set", type=str, default=None)
    p.add_argument("--interval", type=str, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--x0", type=_fraction, default=Fraction(0))

    args, remaining = top.parse_known_args(argv)
    if remaining:
        top.error(f"unrecognized arguments: {' '.join(remaining)}")
    if args.config:
        defaults = json.loads(Path(args.config).read_text())
        given = {tok.split("=")[0] for tok in (argv or []) if tok.startswith("--")}
        for key, val in defaults.items():
            attr = key.replace("-", "_")
            if hasattr(args, attr) and f"--{key}" not in given:
                setattr(args, attr, val)
    return args


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return fraction_str(obj)
    if isinstance(obj, BigFixed):
        return obj.to_obj()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "to_obj"):
        return _jsonable(obj.to_obj())
    return obj


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _record(args, report_obj, started: float) -> str:
    record = {
        "schema": 1,
        "command": args.command,
        "config": {
            k: (str(v) if isinstance(v, Fraction) else v)
            for k, v in sorted(vars(args).items())
            if k not in ("config", "out") and not k.startswith("_")
        },
        "rng_seed": getattr(args, "seed", None),
        "version": __version__,
        "wall_time": time.perf_counter() - started,
        "report": _jsonable(report_obj),
    }
    return json.dumps(record, indent=2, sort_keys=True)


def _cmd_sieve(args) -> int:
    table = SieveTable(args.limit)
    buf = io.StringIO()
    writer = csv.writer(buf)
    if args.rho:
        parts = args.rho.split(":")
        u_max = float(parts[0])
        coarse = float(parts[1]) if len(parts) > 1 else 0.1
        writer.writerow(["u", "rho_u"])
        for u, r in dickman_rho_grid(u_max, coarse):
            writer.writerow([f"{u:.6g}", f"{r:.12e}"])
    if args.psi:
        writer.writerow(["x", "y", "psi"])
        for pair in args.psi.split(","):
            xs, ys = pair.split(":")
            x, y = int(xs), int(ys)
            writer.writerow([x, y, table.psi_count(x, y)])
    if not args.rho and not args.psi:
        print("nothing to do: pass --psi and/or --rho", file=sys.stderr)
        return EXIT_USAGE
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _cmd_density(args) -> int:
    started = time.perf_counter()
    n = args.n
    table = SieveTable(n)
    a = SupportSet.from_spec(args.a, n) if args.a else SupportSet.interval(n // 2, n)
    if args.b:
        b = SupportSet.from_spec(args.b, n)
    else:
        b = table.primes_in(a.min() - 1, a.max())
        b = b.intersection(a)
    if not len(b) or not np.isin(b.values, a.values).all():
        print("B must be a nonempty subset of A", file=sys.stderr)
        return EXIT_USAGE
    t0, t_upper, fallback = dens.certificate_window(n, len(b), args.k, c=a.min() / n)
    ts = dens.sample_t_values(t0, t_upper, args.count, args.seed)
    cert = dens.decay_certificate(a, b, n, args.k, ts)
    if args.profile_out:
        profile = dens.density_profile(a, ts)
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["t", "log_abs_rho", "bound_log"])
        for t, lr, bl in profile.rows():
            writer.writerow([f"{t:.9e}", f"{lr:.9e}", f"{bl:.9e}"])
        Path(args.profile_out).write_text(buf.getvalue())
    _emit(_record(args, cert, started), args.out)
    return EXIT_OK if cert.ok else EXIT_INFEASIBLE


class _UsageError(Exception):
    pass


def _support_from_args(args) -> SupportSet:
    spec = args.set or args.interval
    if spec is None:
        raise _UsageError("a set specification is required (--set or --interval)")
    return SupportSet.from_spec(spec, args.n)


def _cmd_construct(args) -> int:
    started = time.perf_counter()
    sup = _support_from_args(args)
    exit_code = EXIT_OK
    if args.method == "greedy":
        seq, total = ctor.greedy_bounded(sup)
        report = {
            "method": "Greedy",
            "signs": seq.to_obj(),
            "achieved_exact": str(abs(total)),
        }
    elif args.method == "flip":
        flip = ctor.flip_to_target(sup, args.alpha)
        report = flip.to_obj()
        if not flip.feasible:
            exit_code = EXIT_INFEASIBLE
    elif args.method == "mitm":
        rep = ctor.mitm_optimize(
            sup,
            args.x0,
            max_free=args.max_free,
            seed=args.seed,
            target_eta=args.eta,
            threads=args.threads,
        )
        report = rep.to_obj()
    elif args.method == "random":
        eta = args.eta if args.eta is not None else Fraction(1, 10**6)
        rep = ctor.randomized_search(sup, args.x0, eta, seed=args.seed, max_iters=args.max_iters)
        report = rep.to_obj()
    else:  # pipeline: prefix + meet-in-the-middle over a dense set
        n = args.n if args.n is not None else sup.max()
        table = SieveTable(n)
        try:
            rep = ctor.dense_set_signs(
                sup,
                n,
                args.delta,
                args.eps0,
                args.seed,
                table,
                target_eta=args.eta,
                max_free=args.max_free,
                threads=args.threads,
            )
        except (ctor.InfeasibleError, ctor.DensityRequirementError) as exc:
            _emit(_record(args, {"infeasible": str(exc)}, started), args.out)
            return EXIT_INFEASIBLE
        report = rep.to_obj()
    _emit(_record(args, report, started), args.out)
    return exit_code


def _cmd_pipeline(args) -> int:
    started = time.perf_counter()
    scales = [int(s) for s in args.scales.split(",") if s.strip()]
    overrides = {}
    if args.override:
        for part in args.override.split(","):
            p, s = part.split(":")
            overrides[int(p)] = int(s)
    table = SieveTable(max(scales))
    try:
        _, state = mult.log_mean_pipeline(
            table,
            seed_rule=args.seed_rule,
            seed_overrides=overrides,
            c_cross=args.c_cross,
            scales=scales,
            c0=args.c0,
            rng_seed=args.seed,
            target_eta=args.eta,
            max_free=args.max_free,
            allow_nonpositive_delta=args.allow_nonpositive_delta,
        )
    except mult.PipelineError as exc:
        _emit(_record(args, {"infeasible": str(exc)}, started), args.out)
        return EXIT_INFEASIBLE
    _emit(_record(args, state, started), args.out)
    return EXIT_OK if state.feasible else EXIT_INFEASIBLE


def _cmd_verify(args) -> int:
    started = time.perf_counter()
    payload = json.loads(Path(args.signs).read_text())
    report = payload.get("report", payload)
    signs_obj = report.get("signs")
    if signs_obj is None:
        print("no signs found in the report", file=sys.stderr)
        return EXIT_USAGE
    seq = SignSequence.from_obj(signs_obj)
    target = args.eta
    if target is None and report.get("target_eta"):
        target = Fraction(report["target_eta"])
    if target is None:
        print("no target eta stored or provided", file=sys.stderr)
        return EXIT_USAGE
    value = exact_rational_sum(seq)
    bits = args.precision_bits
    outcome = Comparison.INDETERMINATE
    while bits <= 1 << 14:
        v = BigFixed.from_fraction(abs(value), bits)
        e = BigFixed.from_fraction(target, bits)
        outcome = compare_to_threshold(v, e)
        if outcome is not Comparison.INDETERMINATE:
            break
        bits *= 2
    result = {
        "outcome": outcome.value,
        "value": v.to_obj(),
        "target_eta": fraction_str(target),
        "precision_bits": bits,
    }
    _emit(_record(args, result, started), args.out)
    print(outcome.value.capitalize())
    return EXIT_OK if outcome is Comparison.BELOW else EXIT_INFEASIBLE


def _cmd_oracle(args) -> int:
    started = time.perf_counter()
    sup = _support_from_args(args)
    if len(sup) > dens.EXHAUSTIVE_LIMIT:
        print(f"oracle capped at {dens.EXHAUSTIVE_LIMIT} elements", file=sys.stderr)
        return EXIT_USAGE
    x0 = Fraction(args.x0)
    # All elements free and below the exact threshold: the meet-in-the-middle
    # search degenerates to an exact exhaustive optimum.
    rep = ctor.mitm_optimize(sup, x0, max_free=max(len(sup), 1))
    result = {
        "minimum": fraction_str(rep.achieved_exact),
        "signs": rep.signs.to_obj(),
        "x0": str(x0),
        "enumerated": 1 << len(sup),
    }
    _emit(_record(args, result, started), args.out)
    print(f"min |sum - x0| = {rep.achieved_exact}")
    return EXIT_OK


_COMMANDS = {
    "sieve": _cmd_sieve,
    "density": _cmd_density,
    "construct": _cmd_construct,
    "pipeline": _cmd_pipeline,
    "verify": _cmd_verify,
    "oracle": _cmd_oracle,
}


def run(argv) -> int:
    """Entry point returning an exit code (0 ok, 1 infeasible, 2 usage)."""
    try:
        args = _parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except (_UsageError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run(sys.argv[1:]))

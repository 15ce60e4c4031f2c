"""boundary-lab command line interface.

Exit codes: 0 success, 1 usage or input validation error, 2 a numerical
check failed (inequality violated, rate outside tolerance).  Every run that
writes a primary output also writes a `<out>.json` sidecar echoing its full
resolved configuration; commands that print JSON embed the echo under
"config".
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import bounds, harness, lowerbound, testing
from .envelope import Envelope
from .functionals import estimate_functional
from .model import (
    HolderClass,
    ModelConfig,
    boundary_spec_string,
    certified_corpus,
    parse_boundary,
    power_functional,
)
from .simulate import default_cap, read_sample_csv, sample_ppp, write_sample_csv


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _write_sidecar(out: str, config: dict) -> None:
    Path(str(out) + ".json").write_text(json.dumps(config, indent=2, sort_keys=True) + "\n")


def _holder(args) -> HolderClass:
    return HolderClass(beta=args.beta, radius=args.radius)


def _parse_functional(text: str):
    head, _, rest = text.partition(":")
    if head != "power":
        raise ValueError(f"unknown functional {text!r}; available preset: power:<p>")
    return power_functional(float(rest))


def _parse_ns(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise ValueError(f"bad n grid {text!r}; expected comma-separated integers") from exc


def build_parser() -> _Parser:
    parser = _Parser(prog="boundary-lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common_model(p):
        p.add_argument("--beta", type=float, required=True, help="Hoelder exponent in (0,1]")
        p.add_argument("--radius", type=float, required=True, help="Hoelder radius R > 0")

    p = sub.add_parser("simulate", help="draw one sample and write x,y CSV plus metadata sidecar")
    common_model(p)
    p.add_argument("--n", type=int, required=True, help="intensity scale")
    p.add_argument("--g", default="const:0", help="boundary spec: const:<v> | powb | bumps:<bits>:<c> | grid:<csv>")
    p.add_argument("--cap", type=float, default=None, help="truncation ceiling (default max g + 2R + margin)")
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("envelope", help="evaluate the least majorant of a sample on a grid")
    common_model(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--grid", type=int, default=8192)
    p.add_argument("--out", required=True)

    p = sub.add_parser("estimate", help="functional estimate from a sample CSV")
    common_model(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--functional", default="power:1")
    p.add_argument("--grid", type=int, default=8192)
    p.add_argument("--n", type=int, default=None, help="override the sidecar intensity scale")

    p = sub.add_parser("mc", help="Monte Carlo risk table across an n grid")
    common_model(p)
    p.add_argument("--estimator", choices=harness.ESTIMATORS, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--g", default="const:0")
    p.add_argument("--ns", required=True, help="comma-separated strictly increasing intensities")
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--grid", type=int, default=8192)
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--threads", type=int, default=None, help="worker processes (default BOUNDARY_LAB_THREADS or 1)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("rates", help="fit a log-log rate slope on a risk CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--target-exponent", type=float, required=True)
    p.add_argument("--tol", type=float, required=True)
    p.add_argument("--column", choices=("rmse", "mean_abs_error"), default="rmse")

    p = sub.add_parser("test", help="plug-in threshold test error experiment")
    common_model(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--rn", type=float, required=True, help="separation radius")
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--grid", type=int, default=8192)
    p.add_argument("--out", required=True)

    p = sub.add_parser("lowerbound", help="chi-square certificate of a bump prior")
    common_model(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=None, help="cell count (or use --r-target)")
    p.add_argument("--r-target", type=float, default=None, help="size cells from a separation radius")
    p.add_argument("--c", type=float, default=0.25)
    p.add_argument("--weights", choices=("uniform", "matched"), default="uniform")
    p.add_argument("--p", type=float, default=1.0, help="power for matched weights / --r-target")
    p.add_argument("--base", default="const:0", help="base boundary the bumps ride on")
    p.add_argument("--reps", type=int, default=0, help="Monte Carlo cross-check replications")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("check", help="deterministic analytic checks")
    checks = p.add_subparsers(dest="check_kind", required=True)
    ci = checks.add_parser("interp", help="interpolation inequality over a certified corpus")
    common_model(ci)
    ci.add_argument("--corpus", type=int, default=1000)
    ci.add_argument("--p", type=float, required=True)
    ci.add_argument("--seed", type=int, required=True)
    ci.add_argument("--grid", type=int, default=2048)
    ci.add_argument("--out", default=None)

    return parser


# ---------------------------------------------------------------------------
# Subcommand bodies (return process exit codes)
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    holder = _holder(args)
    boundary = parse_boundary(args.g, holder)
    config = ModelConfig(n=args.n, boundary=boundary)
    y_cap = args.cap if args.cap is not None else default_cap(config, args.margin)
    sample = sample_ppp(config, y_cap, args.seed)
    cfg = {
        "command": "simulate",
        "beta": args.beta,
        "radius": args.radius,
        "n": args.n,
        "g": args.g,
        "y_cap": y_cap,
        "margin": args.margin,
        "seed": args.seed,
        "out": args.out,
    }
    write_sample_csv(sample, args.out, boundary_spec=args.g, extra_meta={"beta": args.beta, "radius": args.radius, "config": cfg})
    return 0


def _cmd_envelope(args) -> int:
    holder = _holder(args)
    sample, _ = read_sample_csv(args.infile, n=1)
    env = Envelope(sample, holder)
    grid = np.linspace(0.0, 1.0, args.grid)
    ghat = env.evaluate(grid)
    with open(args.out, "w") as fh:
        fh.write("x,ghat\n")
        for x, v in zip(grid, ghat):
            fh.write(f"{x:.17g},{v:.17g}\n")
    _write_sidecar(args.out, {"command": "envelope", "in": args.infile, "beta": args.beta,
                              "radius": args.radius, "grid": args.grid, "out": args.out})
    return 0


def _cmd_estimate(args) -> int:
    holder = _holder(args)
    spec = _parse_functional(args.functional)
    sample, _meta = read_sample_csv(args.infile, n=args.n)
    result = estimate_functional(sample, holder, spec, args.grid)
    record = {
        "value": result.value,
        "integral_term": result.integral_term,
        "sum_term": result.sum_term,
        "count_on_envelope": result.count_on_envelope,
        "cap_valid": result.cap_valid,
        "config": {
            "command": "estimate",
            "in": args.infile,
            "beta": args.beta,
            "radius": args.radius,
            "functional": args.functional,
            "grid": args.grid,
            "n": sample.n,
        },
    }
    print(json.dumps(record, indent=2))
    return 0


def _cmd_mc(args) -> int:
    holder = _holder(args)
    boundary = parse_boundary(args.g, holder)
    ns = _parse_ns(args.ns)
    workers = harness.resolve_workers(args.threads)
    table = harness.run_risk_grid(
        boundary=boundary,
        estimator=args.estimator,
        ns=ns,
        reps=args.reps,
        seed=args.seed,
        p=args.p,
        grid_size=args.grid,
        margin=args.margin,
        workers=workers,
    )
    harness.write_risk_csv(table, args.out)
    _write_sidecar(args.out, {
        "command": "mc", "estimator": args.estimator, "p": args.p, "beta": args.beta,
        "radius": args.radius, "g": args.g, "ns": ns, "reps": args.reps, "seed": args.seed,
        "grid": args.grid, "margin": args.margin, "threads": workers, "out": args.out,
        "valid": table.valid,
    })
    return 0 if table.valid else 2


def _cmd_rates(args) -> int:
    table = harness.read_risk_csv(args.infile)
    fit = harness.fit_rate_slope(table, args.column, args.target_exponent, args.tol)
    record = dataclasses.asdict(fit)
    record["config"] = {
        "command": "rates", "in": args.infile, "target_exponent": args.target_exponent,
        "tol": args.tol, "column": args.column,
    }
    print(json.dumps(record, indent=2))
    return 0 if fit.within_tolerance else 2


def _cmd_test(args) -> int:
    holder = _holder(args)
    config = testing.TestConfig(p=args.p, r_n=args.rn, holder=holder, n=args.n)
    alternatives = testing.default_alternatives(config)
    rows = testing.decision_table(config, alternatives, args.reps, args.seed, args.grid)
    with open(args.out, "w") as fh:
        fh.write("hypothesis,rep,statistic,decision\n")
        for label, rep, stat, dec in rows:
            fh.write(f"{label},{rep},{stat:.17g},{dec}\n")
    _write_sidecar(args.out, {
        "command": "test", "p": args.p, "beta": args.beta, "radius": args.radius,
        "n": args.n, "rn": args.rn, "reps": args.reps, "seed": args.seed, "grid": args.grid,
        "alternatives": {f"alt{i}": boundary_spec_string(g) for i, g in enumerate(alternatives)},
        "out": args.out,
    })
    return 0


def _cmd_lowerbound(args) -> int:
    holder = _holder(args)
    base = parse_boundary(args.base, holder)
    if (args.m is None) == (args.r_target is None):
        raise ValueError("give exactly one of --m or --r-target")
    if args.m is None:
        probe = lowerbound.PriorConfig(
            m=1, c=args.c, holder=holder, weights=(1.0,), base=base
        )
        m, _h = lowerbound.prior_geometry(probe, args.r_target, args.p)
    else:
        m = args.m
    if args.weights == "uniform":
        weights = lowerbound.uniform_weights(m)
    else:
        weights = lowerbound.matched_weights(m, power_functional(args.p), base)
    config = lowerbound.PriorConfig(m=m, c=args.c, holder=holder, weights=weights, base=base)
    report = lowerbound.chi2_certificate(config, args.n, args.reps, args.seed)
    record = dataclasses.asdict(report)
    record["m"] = m
    record["config"] = {
        "command": "lowerbound", "beta": args.beta, "radius": args.radius, "n": args.n,
        "m": m, "r_target": args.r_target, "c": args.c, "weights": args.weights,
        "p": args.p, "base": args.base, "reps": args.reps, "seed": args.seed,
    }
    print(json.dumps(record, indent=2))
    return 0


def _cmd_check_interp(args) -> int:
    holder = _holder(args)
    corpus = certified_corpus(args.corpus, holder, args.seed)
    lines = ["case,lhs,rhs,holds"]
    violations = 0
    for i, f in enumerate(corpus):
        res = bounds.interpolation_check(f, args.p, args.grid)
        lines.append(f"{i},{res.lhs:.17g},{res.rhs:.17g},{int(res.holds)}")
        if not res.holds:
            violations += 1
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        _write_sidecar(args.out, {
            "command": "check interp", "corpus": args.corpus, "beta": args.beta,
            "radius": args.radius, "p": args.p, "seed": args.seed, "grid": args.grid,
            "violations": violations,
        })
    else:
        sys.stdout.write(text)
    if violations:
        sys.stderr.write(f"check interp: {violations} violation(s)\n")
        return 2
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "simulate": _cmd_simulate,
        "envelope": _cmd_envelope,
        "estimate": _cmd_estimate,
        "mc": _cmd_mc,
        "rates": _cmd_rates,
        "test": _cmd_test,
        "lowerbound": _cmd_lowerbound,
    }
    try:
        if args.command == "check":
            return _cmd_check_interp(args)
        return handlers[args.command](args)
    except (ValueError, FileNotFoundError) as exc:
        sys.stderr.write(f"boundary-lab {args.command}: error: {exc}\n")
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()

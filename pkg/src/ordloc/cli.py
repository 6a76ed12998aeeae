"""``ordloc`` command line.  Every command is a thin wrapper over library calls."""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from typing import Sequence

from .calibrate import Calibration, CalibrationError
from .checks import BUDGETS, SUITES, run_check
from .data import IngestError, bundled_path, ingest, load_reference, reduce, run_estimate_table
from .estimate import KINDS, all_estimates, canonical_kind
from .family import ObservationPair, make_family
from .loss import make_loss
from .numerics import NumericalError, QuadSpec, RootSpec
from .risklab import DEFAULT_SEED, SweepConfig, SweepError, gpn_sweep, parse_theta_grid, risk_sweep

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common options")
    g.add_argument("--family", choices=("normal", "exponential"), default="normal")
    g.add_argument("--sigma", type=float, default=1.0)
    g.add_argument("--loss", choices=("squared", "linex", "absolute"), default="squared")
    g.add_argument("--linex-a", type=float, default=None, help="linex shape a (nonzero)")
    g.add_argument("--seed", type=int, default=DEFAULT_SEED, help="RNG seed (default 42)")
    g.add_argument("--out", default=None, help="output file (default stdout)")
    g.add_argument("--format", choices=("csv", "json", "text"), default=None)
    g.add_argument("--quad-tol", type=float, default=None, help="quadrature abs/rel tolerance")
    g.add_argument("--root-tol", type=float, default=None, help="root-finding tolerance")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="ordloc", description=(
        "Estimate the larger of two location parameters: calibration constants, "
        "estimators, Monte Carlo risk and Pitman-nearness sweeps."))
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("calibrate", parents=[common], help="constants and curves as JSON")
    p.add_argument("--u", default="", help="comma-separated u values for the curves")

    p = sub.add_parser("estimate", parents=[common], help="estimates for one observed pair")
    p.add_argument("--x1", type=float, required=True)
    p.add_argument("--x2", type=float, required=True)
    p.add_argument("--all", action="store_true", help="every estimator kind (default: the four main ones)")
    p.add_argument("--estimators", default=None, help="comma-separated estimator kinds")

    p = sub.add_parser("risk-sweep", parents=[common], help="MC risk curves (CSV)")
    p.add_argument("--theta", default="0:5:0.25", help="start:stop:step or comma list")
    p.add_argument("--reps", type=int, default=50000)
    p.add_argument("--estimators", default="natural,stein,b0,bz")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--block-size", type=int, default=10000)

    p = sub.add_parser("gpn-sweep", parents=[common], help="MC generalized Pitman nearness (CSV)")
    p.add_argument("--est1", required=True)
    p.add_argument("--est2", required=True)
    p.add_argument("--theta", default="0:5:0.25")
    p.add_argument("--reps", type=int, default=50000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--block-size", type=int, default=10000)

    p = sub.add_parser("ingest", parents=[common], help="two-sample data to an estimate table")
    p.add_argument("--data", nargs="+", default=None,
                   help="group,value CSV, or two one-column files (default: bundled jute data)")
    p.add_argument("--reduction", choices=("raw_pair", "sample_minimum"), default=None)
    p.add_argument("--sigma-hat", type=float, default=None,
                   help="scale of one observation (default 322 for the bundled data)")
    p.add_argument("--losses", default="squared,linex:-1,absolute",
                   help="comma list; linex takes its shape as linex:a")
    p.add_argument("--json-out", default=None, help="full-precision JSON sidecar path")

    p = sub.add_parser("check", parents=[common], help="run invariant suites")
    p.add_argument("suite", nargs="?", choices=(*SUITES, "all"), default="all")
    p.add_argument("--budget", choices=tuple(BUDGETS), default="quick")
    p.add_argument("--workers", type=int, default=1)
    return parser


def _loss(args):
    if args.loss == "linex" and args.linex_a is None:
        raise UsageError("--loss linex needs --linex-a")
    try:
        return make_loss(args.loss, args.linex_a if args.loss == "linex" else None)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _calibration(args, family=None, loss=None) -> Calibration:
    try:
        fam = family or make_family(args.family, args.sigma)
        quad = QuadSpec(abs_tol=args.quad_tol, rel_tol=args.quad_tol) if args.quad_tol else None
        root = RootSpec(tol=args.root_tol) if args.root_tol else None
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return Calibration(fam, loss or _loss(args), quad=quad, root=root)


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def _kinds(text: str) -> list[str]:
    return [k.strip() for k in text.split(",") if k.strip()]


def cmd_calibrate(args) -> int:
    cal = _calibration(args)
    doc = cal.summary(_floats(args.u))
    with _output(args.out) as fh:
        fh.write(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK if "errors" not in doc else EXIT_NUMERIC


def cmd_estimate(args) -> int:
    cal = _calibration(args)
    obs = ObservationPair(args.x1, args.x2)
    kinds = KINDS if args.all else _canonical(_kinds(args.estimators or "natural,stein,b0,bz"))
    ests = all_estimates(obs, cal, kinds)
    with _output(args.out) as fh:
        if args.format == "json":
            doc = {"x1": obs.x1, "x2": obs.x2, "u": obs.u, "family": args.family, "sigma": args.sigma,
                   "loss": cal.loss.label,
                   "estimates": {e.kind: {"value": e.value, "shrink": e.shrink} for e in ests.values()}}
            fh.write(json.dumps(doc, indent=2) + "\n")
        else:
            fh.write(f"x1={obs.x1:g} x2={obs.x2:g} u={obs.u:g}  {args.family}(sigma={args.sigma:g}) "
                     f"{cal.loss.label}\n")
            for e in ests.values():
                fh.write(f"{e.kind:<20} {e.value:>14.6f}   shrink {e.shrink:.6f}\n")
    return EXIT_OK


def _sweep_config(args, estimators) -> SweepConfig:
    cal = _calibration(args)
    try:
        return SweepConfig(parse_theta_grid(args.theta), cal.family, cal.loss, estimators,
                           reps=args.reps, seed=args.seed, block_size=args.block_size,
                           workers=args.workers, calibration=cal)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _canonical(names):
    try:
        return [canonical_kind(n) for n in names]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_risk_sweep(args) -> int:
    cfg = _sweep_config(args, _canonical(_kinds(args.estimators)))
    curve = risk_sweep(cfg)
    with _output(args.out) as fh:
        if args.format == "json":
            fh.write(json.dumps({"theta": curve.theta, "risk": curve.risk, "se": curve.se,
                                 "reps": curve.reps, "seed": curve.seed}) + "\n")
        else:
            curve.write_csv(fh)
    return EXIT_OK


def cmd_gpn_sweep(args) -> int:
    est1, est2 = _canonical([args.est1, args.est2])
    cfg = _sweep_config(args, [est1, est2])
    curve = gpn_sweep(cfg, est1, est2)
    with _output(args.out) as fh:
        if args.format == "json":
            fh.write(json.dumps({"theta": curve.theta, "gpn": curve.gpn, "tie_fraction": curve.tie_fraction,
                                 "se": curve.se, "reps": curve.reps, "seed": curve.seed}) + "\n")
        else:
            curve.write_csv(fh)
    return EXIT_OK


def _parse_losses(text: str):
    out = []
    for item in _kinds(text):
        name, _, a = item.partition(":")
        try:
            out.append(make_loss(name, float(a) if a else None))
        except ValueError as exc:
            raise UsageError(f"bad loss {item!r}: {exc}") from exc
    return out


def cmd_ingest(args) -> int:
    bundled = args.data is None
    paths = [str(bundled_path())] if bundled else args.data
    fmt = "two_column_csv" if len(paths) == 1 else "two_files"
    ds = ingest(paths[0] if fmt == "two_column_csv" else paths, fmt, args.reduction)
    family = "exponential" if ds.reduction.value == "sample_minimum" else args.family
    sigma_hat = args.sigma_hat if args.sigma_hat is not None else (322.0 if bundled else args.sigma)
    pair, sigma_eff = reduce(ds, make_family(family, sigma_hat))
    reference = load_reference() if bundled else None
    table = run_estimate_table(pair, sigma_eff, _parse_losses(args.losses), family=family,
                               reference=reference)
    with _output(args.out) as fh:
        if args.format == "json":
            fh.write(table.to_json() + "\n")
        else:
            counts = ", ".join(f"{lab}: n={len(g)}" for lab, g in zip(ds.labels, ds.groups))
            fh.write(f"groups {counts}; reduction {ds.reduction.value}\n")
            fh.write(table.text() + "\n")
    if args.json_out:
        with open(args.json_out, "w") as fh:
            fh.write(table.to_json() + "\n")
    return EXIT_OK


def cmd_check(args) -> int:
    report = run_check(args.suite, args.budget, args.workers,
                       progress=lambda r: print(r.line(), flush=True) if args.out is None else None)
    if args.out is not None:
        with open(args.out, "w") as fh:
            fh.write(report.text() + "\n")
    print(report.text().splitlines()[-1])
    return EXIT_OK if report.passed else EXIT_CHECK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "estimate": cmd_estimate,
    "risk-sweep": cmd_risk_sweep,
    "gpn-sweep": cmd_gpn_sweep,
    "ingest": cmd_ingest,
    "check": cmd_check,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, IngestError) as exc:
        print(f"ordloc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CalibrationError, NumericalError, SweepError) as exc:
        print(f"ordloc: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

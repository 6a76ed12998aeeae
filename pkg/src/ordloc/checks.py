"""Invariant suites runnable from the command line (``ordloc check``)."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .calibrate import T_LIMIT_SIGMAS, Calibration
from .estimate import ierd_check
from .family import make_family
from .loss import LossSpec, make_loss
from .risklab import SweepConfig, dominance_report, gpn_sweep, parse_theta_grid, risk_sweep

SUITES = ("calibration", "dominance", "gpn")
BUDGETS = {
    "quick": {"reps": 5000, "theta": "0:5:1", "seed": 42},
    "full": {"reps": 50000, "theta": "0:5:0.25", "seed": 42},
}
THETAS = (0.0, 0.5, 1.0, 2.0, 5.0)
US = (0.01, 0.5, 1.27, 3.0, 7.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    observed: str = ""
    expected: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        detail = f"  observed {self.observed}; expected {self.expected}" if not self.passed else ""
        return f"[{tag}] {self.name}{detail}"


@dataclass
class CheckReport:
    results: list[CheckResult] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def text(self) -> str:
        n_fail = sum(not r.passed for r in self.results)
        lines = [r.line() for r in self.results]
        lines.append(f"{len(self.results) - n_fail}/{len(self.results)} checks passed "
                     f"in {self.seconds:.1f}s")
        return "\n".join(lines)


def standard_configs() -> list[tuple[str, float, LossSpec]]:
    """Built-in (family, sigma, loss) triples used by the suites.

    Exponential linex needs a*sigma < 1 for c0 and b0 to exist, hence
    sigma = 0.5 with a = 1.
    """
    return [
        ("normal", 1.0, make_loss("squared")),
        ("normal", 1.0, make_loss("linex", 1.0)),
        ("normal", 1.0, make_loss("absolute")),
        ("exponential", 1.0, make_loss("squared")),
        ("exponential", 0.5, make_loss("linex", 1.0)),
        ("exponential", 1.0, make_loss("absolute")),
    ]


def _tag(fam: str, sigma: float, loss: LossSpec) -> str:
    return f"{fam}(sigma={sigma:g}) {loss.label}"


def calibration_suite() -> Iterable[CheckResult]:
    for fam_name, sigma, loss in standard_configs():
        fam = make_family(fam_name, sigma)
        tag = _tag(fam_name, sigma, loss)
        closed = Calibration(fam, loss)
        numeric = Calibration(fam, loss, closed_form=False)

        gaps = [abs(closed.c0 - numeric.c0), abs(closed.b0 - numeric.b0), abs(closed.m0 - numeric.m0)]
        for u in US:
            gaps += [abs(closed.c_zero_u(u) - numeric.c_zero_u(u)),
                     abs(closed.phi_bz(u) - numeric.phi_bz(u)),
                     abs(closed.m_zero_u(u) - numeric.m_zero_u(u))]
        worst = max(gaps)
        yield CheckResult(f"{tag}: closed form matches quadrature", worst <= 1e-6,
                          f"max gap {worst:.2e}", "<= 1e-6")

        bad = []
        for th in THETAS:
            for u in US:
                if closed.c_theta_u(th, u) > closed.c_zero_u(u) + 1e-8:
                    bad.append(("c", th, u))
                if closed.m_theta_u(th, u) > closed.m_zero_u(u) + 1e-8:
                    bad.append(("m", th, u))
        yield CheckResult(f"{tag}: c(theta,u) <= c(0,u) and m(theta,u) <= m(0,u)", not bad,
                          f"violations at {bad[:3]}", "none")

        big = T_LIMIT_SIGMAS * fam.sigma
        bts = [closed.b_theta(th) for th in (*THETAS, big)]
        in_band = all(closed.c0 - 1e-8 <= b <= closed.b0 + 1e-8 for b in bts)
        lim = abs(bts[-1] - closed.c0)
        yield CheckResult(f"{tag}: c0 <= b_theta <= b0, b_theta -> c0", in_band and lim <= 1e-4,
                          f"band {in_band}, |b_50sigma - c0| = {lim:.2e}", "band holds, gap <= 1e-4")

        ts = list(np.linspace(0.05, 10.0, 50) * fam.sigma)
        rep = ierd_check(closed.phi_bz, closed, ts)
        yield CheckResult(f"{tag}: phi_BZ satisfies the improvement conditions", rep.passed,
                          f"monotone={rep.monotone} limit_gap={rep.limit_gap:.2e} "
                          f"max k1={rep.worst_integral:.2e}", "all three conditions")

        if fam_name == "normal" and loss.kind.value in ("squared", "absolute"):
            grid = np.linspace(1e-3, 10.0, 200)
            d_st = np.max(np.abs(closed.shrink_fn("stein")(grid) - closed.shrink_fn("natural")(grid)))
            d_pn = np.max(np.abs(closed.shrink_fn("pitman_improved_m0")(grid)
                                 - closed.shrink_fn("pitman_nearest")(grid)))
            yield CheckResult(f"{tag}: Stein and improved Pitman coincide with the usual estimators",
                              max(d_st, d_pn) <= 1e-12, f"max gap {max(d_st, d_pn):.2e}", "<= 1e-12")


def dominance_suite(budget: str = "quick", workers: int = 1) -> Iterable[CheckResult]:
    b = BUDGETS[budget]
    grid = parse_theta_grid(b["theta"])
    for fam_name, sigma, loss in standard_configs():
        fam = make_family(fam_name, sigma)
        tag = _tag(fam_name, sigma, loss)
        cfg = SweepConfig(grid, fam, loss, ["natural", "stein", "b0", "brewster_zidek"],
                          reps=b["reps"], seed=b["seed"], workers=workers)
        curve = risk_sweep(cfg)
        st = dominance_report(curve, "natural", "stein")
        bz = dominance_report(curve, "b0", "brewster_zidek")
        degenerate = fam_name == "normal" and loss.kind.value != "linex"
        want = "dominates" if not degenerate else "within-noise"
        yield CheckResult(f"{tag}: Stein vs natural ({b['reps']} reps)",
                          st.verdict == want, st.verdict, want)
        yield CheckResult(f"{tag}: Brewster-Zidek vs b0 ({b['reps']} reps)",
                          bz.no_violation, bz.verdict, "no violation")


def gpn_suite(budget: str = "quick", workers: int = 1) -> Iterable[CheckResult]:
    b = BUDGETS[budget]
    grid = parse_theta_grid(b["theta"])
    for fam_name, sigma, loss in standard_configs():
        fam = make_family(fam_name, sigma)
        tag = _tag(fam_name, sigma, loss)
        cfg = SweepConfig(grid, fam, loss, reps=b["reps"], seed=b["seed"], workers=workers)
        g = gpn_sweep(cfg, "pitman_improved_m0", "pitman_nearest")
        lo = min(x - 0.5 + 2 * s for x, s in zip(g.gpn, g.se))
        strict = any(x > 0.5 + 2 * s for x, s in zip(g.gpn, g.se))
        if fam_name == "exponential":
            ok = lo >= 0 and strict
            want = "gpn >= 0.5 - 2se everywhere, > 0.5 + 2se somewhere"
        else:
            ok = all(x == 0.5 for x in g.gpn)
            want = "gpn = 0.5 exactly"
        yield CheckResult(f"{tag}: improved Pitman vs Pitman nearest, GPN", ok,
                          f"gpn range [{min(g.gpn):.4f}, {max(g.gpn):.4f}]", want)
    fam = make_family("exponential", 1.0)
    g = gpn_sweep(SweepConfig(grid, fam, make_loss("squared"), reps=b["reps"], seed=b["seed"]),
                  "stein", "stein")
    yield CheckResult("GPN of an estimator against itself", all(x == 0.5 for x in g.gpn),
                      f"{g.gpn}", "0.5 exactly")


def run_check(suite: str = "all", budget: str = "quick", workers: int = 1,
              progress: Callable[[CheckResult], None] | None = None) -> CheckReport:
    if suite not in (*SUITES, "all"):
        raise ValueError(f"unknown suite {suite!r}")
    if budget not in BUDGETS:
        raise ValueError(f"unknown budget {budget!r}")
    t0 = time.perf_counter()
    report = CheckReport()
    runners = {
        "calibration": lambda: calibration_suite(),
        "dominance": lambda: dominance_suite(budget, workers),
        "gpn": lambda: gpn_suite(budget, workers),
    }
    for name in SUITES if suite == "all" else (suite,):
        for res in runners[name]():
            report.results.append(res)
            if progress:
                progress(res)
    report.seconds = time.perf_counter() - t0
    return report

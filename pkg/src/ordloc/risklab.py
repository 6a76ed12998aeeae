"""Monte Carlo risk and generalized Pitman nearness curves over theta = theta_(2) - theta_(1).

All estimators in a sweep see the same draws (common random numbers), so
risk differences are estimated from paired losses.  Draws for theta index
``i`` and replication block ``b`` come from
``SeedSequence(seed, spawn_key=(i, b))``; neither thread scheduling nor the
order of evaluation can change them.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, TextIO, Union

import numpy as np

from .calibrate import Calibration
from .estimate import canonical_kind
from .family import LocationFamily
from .loss import LossSpec
from .numerics import NumericalError

# (x1, x2, theta) -> estimate; for test-only estimators such as the oracle
CustomEstimator = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
EstimatorSpec = Union[str, tuple[str, CustomEstimator]]

TIE_TOL = 1e-12
DEFAULT_SEED = 42


class SweepError(RuntimeError):
    pass


@dataclass
class SweepConfig:
    theta_grid: Sequence[float]
    family: LocationFamily
    loss: LossSpec
    estimators: Sequence[EstimatorSpec] = ("natural", "stein", "b0", "brewster_zidek")
    reps: int = 50000
    seed: int = DEFAULT_SEED
    block_size: int = 10000
    workers: int = 1
    calibration: Calibration | None = None

    def __post_init__(self):
        self.theta_grid = [float(t) for t in self.theta_grid]
        if any(t < 0 for t in self.theta_grid):
            raise ValueError("theta grid must be nonnegative (theta_1 is fixed at 0)")
        if self.reps < 2:
            raise ValueError("reps must be >= 2")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        self.seed = int(self.seed) & 0xFFFFFFFFFFFFFFFF


def parse_theta_grid(text: str) -> list[float]:
    """``"0:5:0.25"`` (inclusive start:stop:step) or a comma list ``"0,1,2"``."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("theta step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(n)]
    return [float(x) for x in text.split(",") if x.strip()]


def draw_pairs(cfg: SweepConfig, theta_index: int) -> tuple[np.ndarray, np.ndarray]:
    """Standard draws (eps1, eps2) for one theta grid point."""
    e1, e2 = [], []
    done, block = 0, 0
    while done < cfg.reps:
        n = min(cfg.block_size, cfg.reps - done)
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(theta_index, block)))
        e1.append(cfg.family.sampler(rng, n))
        e2.append(cfg.family.sampler(rng, n))
        done += n
        block += 1
    return np.concatenate(e1), np.concatenate(e2)


def _resolve(cfg: SweepConfig) -> tuple[Calibration, list[tuple[str, Callable]]]:
    cal = cfg.calibration or Calibration(cfg.family, cfg.loss)
    resolved = []
    for spec in cfg.estimators:
        if isinstance(spec, tuple):
            name, fn = spec
            resolved.append((name, ("custom", fn)))
            continue
        kind = canonical_kind(spec)
        try:
            shrink = cal.shrink_fn(kind)  # builds any tables before threads start
        except (ValueError, NumericalError) as exc:
            raise SweepError(f"calibration failed for {cfg.family!r} with {cfg.loss!r} "
                             f"({kind}): {exc}") from exc
        resolved.append((kind, ("shrink", shrink)))
    names = [n for n, _ in resolved]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate estimators in {names}")
    return cal, resolved


def _losses(cfg: SweepConfig, resolved, theta_index: int) -> np.ndarray:
    theta = cfg.theta_grid[theta_index]
    eps1, eps2 = draw_pairs(cfg, theta_index)
    x1, x2 = eps1, theta + eps2
    x_max = np.maximum(x1, x2)
    u = np.abs(x2 - x1)
    out = np.empty((len(resolved), cfg.reps))
    with np.errstate(over="ignore"):
        for k, (_, (how, fn)) in enumerate(resolved):
            est = x_max - fn(u) if how == "shrink" else np.asarray(fn(x1, x2, theta), float)
            out[k] = cfg.loss.w(est - theta)
    return out


def _map(cfg: SweepConfig, fn):
    idx = range(len(cfg.theta_grid))
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            return list(pool.map(fn, idx))
    return [fn(i) for i in idx]


@dataclass
class RiskCurve:
    theta: list[float]
    estimators: list[str]
    risk: dict[str, list[float]]
    se: dict[str, list[float]]
    cov: list[np.ndarray] = field(repr=False)
    reps: int
    seed: int

    def paired_se(self, a: str, b: str, i: int) -> float:
        ia, ib = self.estimators.index(a), self.estimators.index(b)
        c = self.cov[i]
        var = c[ia, ia] + c[ib, ib] - 2.0 * c[ia, ib]
        return math.sqrt(max(var, 0.0) / self.reps)

    def rows(self):
        for i, t in enumerate(self.theta):
            for name in self.estimators:
                yield (t, name, self.risk[name][i], self.se[name][i], self.reps, self.seed)

    def write_csv(self, fh: TextIO) -> None:
        _write(fh, ("theta", "estimator", "risk", "se", "reps", "seed"), self.rows())

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def risk_sweep(cfg: SweepConfig) -> RiskCurve:
    """Risk E[W(delta - theta_(2))] of each estimator at each theta, with standard errors."""
    _, resolved = _resolve(cfg)
    names = [n for n, _ in resolved]

    def one(i):
        L = _losses(cfg, resolved, i)
        return L.mean(axis=1), np.atleast_2d(np.cov(L))

    results = _map(cfg, one)
    risk = {n: [] for n in names}
    se = {n: [] for n in names}
    covs = []
    for means, cov in results:
        covs.append(cov)
        for k, n in enumerate(names):
            risk[n].append(float(means[k]))
            se[n].append(math.sqrt(max(cov[k, k], 0.0) / cfg.reps))
    return RiskCurve(list(cfg.theta_grid), names, risk, se, covs, cfg.reps, cfg.seed)


@dataclass
class GPNCurve:
    theta: list[float]
    gpn: list[float]
    tie_fraction: list[float]
    se: list[float]
    reps: int
    seed: int
    est1: str = ""
    est2: str = ""

    def rows(self):
        for i, t in enumerate(self.theta):
            yield (t, self.gpn[i], self.tie_fraction[i], self.se[i], self.reps, self.seed)

    def write_csv(self, fh: TextIO) -> None:
        _write(fh, ("theta", "gpn", "tie_fraction", "se", "reps", "seed"), self.rows())

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def gpn_sweep(cfg: SweepConfig, est1: EstimatorSpec, est2: EstimatorSpec) -> GPNCurve:
    """P[L1 < L2] + P[L1 = L2] / 2 at each theta; |L1 - L2| <= 1e-12 counts as a tie."""
    sub = SweepConfig(cfg.theta_grid, cfg.family, cfg.loss, [est1, est2], cfg.reps, cfg.seed,
                      cfg.block_size, cfg.workers, cfg.calibration)
    if isinstance(est1, str) and isinstance(est2, str) and canonical_kind(est1) == canonical_kind(est2):
        # same estimator on both sides: every draw is a tie
        sub.estimators = [est1]
    _, resolved = _resolve(sub)

    def one(i):
        L = _losses(sub, resolved, i)
        d = L[0] - L[-1]
        tie = np.abs(d) <= TIE_TOL
        score = np.where(tie, 0.5, np.where(d < 0, 1.0, 0.0))
        sd = float(score.std(ddof=1)) if score.size > 1 else 0.0
        return float(score.mean()), float(tie.mean()), sd / math.sqrt(sub.reps)

    results = _map(sub, one)
    names = [n for n, _ in resolved]
    return GPNCurve(list(cfg.theta_grid), [r[0] for r in results], [r[1] for r in results],
                    [r[2] for r in results], cfg.reps, cfg.seed, names[0], names[-1])


@dataclass
class DominanceRow:
    theta: float
    diff: float      # risk(challenger) - risk(baseline)
    se_pair: float
    verdict: str     # "dominates" | "within-noise" | "violated"


@dataclass
class DominanceReport:
    baseline: str
    challenger: str
    rows: list[DominanceRow]

    @property
    def verdict(self) -> str:
        verdicts = {r.verdict for r in self.rows}
        if "violated" in verdicts:
            return "violated"
        return "dominates" if "dominates" in verdicts else "within-noise"

    @property
    def no_violation(self) -> bool:
        return self.verdict != "violated"

    def __str__(self) -> str:
        lines = [f"{self.challenger} vs {self.baseline}: {self.verdict}"]
        for r in self.rows:
            lines.append(f"  theta={r.theta:<8g} diff={r.diff:+.6f}  se={r.se_pair:.6f}  {r.verdict}")
        return "\n".join(lines)


def dominance_report(curve: RiskCurve, baseline: str, challenger: str, k: float = 2.0) -> DominanceReport:
    """Paired 2-se verdict per theta for ``challenger`` against ``baseline``."""
    baseline = _name_in(curve, baseline)
    challenger = _name_in(curve, challenger)
    rows = []
    for i, t in enumerate(curve.theta):
        diff = curve.risk[challenger][i] - curve.risk[baseline][i]
        se = curve.paired_se(baseline, challenger, i)
        if diff < 0 and diff <= -k * se:
            verdict = "dominates"
        elif diff > 0 and diff > k * se:
            verdict = "violated"
        else:
            verdict = "within-noise"
        rows.append(DominanceRow(t, diff, se, verdict))
    return DominanceReport(baseline, challenger, rows)


def _name_in(curve: RiskCurve, name: str) -> str:
    if name in curve.estimators:
        return name
    kind = canonical_kind(name)
    if kind not in curve.estimators:
        raise KeyError(f"{name!r} not in sweep ({curve.estimators})")
    return kind


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _write(fh: TextIO, header, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])

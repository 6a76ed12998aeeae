"""Equivariant estimators X_(2) - phi(U) of the larger location parameter."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .calibrate import T_LIMIT_SIGMAS, U_FLOOR, Calibration
from .family import ObservationPair

KINDS = (
    "natural",
    "stein",
    "b0",
    "brewster_zidek",
    "pitman_nearest",
    "pitman_improved_m0",
    "pitman_improved_c0",
)

ALIASES = {
    "c0": "natural",
    "st": "stein",
    "bz": "brewster_zidek",
    "pn": "pitman_nearest",
    "pn_m0": "pitman_improved_m0",
    "pn_c0": "pitman_improved_c0",
}


def canonical_kind(name: str) -> str:
    kind = ALIASES.get(name, name)
    if kind not in KINDS:
        raise ValueError(f"unknown estimator {name!r}; choose from {list(KINDS)} or {sorted(ALIASES)}")
    return kind


@dataclass(frozen=True)
class Estimate:
    kind: str
    value: float
    shrink: float


def _make(kind: str, obs: ObservationPair, shrink: float) -> Estimate:
    return Estimate(kind, obs.x_max - shrink, shrink)


def natural(obs: ObservationPair, cal: Calibration) -> Estimate:
    return _make("natural", obs, cal.c0)


def stein(obs: ObservationPair, cal: Calibration) -> Estimate:
    """Truncate the natural shrink at the theta = 0 conditional minimizer."""
    return _make("stein", obs, min(cal.c0, cal.c_zero_u(obs.u)))


def b0_estimator(obs: ObservationPair, cal: Calibration) -> Estimate:
    return _make("b0", obs, cal.b0)


def brewster_zidek(obs: ObservationPair, cal: Calibration) -> Estimate:
    return _make("brewster_zidek", obs, cal.phi_bz(max(obs.u, U_FLOOR)))


def pitman_nearest(obs: ObservationPair, cal: Calibration) -> Estimate:
    return _make("pitman_nearest", obs, cal.m0)


def pitman_improved(obs: ObservationPair, cal: Calibration, anchor: str = "m0") -> Estimate:
    if anchor not in ("m0", "c0"):
        raise ValueError("anchor must be 'm0' or 'c0'")
    base = cal.m0 if anchor == "m0" else cal.c0
    return _make(f"pitman_improved_{anchor}", obs, min(base, cal.m_zero_u(obs.u)))


def custom_equivariant(obs: ObservationPair, phi: Callable[[float], float]) -> Estimate:
    return _make("custom_phi", obs, float(phi(obs.u)))


_DISPATCH = {
    "natural": natural,
    "stein": stein,
    "b0": b0_estimator,
    "brewster_zidek": brewster_zidek,
    "pitman_nearest": pitman_nearest,
    "pitman_improved_m0": lambda o, c: pitman_improved(o, c, "m0"),
    "pitman_improved_c0": lambda o, c: pitman_improved(o, c, "c0"),
}


def estimate(kind: str, obs: ObservationPair, cal: Calibration) -> Estimate:
    return _DISPATCH[canonical_kind(kind)](obs, cal)


def all_estimates(obs: ObservationPair, cal: Calibration,
                  kinds: Sequence[str] = KINDS) -> dict[str, Estimate]:
    return {k: estimate(k, obs, cal) for k in kinds}


@dataclass
class IERDReport:
    """Outcome of checking the three sufficient conditions for improving on X_(2) - b0."""

    monotone: bool
    limit_ok: bool
    integral_ok: bool
    limit_value: float
    limit_gap: float
    t_grid: list[float]
    phi_values: list[float]
    integrals: list[float] = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.monotone and self.limit_ok and self.integral_ok

    @property
    def worst_integral(self) -> float:
        return max(self.integrals)


def ierd_check(phi: Callable[[float], float], cal: Calibration, t_grid: Sequence[float], *,
               limit_tol: float = 1e-3, integral_tol: float = 1e-8,
               monotone_tol: float = 1e-9) -> IERDReport:
    """Check phi on a grid: (i) nondecreasing, (ii) phi(50 sigma) ~ b0,
    (iii) k1(phi(t) | t) <= 0 at every grid t.

    ``monotone_tol`` absorbs quadrature noise on flat stretches of phi.
    """
    ts = [float(t) for t in t_grid]
    if any(t <= 0 for t in ts) or ts != sorted(ts):
        raise ValueError("t_grid must be sorted and positive")
    values = [float(phi(t)) for t in ts]
    monotone = all(b >= a - monotone_tol for a, b in zip(values, values[1:]))
    t_max = T_LIMIT_SIGMAS * cal.sigma
    limit_value = float(phi(t_max))
    gap = abs(limit_value - cal.b0)
    integrals = [cal.k1(v, t) for v, t in zip(values, ts)]
    return IERDReport(
        monotone=monotone,
        limit_ok=gap <= limit_tol,
        integral_ok=all(math.isfinite(k) and k <= integral_tol for k in integrals),
        limit_value=limit_value,
        limit_gap=gap,
        t_grid=ts,
        phi_values=values,
        integrals=integrals,
    )


def shrink_array(kind: str, u: np.ndarray, cal: Calibration) -> np.ndarray:
    return cal.shrink_fn(canonical_kind(kind))(u)

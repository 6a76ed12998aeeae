"""Shrinkage constants and curves for estimators of max(theta1, theta2).

Every quantity is the Bayes action of ``W`` against some weight on the
line: the root in ``c`` of ``int W'(z - c) pi(z) dz = 0`` or, for the
absolute loss, the median of ``pi``.

==========  ===================================================================
quantity    weight ``pi(z)``
==========  ===================================================================
c0          f(z)
b_theta     F(z + theta) f(z) + F(z) f(z + theta)       (b0 = b_theta at 0)
c(theta,u)  f(z - u + theta) f(z) + f(z - u) f(z + theta)
phi_bz(t)   [F(z) - F(z - t)] f(z)
m0          f(z), always the median
m(theta,u)  as c(theta,u), always the median
==========  ===================================================================

The generic path (quadrature + Brent) works for any family.  Closed forms
for the normal and exponential families override it in :class:`Calibration`
unless ``closed_form=False``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import interpolate, special

from .family import LocationFamily
from .loss import LossKind, LossSpec
from .numerics import (
    DEFAULT_QUAD,
    DEFAULT_ROOT,
    QuadSpec,
    RootSpec,
    integrate,
    solve_root,
)

U_FLOOR = 1e-9
T_LIMIT_SIGMAS = 50.0
_LN2 = math.log(2.0)


class CalibrationError(ValueError):
    """A constant is undefined for this (family, loss), e.g. a divergent integral."""


# ---------------------------------------------------------------------------
# weights


class Weight:
    """Unnormalized density written as a sum of pieces ``(fn, lo, hi)``.

    Each piece is integrated over its own interval so that support edges
    (the exponential's jump at 0, kinks at ``z = u``) are never crossed.
    """

    def __init__(self, pieces: Sequence[tuple[Callable[[float], float], float, float]],
                 center: float, scale: float, points: Iterable[float] = (),
                 quad: QuadSpec | None = None, root: RootSpec | None = None):
        self.pieces = [(fn, lo, hi) for fn, lo, hi in pieces if lo < hi]
        if not self.pieces:
            raise CalibrationError("weight has empty support")
        self.center = float(center)
        self.scale = float(scale)
        self.points = tuple(p for p in points if math.isfinite(p))
        self.quad = quad or DEFAULT_QUAD
        self.root = root or DEFAULT_ROOT

    def _spec(self, lo, hi, extra=(), abs_tol=None):
        pts = [p for p in (self.center, *self.points, *extra) if lo < p < hi]
        return QuadSpec(self.quad.abs_tol if abs_tol is None else abs_tol,
                        self.quad.rel_tol, self.quad.max_depth, tuple(pts))

    @cached_property
    def mass(self) -> float:
        total = 0.0
        for fn, lo, hi in self.pieces:
            # pure relative tolerance: the mass can be tiny (small t, far tails)
            total += integrate(fn, lo, hi, self._spec(lo, hi, abs_tol=0.0))
        if not total > 0.0:
            raise CalibrationError("weight has zero mass")
        return total

    def density(self, z: float) -> float:
        return sum(fn(z) for fn, lo, hi in self.pieces if lo <= z <= hi) / self.mass

    def expect(self, h: Callable[[float], float], extra_points: Sequence[float] = ()) -> float:
        """E[h(Z)] under the normalized weight."""
        m = self.mass

        def integrand(z, fn):
            wz = fn(z)
            # QAGI probes |z| ~ 1e300 where h may overflow against a zero weight
            return 0.0 if wz == 0.0 else h(z) * wz / m

        total = 0.0
        with np.errstate(over="ignore"):
            for fn, lo, hi in self.pieces:
                total += integrate(lambda z, fn=fn: integrand(z, fn), lo, hi,
                                   self._spec(lo, hi, extra_points))
        return total

    def cdf(self, c: float) -> float:
        m = self.mass
        total = 0.0
        for fn, lo, hi in self.pieces:
            if c <= lo:
                continue
            top = min(c, hi)
            total += integrate(lambda z, fn=fn: fn(z) / m, lo, top, self._spec(lo, top))
        return total

    def quantile(self, p: float) -> float:
        lo_support = min(lo for _, lo, _ in self.pieces)
        a = max(self.center - 2 * self.scale, lo_support)
        b = max(self.center + 2 * self.scale, a + self.scale)
        return solve_root(lambda c: self.cdf(c) - p, a, b, self.root)

    def median(self) -> float:
        return self.quantile(0.5)

    def score(self, loss: LossSpec, c: float) -> float:
        """E[W'(Z - c)]; decreasing in c."""
        return self.expect(lambda z: loss.w_prime(z - c), extra_points=(c,))

    def bayes_action(self, loss: LossSpec) -> float:
        """Minimizer of E[W(Z - c)] over c."""
        if loss.kind is LossKind.ABSOLUTE:
            return self.median()
        a, b = self.center - 2 * self.scale, self.center + 2 * self.scale
        return solve_root(lambda c: self.score(loss, c), a, b, self.root)


class ConditionalPosterior(Weight):
    """Conditional law of X_(2) - theta_(2) given U = u, with theta = theta_(2) - theta_(1).

    Unnormalized density ``f(z - u + theta) f(z) + f(z - u) f(z + theta)``;
    :attr:`normalizer` is its integral.
    """

    def __init__(self, family: LocationFamily, theta: float, u: float,
                 quad: QuadSpec | None = None, root: RootSpec | None = None):
        if theta < 0:
            raise ValueError("theta must be >= 0")
        if not u > 0:
            raise ValueError("u must be > 0")
        self.family, self.theta, self.u = family, float(theta), float(u)
        f = family.pdf
        lo, hi = family.support_lo, family.support_hi
        s = u - theta
        if theta == 0.0:
            pieces = [(lambda z: f(z - u) * f(z), max(lo, lo + u), min(hi, hi + u))]
        else:
            pieces = [
                (lambda z: f(z - s) * f(z), max(lo, lo + s), min(hi, hi + s)),
                (lambda z: f(z - u) * f(z + theta), max(lo + u, lo - theta), min(hi + u, hi - theta)),
            ]
        super().__init__(pieces, center=family.median + 0.5 * s, scale=family.scale,
                         points=(lo + u, lo + s), quad=quad, root=root)

    @property
    def normalizer(self) -> float:
        return self.mass


def _density_weight(family, quad=None, root=None) -> Weight:
    return Weight([(family.pdf, family.support_lo, family.support_hi)],
                  family.median, family.scale, quad=quad, root=root)


def _order_weight(family, theta, quad=None, root=None) -> Weight:
    """g_theta, the density of X_(2) - theta_(2)."""
    f, F = family.pdf, family.cdf
    lo, hi = family.support_lo, family.support_hi
    if theta == 0.0:
        pieces = [(lambda z: 2.0 * F(z) * f(z), lo, hi)]
    else:
        pieces = [(lambda z: F(z + theta) * f(z), lo, hi),
                  (lambda z: F(z) * f(z + theta), lo, hi - theta)]
    return Weight(pieces, family.median, family.scale,
                  points=(family.median - theta, lo - theta), quad=quad, root=root)


def _bz_weight(family, t, quad=None, root=None) -> Weight:
    """[F(z) - F(z - t)] f(z), proportional to int_0^t f(z - u) f(z) du."""
    f, prob = family.pdf, family.prob
    lo, hi = family.support_lo, family.support_hi
    return Weight([(lambda z: prob(z - t, z) * f(z), lo, hi)],
                  family.median + 0.5 * t, family.scale,
                  points=(lo + t, family.median), quad=quad, root=root)


# ---------------------------------------------------------------------------
# integrability guards


def _linex_guard(family: LocationFamily, loss: LossSpec, bound: float, what: str):
    """Exponential tails make E[exp(aZ)] finite only for a*sigma < bound."""
    if loss.kind is LossKind.LINEX and family.name == "exponential":
        a_sigma = loss.a * family.params["sigma"]
        if a_sigma >= bound:
            raise CalibrationError(
                f"{what} is undefined for exponential(sigma={family.params['sigma']:g}) "
                f"with linex a={loss.a:g}: needs a*sigma < {bound:g}, got {a_sigma:g}")


# ---------------------------------------------------------------------------
# generic (numeric) path


def c0_numeric(family, loss, quad=None, root=None) -> float:
    _linex_guard(family, loss, 1.0, "c0")
    return _density_weight(family, quad, root).bayes_action(loss)


def c_theta_u_numeric(family, loss, theta, u, quad=None, root=None) -> float:
    _linex_guard(family, loss, 2.0, "c(theta, u)")
    return ConditionalPosterior(family, theta, u, quad, root).bayes_action(loss)


def b_theta_numeric(family, loss, theta, quad=None, root=None) -> float:
    _linex_guard(family, loss, 1.0, "b_theta")
    return _order_weight(family, float(theta), quad, root).bayes_action(loss)


def phi_bz_numeric(family, loss, t, quad=None, root=None) -> float:
    _linex_guard(family, loss, 1.0, "phi_bz")
    return _bz_weight(family, float(t), quad, root).bayes_action(loss)


def m_theta_u_numeric(family, theta, u, quad=None, root=None) -> float:
    return ConditionalPosterior(family, theta, u, quad, root).median()


def k1(family: LocationFamily, loss: LossSpec, c: float, t: float,
       quad: QuadSpec | None = None) -> float:
    """int W'(z - c) [F(z) - F(z - t)] f(z) dz, unnormalized; decreasing in c."""
    w = _bz_weight(family, float(t), quad)
    return w.score(loss, c) * w.mass


# ---------------------------------------------------------------------------
# closed forms


def _ndtr_diff(x, y):
    """Phi(x) - Phi(y) for x >= y, using the upper tail when both are positive."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    return np.where(y > 0, special.ndtr(-y) - special.ndtr(-x), special.ndtr(x) - special.ndtr(y))


def _half_erf(tau):
    """Phi(tau) - 1/2."""
    return 0.5 * special.erf(tau / math.sqrt(2.0))


class _Closed:
    """Closed forms for one (family, loss).  Methods take numpy arrays."""

    def __init__(self, sigma: float, a: float | None):
        self.s, self.a = sigma, a

    c0 = b0 = None
    c_zero_u = phi_bz = None


class _NormalSquared(_Closed):
    def c0(self):
        return 0.0

    def b0(self):
        return self.s / math.sqrt(math.pi)

    def c_zero_u(self, u):
        return 0.5 * u

    def phi_bz(self, t):
        tau = t / (math.sqrt(2.0) * self.s)
        return self.s * (-np.expm1(-0.5 * tau * tau)) / (2.0 * math.sqrt(math.pi) * _half_erf(tau))


class _NormalLinex(_Closed):
    def c0(self):
        return 0.5 * self.a * self.s ** 2

    def b0(self):
        a, s = self.a, self.s
        return (_LN2 + 0.5 * (a * s) ** 2 + float(special.log_ndtr(a * s / math.sqrt(2.0)))) / a

    def c_zero_u(self, u):
        return 0.5 * u + 0.25 * self.a * self.s ** 2

    def phi_bz(self, t):
        a, s = self.a, self.s
        r2s = math.sqrt(2.0) * s
        x = a * s / math.sqrt(2.0)
        num = _ndtr_diff(x, (a * s * s - t) / r2s)
        return (0.5 * (a * s) ** 2 + np.log(num) - np.log(_half_erf(t / r2s))) / a


class _NormalAbsolute(_Closed):
    def c0(self):
        return 0.0

    def b0(self):
        # F(b0)^2 = 1/2
        return self.s * float(special.ndtri(1.0 / math.sqrt(2.0)))

    def c_zero_u(self, u):
        return 0.5 * u


class _ExpSquared(_Closed):
    def c0(self):
        return self.s

    def b0(self):
        return 1.5 * self.s

    def c_zero_u(self, u):
        return u + 0.5 * self.s

    def phi_bz(self, t):
        x = t / self.s
        em = -np.expm1(-x)
        return self.s * (3.0 * em - 2.0 * x * np.exp(-x)) / (2.0 * em)


class _ExpLinex(_Closed):
    def _need(self, bound):
        if self.a * self.s >= bound:
            raise CalibrationError(f"exponential linex needs a*sigma < {bound:g}")

    def c0(self):
        self._need(1.0)
        return -math.log1p(-self.a * self.s) / self.a

    def b0(self):
        self._need(1.0)
        a, s = self.a, self.s
        return (_LN2 - math.log1p(-a * s) - math.log(2.0 - a * s)) / a

    def c_zero_u(self, u):
        self._need(2.0)
        return u - math.log1p(-0.5 * self.a * self.s) / self.a

    def phi_bz(self, t):
        self._need(1.0)
        a, s = self.a, self.s
        x = t / s
        return (self.b0() * a + np.log(-np.expm1(-x * (1.0 - a * s))) - np.log(-np.expm1(-x))) / a


class _ExpAbsolute(_Closed):
    def c0(self):
        return self.s * _LN2

    def b0(self):
        # F(b0)^2 = 1/2
        return -self.s * math.log1p(-1.0 / math.sqrt(2.0))

    def c_zero_u(self, u):
        return u + 0.5 * self.s * _LN2


_CLOSED = {
    ("normal", LossKind.SQUARED): _NormalSquared,
    ("normal", LossKind.LINEX): _NormalLinex,
    ("normal", LossKind.ABSOLUTE): _NormalAbsolute,
    ("exponential", LossKind.SQUARED): _ExpSquared,
    ("exponential", LossKind.LINEX): _ExpLinex,
    ("exponential", LossKind.ABSOLUTE): _ExpAbsolute,
}

# medians of f and of the theta = 0 conditional law; loss-free
_MEDIANS = {
    "normal": (lambda s: 0.0, lambda s, u: 0.5 * u),
    "exponential": (lambda s: s * _LN2, lambda s, u: u + 0.5 * s * _LN2),
}


def closed_forms(family: LocationFamily, loss: LossSpec) -> _Closed | None:
    cls = _CLOSED.get((family.name, loss.kind))
    if cls is None or "sigma" not in family.params:
        return None
    return cls(family.params["sigma"], loss.a)


# ---------------------------------------------------------------------------
# public scalar operations


def c0(family, loss, *, closed_form=True, quad=None, root=None) -> float:
    cf = closed_forms(family, loss) if closed_form else None
    if cf is not None and cf.c0 is not None:
        return float(cf.c0())
    return c0_numeric(family, loss, quad, root)


def c_theta_u(family, loss, theta, u, *, closed_form=True, quad=None, root=None) -> float:
    """Minimizer of the conditional risk given U = u when theta_(2) - theta_(1) = theta."""
    u = max(float(u), U_FLOOR)
    cf = closed_forms(family, loss) if closed_form else None
    if theta == 0 and cf is not None and cf.c_zero_u is not None:
        return float(cf.c_zero_u(u))
    return c_theta_u_numeric(family, loss, float(theta), u, quad, root)


def b0(family, loss, *, closed_form=True, quad=None, root=None) -> float:
    cf = closed_forms(family, loss) if closed_form else None
    if cf is not None and cf.b0 is not None:
        return float(cf.b0())
    return b_theta_numeric(family, loss, 0.0, quad, root)


def b_theta(family, loss, theta, *, quad=None, root=None) -> float:
    """Risk-minimizing constant b for X_(2) - b at theta_(2) - theta_(1) = theta."""
    if theta < 0:
        raise ValueError("theta must be >= 0")
    return b_theta_numeric(family, loss, float(theta), quad, root)


def phi_bz(family, loss, t, *, closed_form=True, quad=None, root=None) -> float:
    """Brewster-Zidek shrink: the root of k1(c | t) = 0 (half-mass point for |t|)."""
    t = float(t)
    if not t > 0:
        raise ValueError("phi_bz needs t > 0")
    t = max(t, U_FLOOR)
    cf = closed_forms(family, loss) if closed_form else None
    if cf is not None and cf.phi_bz is not None:
        return float(cf.phi_bz(t))
    return phi_bz_numeric(family, loss, t, quad, root)


def m0(family, *, closed_form=True) -> float:
    if closed_form and family.name in _MEDIANS and "sigma" in family.params:
        return float(_MEDIANS[family.name][0](family.params["sigma"]))
    return float(family.quantile(0.5))


def m_theta_u(family, theta, u, *, closed_form=True, quad=None, root=None) -> float:
    """Median of the conditional law of X_(2) - theta_(2) given U = u."""
    u = max(float(u), U_FLOOR)
    if theta == 0 and closed_form and family.name in _MEDIANS and "sigma" in family.params:
        return float(_MEDIANS[family.name][1](family.params["sigma"], u))
    return m_theta_u_numeric(family, float(theta), u, quad, root)


# ---------------------------------------------------------------------------
# tabulated curves for vectorized evaluation


class CurveTable:
    """Cubic spline of a scalar curve on u in (0, 50 sigma].

    Nodes are ``50 sigma (i/N)^2`` so they crowd near 0.  Values below the
    first node or above the last fall back to ``exact`` (or to ``tail``
    when given, the t -> infinity limit).
    """

    def __init__(self, exact: Callable[[float], float], sigma: float, n: int = 300,
                 tail: float | None = None):
        self.exact = exact
        self.tail = tail
        self.nodes = T_LIMIT_SIGMAS * sigma * (np.arange(1, n + 1) / n) ** 2
        self.values = np.array([exact(float(t)) for t in self.nodes])
        self._spline = interpolate.CubicSpline(self.nodes, self.values)

    def __call__(self, u) -> np.ndarray:
        u = np.maximum(np.asarray(u, dtype=float), U_FLOOR)
        out = self._spline(np.clip(u, self.nodes[0], self.nodes[-1]))
        low = u < self.nodes[0]
        high = u > self.nodes[-1]
        if np.any(low):
            out[low] = [self.exact(float(x)) for x in u[low]]
        if np.any(high):
            out[high] = self.tail if self.tail is not None else [self.exact(float(x)) for x in u[high]]
        return out


@dataclass(frozen=True)
class ShrinkInfo:
    """Which path produced a calibrated item."""

    name: str
    provenance: str  # "closed_form" | "numeric" | "tabulated"


class Calibration:
    """All constants and curves for one (family, loss).

    Scalars are computed lazily, so quantities that are undefined for a
    configuration (e.g. c0 for exponential linex with a*sigma >= 1) only
    fail when asked for.  Curve lookups are memoized on ``round(u, 12)``.
    """

    def __init__(self, family: LocationFamily, loss: LossSpec, *, closed_form: bool = True,
                 quad: QuadSpec | None = None, root: RootSpec | None = None):
        self.family = family
        self.loss = loss
        self.closed_form = closed_form
        self.quad = quad or DEFAULT_QUAD
        self.root = root or DEFAULT_ROOT
        self._cf = closed_forms(family, loss) if closed_form else None
        self._lock = threading.RLock()
        self._cache: dict[tuple[str, float], float] = {}
        self._tables: dict[str, CurveTable] = {}
        self.provenance: dict[str, str] = {}

    def __repr__(self) -> str:
        return f"Calibration({self.family!r}, {self.loss!r})"

    # -- scalars ------------------------------------------------------------

    def _has(self, name: str) -> bool:
        return self._cf is not None and getattr(self._cf, name) is not None

    @cached_property
    def c0(self) -> float:
        self.provenance["c0"] = "closed_form" if self._has("c0") else "numeric"
        return c0(self.family, self.loss, closed_form=self.closed_form, quad=self.quad, root=self.root)

    @cached_property
    def b0(self) -> float:
        self.provenance["b0"] = "closed_form" if self._has("b0") else "numeric"
        return b0(self.family, self.loss, closed_form=self.closed_form, quad=self.quad, root=self.root)

    @cached_property
    def m0(self) -> float:
        closed = self.closed_form and self.family.name in _MEDIANS
        self.provenance["m0"] = "closed_form" if closed else "numeric"
        return m0(self.family, closed_form=self.closed_form)

    @property
    def sigma(self) -> float:
        return self.family.scale

    # -- memoized curves ----------------------------------------------------

    def _memo(self, name: str, u: float, fn: Callable[[float], float]) -> float:
        key = (name, round(max(float(u), U_FLOOR), 12))
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        value = fn(key[1])
        with self._lock:
            self._cache[key] = value
        return value

    def c_zero_u(self, u: float) -> float:
        return self._memo("c_zero_u", u, lambda x: c_theta_u(
            self.family, self.loss, 0.0, x, closed_form=self.closed_form, quad=self.quad, root=self.root))

    def phi_bz(self, t: float) -> float:
        return self._memo("phi_bz", t, lambda x: phi_bz(
            self.family, self.loss, x, closed_form=self.closed_form, quad=self.quad, root=self.root))

    def m_zero_u(self, u: float) -> float:
        return self._memo("m_zero_u", u, lambda x: m_theta_u(
            self.family, 0.0, x, closed_form=self.closed_form, quad=self.quad, root=self.root))

    def c_theta_u(self, theta: float, u: float) -> float:
        return c_theta_u(self.family, self.loss, theta, u, closed_form=self.closed_form,
                         quad=self.quad, root=self.root)

    def m_theta_u(self, theta: float, u: float) -> float:
        return m_theta_u(self.family, theta, u, closed_form=self.closed_form, quad=self.quad, root=self.root)

    def b_theta(self, theta: float) -> float:
        if theta == 0:
            return self.b0
        return b_theta(self.family, self.loss, theta, quad=self.quad, root=self.root)

    def k1(self, c: float, t: float) -> float:
        return k1(self.family, self.loss, c, t, self.quad)

    # -- vectorized curves --------------------------------------------------

    def curve(self, name: str) -> Callable[[np.ndarray], np.ndarray]:
        """Vectorized ``c_zero_u``, ``phi_bz`` or ``m_zero_u`` over an array of u."""
        if name not in ("c_zero_u", "phi_bz", "m_zero_u"):
            raise KeyError(name)
        if name == "m_zero_u":
            if self.closed_form and self.family.name in _MEDIANS:
                s = self.family.params["sigma"]
                fn = _MEDIANS[self.family.name][1]
                self.provenance[name] = "closed_form"
                return lambda u: fn(s, np.maximum(np.asarray(u, float), U_FLOOR))
        elif self._has(name):
            method = getattr(self._cf, name)
            method(1.0)  # surface CalibrationError now, not mid-sweep
            self.provenance[name] = "closed_form"
            return lambda u: np.asarray(method(np.maximum(np.asarray(u, float), U_FLOOR)), float)
        return self._table(name)

    def _table(self, name: str) -> CurveTable:
        with self._lock:
            table = self._tables.get(name)
            if table is None:
                exact = getattr(self, name)
                tail = self.b0 if name == "phi_bz" else None
                table = CurveTable(exact, self.sigma, tail=tail)
                self._tables[name] = table
                self.provenance[name] = "tabulated"
        return table

    def shrink_fn(self, kind: str) -> Callable[[np.ndarray], np.ndarray]:
        """Vectorized shrink ``phi(u)`` for an estimator kind (``X_(2) - phi(U)``)."""
        if kind == "natural":
            c = self.c0
            return lambda u: np.full(np.shape(u), c)
        if kind == "stein":
            c, cu = self.c0, self.curve("c_zero_u")
            return lambda u: np.minimum(c, cu(u))
        if kind == "b0":
            c = self.b0
            return lambda u: np.full(np.shape(u), c)
        if kind == "brewster_zidek":
            return self.curve("phi_bz")
        if kind == "pitman_nearest":
            c = self.m0
            return lambda u: np.full(np.shape(u), c)
        if kind == "pitman_improved_m0":
            c, mu = self.m0, self.curve("m_zero_u")
            return lambda u: np.minimum(c, mu(u))
        if kind == "pitman_improved_c0":
            c, mu = self.c0, self.curve("m_zero_u")
            return lambda u: np.minimum(c, mu(u))
        raise KeyError(f"unknown estimator kind {kind!r}")

    def summary(self, us: Sequence[float] = ()) -> dict:
        """The JSON document emitted by ``ordloc calibrate``."""
        out = {
            "family": self.family.name,
            "sigma": self.sigma,
            "loss": self.loss.kind.value,
            "linex_a": self.loss.a,
        }
        for key in ("c0", "b0", "m0"):
            try:
                out[key] = getattr(self, key)
            except CalibrationError as exc:
                out[key] = None
                out.setdefault("errors", {})[key] = str(exc)
        curves = []
        for u in us:
            row = {"u": float(u)}
            for key, fn in (("c0u", self.c_zero_u), ("phi_bz", self.phi_bz), ("m0u", self.m_zero_u)):
                try:
                    row[key] = fn(u)
                except CalibrationError:
                    row[key] = None
            curves.append(row)
        out["curves"] = curves
        out["provenance"] = dict(self.provenance)
        return out

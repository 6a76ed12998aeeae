"""Standard (location zero) densities and the observed pair.

A family never stores a location.  Observations are generated outside as
``x = theta + draw`` where ``draw`` comes from :attr:`LocationFamily.sampler`.
Scalar ``pdf``/``cdf``/``sf``/``quantile`` use :mod:`math` because they sit
inside quadrature integrands; samplers are vectorized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .numerics import QuadSpec, RootSpec, integrate, solve_root

Sampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True, eq=False)
class LocationFamily:
    name: str
    pdf: Callable[[float], float]
    cdf: Callable[[float], float]
    quantile: Callable[[float], float]
    sampler: Sampler
    support_lo: float = -math.inf
    support_hi: float = math.inf
    params: dict = field(default_factory=dict)
    sf: Callable[[float], float] | None = None

    def survival(self, x: float) -> float:
        return self.sf(x) if self.sf is not None else 1.0 - self.cdf(x)

    def prob(self, a: float, b: float) -> float:
        """P(a < X <= b), taken from whichever tail keeps precision."""
        if b <= a:
            return 0.0
        if a >= self.median:
            return self.survival(a) - self.survival(b)
        return self.cdf(b) - self.cdf(a)

    @cached_property
    def median(self) -> float:
        return float(self.quantile(0.5))

    @cached_property
    def scale(self) -> float:
        """``sigma`` when the family has one, otherwise the interquartile range."""
        if "sigma" in self.params:
            return float(self.params["sigma"])
        return float(self.quantile(0.75) - self.quantile(0.25))

    @property
    def sigma(self) -> float:
        return self.scale

    def pdf_vec(self, x) -> np.ndarray:
        return np.vectorize(self.pdf, otypes=[float])(x)

    def cdf_vec(self, x) -> np.ndarray:
        return np.vectorize(self.cdf, otypes=[float])(x)

    def __repr__(self) -> str:
        extra = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"LocationFamily({self.name}{', ' + extra if extra else ''})"


@dataclass(frozen=True)
class ObservationPair:
    x1: float
    x2: float

    @property
    def x_min(self) -> float:
        return min(self.x1, self.x2)

    @property
    def x_max(self) -> float:
        return max(self.x1, self.x2)

    @property
    def u(self) -> float:
        return self.x_max - self.x_min


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ValueError(f"sigma must be a positive finite number, got {sigma!r}")
    return sigma


def normal_family(sigma: float = 1.0) -> LocationFamily:
    """N(0, sigma^2)."""
    sigma = _check_sigma(sigma)
    c = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
    r = 1.0 / (sigma * math.sqrt(2.0))

    def pdf(x):
        z = x / sigma
        return c * math.exp(-0.5 * z * z)

    def cdf(x):
        return 0.5 * math.erfc(-x * r)

    def sf(x):
        return 0.5 * math.erfc(x * r)

    def quantile(p):
        return sigma * float(special.ndtri(p))

    def sampler(rng, size):
        return sigma * rng.standard_normal(size)

    return LocationFamily("normal", pdf, cdf, quantile, sampler, params={"sigma": sigma}, sf=sf)


def exponential_family(sigma: float = 1.0) -> LocationFamily:
    """Density exp(-z/sigma)/sigma on [0, inf)."""
    sigma = _check_sigma(sigma)

    def pdf(x):
        return math.exp(-x / sigma) / sigma if x >= 0 else 0.0

    def cdf(x):
        return -math.expm1(-x / sigma) if x > 0 else 0.0

    def sf(x):
        return math.exp(-x / sigma) if x > 0 else 1.0

    def quantile(p):
        return -sigma * math.log1p(-p)

    def sampler(rng, size):
        return sigma * rng.standard_exponential(size)

    return LocationFamily("exponential", pdf, cdf, quantile, sampler,
                          support_lo=0.0, params={"sigma": sigma}, sf=sf)


def custom_family(
    name: str,
    pdf: Callable[[float], float],
    cdf: Callable[[float], float] | None = None,
    quantile: Callable[[float], float] | None = None,
    *,
    support: tuple[float, float] = (-math.inf, math.inf),
    sampler: Sampler | None = None,
    params: dict | None = None,
) -> LocationFamily:
    """Wrap a user density.

    A missing cdf is built by quadrature of ``pdf`` and a missing quantile by
    bisection on the cdf, both to 1e-10.  Without a sampler, draws use
    inverse-transform sampling through ``quantile`` (slow, but exact).
    """
    lo, hi = map(float, support)
    quad = QuadSpec(abs_tol=1e-12, rel_tol=1e-10)

    if cdf is None:
        def cdf(x):
            if x <= lo:
                return 0.0
            if x >= hi:
                return 1.0
            pts = (0.0,) if lo < 0.0 < x else ()
            return min(1.0, max(0.0, integrate(pdf, lo, x, quad.with_points(pts))))

    if quantile is None:
        def quantile(p, _cdf=cdf):
            if not 0.0 < p < 1.0:
                raise ValueError("quantile needs 0 < p < 1")
            a = lo if math.isfinite(lo) else -1.0
            b = hi if math.isfinite(hi) else (a + 2.0)
            x = solve_root(lambda x: _cdf(min(max(x, lo), hi)) - p, a, b, RootSpec(tol=1e-10))
            return min(max(x, lo), hi)

    if sampler is None:
        vq = np.vectorize(quantile, otypes=[float])

        def sampler(rng, size):
            return vq(rng.uniform(size=size))

    return LocationFamily(name, pdf, cdf, quantile, sampler, lo, hi, dict(params or {}))


def mlr_check(fam: LocationFamily, x_grid: Sequence[float], eta_grid: Sequence[float]) -> bool:
    """Check f(x1-e1) f(x2-e2) >= f(x1-e2) f(x2-e1) - 1e-12 on all ordered grid pairs."""
    return find_mlr_violation(fam, x_grid, eta_grid) is None


def find_mlr_violation(fam: LocationFamily, x_grid: Sequence[float], eta_grid: Sequence[float]):
    """First (x1, x2, eta1, eta2) breaking the MLR inequality, or None."""
    xs = sorted(set(map(float, x_grid)))
    es = sorted(set(map(float, eta_grid)))
    for i, x1 in enumerate(xs):
        for x2 in xs[i + 1:]:
            for j, e1 in enumerate(es):
                for e2 in es[j + 1:]:
                    lhs = fam.pdf(x1 - e1) * fam.pdf(x2 - e2)
                    rhs = fam.pdf(x1 - e2) * fam.pdf(x2 - e1)
                    if lhs < rhs - 1e-12:
                        return (x1, x2, e1, e2)
    return None


BUILTIN_FAMILIES = {"normal": normal_family, "exponential": exponential_family}


def make_family(name: str, sigma: float) -> LocationFamily:
    try:
        return BUILTIN_FAMILIES[name](sigma)
    except KeyError:
        raise ValueError(f"unknown family {name!r}; choose from {sorted(BUILTIN_FAMILIES)}") from None

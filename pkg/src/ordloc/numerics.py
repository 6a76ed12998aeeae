"""One-dimensional quadrature and bracketed root finding.

Every calibration integral in the package reduces to nested 1-D integrals of
smooth pieces, so QUADPACK (via :func:`scipy.integrate.quad`) on
split intervals and Brent's method are all that is needed here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

from scipy import integrate as _integrate
from scipy import optimize as _optimize


class NumericalError(RuntimeError):
    """Base class for quadrature and root-finding failures."""


class IntegrationError(NumericalError):
    """Quadrature did not reach the requested tolerance.

    The best available estimate and its error bound are kept on the
    exception so callers can decide whether to accept them.
    """

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


class BracketError(NumericalError):
    """No sign change was found after expanding the bracket."""


class RootError(NumericalError):
    """Root finder failed to converge inside a valid bracket."""


@dataclass(frozen=True)
class QuadSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_depth: int = 60
    split_points: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not (self.abs_tol >= 0 and self.rel_tol >= 0 and self.abs_tol + self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")

    def with_points(self, points: Sequence[float]) -> "QuadSpec":
        return QuadSpec(self.abs_tol, self.rel_tol, self.max_depth, tuple(points))


@dataclass(frozen=True)
class RootSpec:
    tol: float = 1e-12
    max_iter: int = 200
    bracket_expand_factor: float = 2.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("root tolerance must be positive")
        if self.bracket_expand_factor <= 1.0:
            raise ValueError("bracket_expand_factor must exceed 1")


DEFAULT_QUAD = QuadSpec()
DEFAULT_ROOT = RootSpec()

# QUADPACK subdivides at most `limit` times per segment; max_depth counts
# bisection levels, so allow a generous multiple of it.
_LIMIT_PER_DEPTH = 4


def _segments(lo: float, hi: float, points: Sequence[float]) -> list[tuple[float, float]]:
    inner = sorted({p for p in points if lo < p < hi and math.isfinite(p)})
    edges = [lo, *inner, hi]
    return list(zip(edges[:-1], edges[1:]))


def integrate(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    spec: QuadSpec | None = None,
) -> float:
    """Integrate ``fn`` over ``(lo, hi)``; either endpoint may be infinite.

    The interval is cut at ``spec.split_points`` and each piece is handed to
    QUADPACK (QAGS on finite pieces, QAGI's change of variable on infinite
    tails).  Raises :class:`IntegrationError` when the combined error bound
    exceeds ``max(abs_tol, rel_tol * |value|)`` by more than roundoff.
    """
    spec = spec or DEFAULT_QUAD
    if lo == hi:
        return 0.0
    if lo > hi:
        return -integrate(fn, hi, lo, spec)

    total = 0.0
    total_err = 0.0
    failed = False
    limit = spec.max_depth * _LIMIT_PER_DEPTH
    for a, b in _segments(lo, hi, spec.split_points):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", _integrate.IntegrationWarning)
            value, err, info, *rest = _integrate.quad(
                fn, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol, limit=limit, full_output=1
            )
        # ier codes: 0 ok, 2 roundoff detected (value still at machine accuracy).
        ier = 0 if not rest else _ier_from_message(rest[0])
        if ier not in (0, 2):
            failed = True
        total += value
        total_err += err

    if not math.isfinite(total):
        raise IntegrationError("integral is not finite", total, total_err)
    bound = max(spec.abs_tol, spec.rel_tol * abs(total))
    if failed and total_err > 100.0 * bound:
        raise IntegrationError("quadrature did not converge", total, total_err)
    return total


def _ier_from_message(message: str) -> int:
    # quad(full_output=1) only appends a message on abnormal termination.
    text = str(message).lower()
    if "roundoff" in text:
        return 2
    if "maximum number of subdivisions" in text:
        return 1
    if "extremely bad integrand" in text:
        return 3
    if "diverge" in text:
        return 5
    return 4


def solve_root(
    fn: Callable[[float], float],
    lo: float,
    hi: float,
    spec: RootSpec | None = None,
) -> float:
    """Find a root of a continuous ``fn`` starting from the bracket ``[lo, hi]``.

    If ``fn(lo)`` and ``fn(hi)`` share a sign the bracket is widened
    symmetrically about its midpoint by ``bracket_expand_factor``, at most
    100 times.  The sign-changing bracket is then refined with Brent's method.
    """
    spec = spec or DEFAULT_ROOT
    if lo > hi:
        lo, hi = hi, lo
    if lo == hi:
        hi = lo + 1.0
    f_lo, f_hi = fn(lo), fn(hi)
    for _ in range(100):
        if f_lo == 0.0:
            return lo
        if f_hi == 0.0:
            return hi
        if _opposite(f_lo, f_hi):
            break
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo) * spec.bracket_expand_factor
        lo, hi = mid - half, mid + half
        f_lo, f_hi = fn(lo), fn(hi)
    else:
        raise BracketError(f"no sign change found; last bracket [{lo!r}, {hi!r}]")

    try:
        root, res = _optimize.brentq(
            fn, lo, hi, xtol=spec.tol, rtol=4 * 2.220446049250313e-16,
            maxiter=spec.max_iter, full_output=True, disp=False,
        )
    except ValueError as exc:  # nan from fn inside the bracket
        raise RootError(str(exc)) from exc
    if not res.converged:
        raise RootError(f"Brent iteration did not converge in {spec.max_iter} steps (last={root!r})")
    return float(root)


def _opposite(a: float, b: float) -> bool:
    if math.isnan(a) or math.isnan(b):
        raise RootError("function returned nan while bracketing")
    return (a < 0) != (b < 0)

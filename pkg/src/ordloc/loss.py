"""Bowl-shaped invariant losses W(a - theta) and their derivatives."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np


class LossKind(str, Enum):
    SQUARED = "squared"
    LINEX = "linex"
    ABSOLUTE = "absolute"
    CUSTOM = "custom"


@dataclass(frozen=True)
class LossSpec:
    """A loss ``W`` together with ``W'``.

    ``w`` and ``w_prime`` accept floats or numpy arrays.  For the absolute
    loss ``w_prime`` is the sign function with ``w_prime(0) == 0``; every
    calibration for that loss goes through half-mass (median) equations
    rather than roots of ``W'``.
    """

    kind: LossKind
    w: Callable
    w_prime: Callable
    a: float | None = None
    name: str = ""

    @property
    def label(self) -> str:
        if self.kind is LossKind.LINEX:
            return f"linex(a={self.a:g})"
        return self.name or self.kind.value

    def __repr__(self) -> str:
        return f"LossSpec({self.label})"


def _squared(t):
    return np.square(t)


def _squared_prime(t):
    return 2.0 * t


def _absolute(t):
    return np.abs(t)


def _absolute_prime(t):
    return np.sign(t)


def make_loss(kind: str | LossKind, a: float | None = None, *,
              w: Callable | None = None, w_prime: Callable | None = None,
              name: str = "") -> LossSpec:
    """Build a named loss.

    ``squared``: W(t) = t**2.  ``linex``: W(t) = exp(a t) - a t - 1, a != 0.
    ``absolute``: W(t) = |t|.  ``custom`` requires both ``w`` and ``w_prime``.
    """
    kind = LossKind(kind)
    if kind is LossKind.SQUARED:
        return LossSpec(kind, _squared, _squared_prime, name="squared")
    if kind is LossKind.ABSOLUTE:
        return LossSpec(kind, _absolute, _absolute_prime, name="absolute")
    if kind is LossKind.LINEX:
        if a is None:
            raise ValueError("linex loss needs a shape parameter a")
        a = float(a)
        if a == 0.0 or not np.isfinite(a):
            raise ValueError("linex shape a must be finite and nonzero (a=0 makes the loss vanish)")

        def linex(t, a=a):
            at = np.multiply(a, t)
            # expm1 keeps W(t) ~ (a t)^2 / 2 accurate near t = 0
            return np.expm1(at) - at

        def linex_prime(t, a=a):
            return a * np.expm1(np.multiply(a, t))

        return LossSpec(kind, linex, linex_prime, a=a, name="linex")
    if w is None or w_prime is None:
        raise ValueError("custom loss must supply both w and w_prime")
    return LossSpec(LossKind.CUSTOM, w, w_prime, name=name or "custom")


def check_bowl(loss: LossSpec, grid: Sequence[float]) -> bool:
    """Probe-grid version of the bowl conditions on ``W``.

    True iff W(0) == 0, W >= 0, W strictly decreases over the grid points
    below 0 and strictly increases over those above 0, and W' is
    nondecreasing over the whole grid.
    """
    t = np.asarray(sorted(grid), dtype=float)
    if not (np.any(t < 0) and np.any(t > 0) and np.any(t == 0)):
        raise ValueError("grid must contain 0 and points on both sides of it")
    with np.errstate(all="ignore"):
        w = np.asarray(loss.w(t), dtype=float)
        wp = np.asarray(loss.w_prime(t), dtype=float)
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(wp))):
        return False
    if float(loss.w(0.0)) != 0.0 or np.any(w < 0):
        return False
    left = w[t <= 0]
    right = w[t >= 0]
    if np.any(np.diff(left) >= 0) or np.any(np.diff(right) <= 0):
        return False
    return bool(np.all(np.diff(wp) >= 0))

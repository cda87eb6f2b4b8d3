"""
Small numerical helpers shared across modules: estimates with error bars,
Richardson extrapolation and empirical convergence orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import roots_legendre


@dataclass(frozen=True)
class Estimate:
    """A value computed at two resolutions.

    Attributes:
        value: Best estimate (fine or extrapolated)
        error: Estimated absolute error of ``value``
        coarse: Value at the coarser resolution
        fine: Value at the finer resolution
    """

    value: float
    error: float
    coarse: float
    fine: float

    @property
    def relative_error(self) -> float:
        return self.error / abs(self.value) if self.value != 0.0 else math.inf


def richardson(coarse: float, fine: float, ratio: float = 2.0, order: float = 1.0) -> Estimate:
    """
    Combine two resolutions of a quantity with error ~ h**order.

    Args:
        coarse: Value at step h
        fine: Value at step h / ratio
        ratio: Refinement ratio between the two resolutions
        order: Assumed convergence order

    Returns:
        Estimate whose value is the extrapolated limit and whose error is the
        distance between the fine value and that limit
    """
    if ratio <= 1.0 or order <= 0.0:
        raise ValueError(f"Need ratio > 1 and order > 0, got ratio={ratio}, order={order}")
    correction = (fine - coarse) / (ratio**order - 1.0)
    return Estimate(value=fine + correction, error=abs(correction), coarse=coarse, fine=fine)


def convergence_order(values: Sequence[float], ratio: float = 2.0) -> Optional[float]:
    """
    Empirical order p from three nested resolutions q1, q2, q3.

    Returns None when the differences do not shrink monotonically (sign change
    or zero difference), which callers report as non-monotone convergence.
    """
    if len(values) < 3:
        raise ValueError(f"Need at least three levels, got {len(values)}")
    q1, q2, q3 = values[-3:]
    d1 = q1 - q2
    d2 = q2 - q3
    if d1 == 0.0 or d2 == 0.0 or (d1 > 0) != (d2 > 0):
        return None
    return math.log(abs(d1 / d2)) / math.log(ratio)


def limit_weights(xs: Sequence[float]) -> np.ndarray:
    """Weights w with sum(w * y) = p(0) for the polynomial p interpolating (xs, y)."""
    x = np.asarray(xs, dtype=float)
    vandermonde = np.vander(x, x.size, increasing=True)
    unit = np.zeros(x.size)
    unit[0] = 1.0
    return np.linalg.solve(vandermonde.T, unit)


def three_point_limit(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Fit y = y0 + a*x + b*x**2 through the last three points; return y0."""
    if len(xs) < 3 or len(xs) != len(ys):
        raise ValueError("Need three or more matching points for the extrapolation")
    return float(limit_weights(xs[-3:]) @ np.asarray(ys[-3:], dtype=float))


def limit_estimate(xs: Sequence[float], ys: Sequence[float], errors: Sequence[float]) -> Estimate:
    """
    Three-point limit at x -> 0 with an error bar.

    The error is the spread between the three-point and two-point (linear)
    limits plus the per-point errors carried through the three-point weights.
    ``coarse`` holds the two-point limit and ``fine`` the three-point one.
    """
    if not (len(xs) == len(ys) == len(errors)):
        raise ValueError("Points and errors must have matching lengths")
    three = three_point_limit(xs, ys)
    two = float(limit_weights(xs[-2:]) @ np.asarray(ys[-2:], dtype=float))
    carried = float(np.abs(limit_weights(xs[-3:])) @ np.abs(np.asarray(errors[-3:], dtype=float)))
    return Estimate(value=three, error=abs(three - two) + carried, coarse=two, fine=three)


def periodic_distance(s: np.ndarray, t: np.ndarray, period: float) -> np.ndarray:
    """Distance between parameters on a circle of circumference ``period``."""
    d = np.abs(np.asarray(s) - np.asarray(t)) % period
    return np.minimum(d, period - d)


def gauss_legendre(n: int, a: float = 0.0, b: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = roots_legendre(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w

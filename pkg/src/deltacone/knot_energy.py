"""
Knot-type energies of loops on the sphere.

    Phi_f[T] = int_0^L int_0^L f(|tau(s) - tau(t)|^2) ds dt,
    f(x) = exp(-a sqrt(b x + c)) / sqrt(b x + c)

For a > 0, b > 0 the function f is decreasing and convex, so circles minimize
Phi_f among loops of equal length. The comparison kernel K_kappa is the gap
Phi_f[T] - Phi_f[C] scaled by r r' / (4 pi) with a = kappa, b = r r' and
c = (r - r')^2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .exceptions import AccuracyError, DomainError, SingularArgumentError
from .geometry import Loop
from .utils import Estimate, richardson

logger = logging.getLogger(__name__)

MIN_NODES = 16
ROW_CHUNK = 256
PHI_RTOL = 1e-8
GAP_RTOL = 1e-2


@dataclass(frozen=True)
class FParams:
    """
    Parameters of f(x) = exp(-a sqrt(b x + c)) / sqrt(b x + c).

    Attributes:
        a: Decay rate (plays kappa), a >= 0
        b: Slope (plays r r'), b >= 0
        c: Offset (plays (r - r')^2), c >= 0; b = c = 0 is rejected
    """

    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        if self.a < 0.0 or self.b < 0.0 or self.c < 0.0:
            raise DomainError(f"FParams need a, b, c >= 0, got a={self.a}, b={self.b}, c={self.c}")
        if self.b == 0.0 and self.c == 0.0:
            raise DomainError("FParams with b = c = 0 define no function")


def _argument(p: FParams, x: np.ndarray) -> np.ndarray:
    arg = p.b * np.asarray(x, dtype=float) + p.c
    if np.any(arg <= 0.0):
        raise SingularArgumentError(f"f is singular where b*x + c <= 0 (b={p.b}, c={p.c})")
    return arg


def f_eval(p: FParams, x: np.ndarray) -> np.ndarray:
    """f(x); vectorized over x."""
    arg = _argument(p, x)
    root = np.sqrt(arg)
    value = np.exp(-p.a * root) / root
    return value if value.ndim else float(value)


def f_derivatives(p: FParams, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closed-form first and second derivatives of f.

    f'  = -e^{-a y} [a b / (2 y^2) + b / (2 y^3)]
    f'' =  e^{-a y} [a^2 b^2 / (4 y^3) + 3 a b^2 / (4 y^4) + 3 b^2 / (4 y^5)]

    with y = sqrt(b x + c).
    """
    arg = _argument(p, x)
    y = np.sqrt(arg)
    decay = np.exp(-p.a * y)
    a, b = p.a, p.b
    first = -decay * (a * b / (2.0 * arg) + b / (2.0 * arg * y))
    second = decay * (
        a * a * b * b / (4.0 * arg * y) + 3.0 * a * b * b / (4.0 * arg * arg) + 3.0 * b * b / (4.0 * arg * arg * y)
    )
    if np.ndim(first) == 0:
        return float(first), float(second)
    return first, second


def _offset_nodes(length: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    step = length / n
    return step * np.arange(n), step * (np.arange(n) + 0.5)


def _chord_blocks(points_s: np.ndarray, points_t: np.ndarray):
    for start in range(0, points_s.shape[0], ROW_CHUNK):
        block = points_s[start : start + ROW_CHUNK] @ points_t.T
        yield np.clip(2.0 - 2.0 * block, 0.0, None)


def _energy_sum(loop: Loop, p: FParams, n: int) -> float:
    s, t = _offset_nodes(loop.length, n)
    points_s = loop.evaluate(s)
    points_t = loop.evaluate(t)
    partial = [np.sum(f_eval(p, chord2)) for chord2 in _chord_blocks(points_s, points_t)]
    step = loop.length / n
    return float(np.sum(partial)) * step * step


def _gap_sum(loop: Loop, circle: Loop, p: FParams, n: int) -> Tuple[float, float]:
    s, t = _offset_nodes(loop.length, n)
    blocks = zip(
        _chord_blocks(loop.evaluate(s), loop.evaluate(t)),
        _chord_blocks(circle.evaluate(s), circle.evaluate(t)),
    )
    partial = []
    scale = []
    for chord_loop, chord_circle in blocks:
        f_loop = f_eval(p, chord_loop)
        partial.append(np.sum(f_loop - f_eval(p, chord_circle)))
        scale.append(np.sum(f_loop))
    step = loop.length / n
    return float(np.sum(partial)) * step * step, float(np.sum(scale)) * step * step


def _check_nodes(n_quad: int) -> None:
    if n_quad < MIN_NODES:
        raise DomainError(f"Need n_quad >= {MIN_NODES}, got {n_quad}")


def phi_f(loop: Loop, p: FParams, n_quad: int = 256, rtol: float = PHI_RTOL) -> Estimate:
    """
    Phi_f[loop] by the offset periodic trapezoid at n_quad and 2 n_quad nodes.

    The two integration variables use grids shifted by half a step, so the
    diagonal s = t is never sampled. For c > 0 the integrand is smooth and
    periodic and the rule converges geometrically.

    Raises:
        AccuracyError: If the two resolutions differ by more than rtol; this
            is always the case for c = 0, where Phi_f diverges logarithmically
            (use phi_gap for comparisons)
    """
    _check_nodes(n_quad)
    coarse = _energy_sum(loop, p, n_quad)
    fine = _energy_sum(loop, p, 2 * n_quad)
    error = abs(fine - coarse)
    if error > rtol * abs(fine):
        raise AccuracyError(
            f"Phi_f not converged at n_quad={n_quad} (a={p.a}, b={p.b}, c={p.c}): {coarse!r} vs {fine!r}",
            coarse=coarse,
            fine=fine,
        )
    return Estimate(value=fine, error=error, coarse=coarse, fine=fine)


def phi_gap(loop: Loop, circle: Loop, p: FParams, n_quad: int = 256, rtol: float = GAP_RTOL) -> Estimate:
    """
    Phi_f[loop] - Phi_f[circle] with both energies sampled on the same nodes.

    The 1/|s - t| diagonal behaviour is identical for both unit-speed loops and
    cancels node by node, so the gap converges (at second order) even for
    c = 0. The value is Richardson-extrapolated from n_quad and 2 n_quad.

    Raises:
        DomainError: If the loops have different lengths
        AccuracyError: If the extrapolation correction exceeds rtol of the gap
    """
    _check_nodes(n_quad)
    if not math.isclose(loop.length, circle.length, rel_tol=1e-12):
        raise DomainError(f"Loops differ in length: {loop.length} vs {circle.length}")

    coarse, _ = _gap_sum(loop, circle, p, n_quad)
    fine, scale = _gap_sum(loop, circle, p, 2 * n_quad)
    estimate = richardson(coarse, fine, ratio=2.0, order=2.0)
    if estimate.error > rtol * abs(estimate.value) + 1e-13 * abs(scale):
        raise AccuracyError(
            f"Energy gap not converged at n_quad={n_quad}: {coarse!r} vs {fine!r}",
            coarse=coarse,
            fine=fine,
        )
    logger.debug("Energy gap %.6e +- %.1e (n_quad=%d)", estimate.value, estimate.error, n_quad)
    return estimate


def k_kappa(
    r: float, r_prime: float, kappa: float, circle: Loop, loop: Loop, n_quad: int = 256
) -> float:
    """
    Comparison kernel K_kappa(r, r') = r r' / (4 pi) (Phi_f[loop] - Phi_f[circle]).

    Raises:
        SingularArgumentError: At r = r' = 0
        DomainError: For negative radii or kappa
    """
    if r < 0.0 or r_prime < 0.0 or kappa < 0.0:
        raise DomainError(f"Need r, r', kappa >= 0, got r={r}, r'={r_prime}, kappa={kappa}")
    if r == 0.0 and r_prime == 0.0:
        raise SingularArgumentError("K_kappa is undefined at r = r' = 0")
    prefactor = r * r_prime / (4.0 * math.pi)
    if prefactor == 0.0:
        return 0.0
    p = FParams(a=kappa, b=r * r_prime, c=(r - r_prime) ** 2)
    return prefactor * phi_gap(loop, circle, p, n_quad).value

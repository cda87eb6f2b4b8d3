"""
Cross-section loops on the unit sphere and the cones they sweep out.

A Loop is a unit-speed closed curve tau: [0, L) -> S^2. Internally every loop
is stored as a truncated Fourier series in arc length, built from exactly
reparametrized samples, so evaluation and derivatives of any order are cheap
and consistent. A Cone pairs a radius R with a loop and realizes the
parametrization sigma(r, s) = r * tau(s) with surface measure r dr ds.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.optimize import brentq

from .exceptions import DomainError, InfeasibleShapeError, InvalidShapeError
from .utils import periodic_distance

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
LOOP_KINDS = ("circle", "perturbed-circle", "user-supplied-samples")

N_PHI = 4096
N_FOURIER = 2048
N_FOURIER_MAX = 32768
N_FOURIER_SAMPLES = 4096
MODE_CUTOFF = 1e-16
# relative size allowed in the upper half of the sampled spectrum
RESOLUTION_TOL = 1e-13
EVAL_CHUNK = 4096

SPHERE_TOL = 1e-12
SPEED_RTOL = 1e-8
# spline-interpolated user loops are only C^2, so their checks are looser
SAMPLE_SPHERE_TOL = 1e-9
SAMPLE_SPEED_RTOL = 1e-6
MIN_CHORD = 1e-6

CurveFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Loop:
    """
    Unit-speed closed curve on the unit sphere.

    Attributes:
        length: Arc length L in (0, 2*pi]
        kind: One of LOOP_KINDS
        coefficients: Complex array (M + 1, 3); tau(s) = Re sum_m c_m exp(i m w s), w = 2*pi/L
        theta0: Base polar angle for circles and the perturbed family
        eps: Perturbation amplitude (0 for circles)
        k: Wave number of the perturbation
        origin: Arc-length position of the parameter origin relative to the constructed curve
    """

    length: float
    kind: str
    coefficients: np.ndarray
    theta0: Optional[float] = None
    eps: float = 0.0
    k: Optional[int] = None
    origin: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in LOOP_KINDS:
            raise DomainError(f"Unknown loop kind: {self.kind}")

    @property
    def omega(self) -> float:
        return TWO_PI / self.length

    @property
    def n_modes(self) -> int:
        return self.coefficients.shape[0]

    @property
    def is_circular(self) -> bool:
        return self.kind == "circle" or (self.kind == "perturbed-circle" and self.eps == 0.0)

    def derivatives(self, s: np.ndarray, order: int) -> np.ndarray:
        """
        Evaluate tau and its arc-length derivatives.

        Args:
            s: Arc parameters (any shape)
            order: Highest derivative order

        Returns:
            Array of shape (order + 1, *s.shape, 3); entry p holds d^p tau / ds^p
        """
        s = np.asarray(s, dtype=float)
        flat = s.ravel()
        modes = np.arange(self.n_modes)
        out = np.empty((order + 1, flat.size, 3))
        factors = [(1j * self.omega * modes) ** p for p in range(order + 1)]

        for start in range(0, flat.size, EVAL_CHUNK):
            stop = min(start + EVAL_CHUNK, flat.size)
            phase = np.exp(1j * self.omega * np.outer(flat[start:stop], modes))
            for p in range(order + 1):
                out[p, start:stop] = (phase @ (self.coefficients * factors[p][:, None])).real

        return out.reshape((order + 1,) + s.shape + (3,))

    def evaluate(self, s: np.ndarray) -> np.ndarray:
        """Points tau(s) on the sphere, shape (*s.shape, 3)."""
        return self.derivatives(s, 0)[0]

    def tangent(self, s: np.ndarray) -> np.ndarray:
        """Unit tangents tau'(s), shape (*s.shape, 3)."""
        return self.derivatives(s, 1)[1]

    def shifted(self, s0: float) -> "Loop":
        """Same curve with the parameter origin moved forward by s0."""
        modes = np.arange(self.n_modes)
        coefficients = self.coefficients * np.exp(1j * self.omega * modes * s0)[:, None]
        return replace(self, coefficients=coefficients, origin=(self.origin + s0) % self.length)

    def sample(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """Equispaced arc parameters and the corresponding points."""
        s = self.length * np.arange(n) / n
        return s, self.evaluate(s)


@dataclass(frozen=True, eq=False)
class Cone:
    """
    Finite cone Sigma_R(T) = { r * tau(s) : 0 <= r < R }.

    Attributes:
        radius: R, finite and positive
        cross_section: The loop T
    """

    radius: float
    cross_section: Loop

    def __post_init__(self) -> None:
        if not (math.isfinite(self.radius) and self.radius > 0.0):
            raise DomainError(f"Cone radius must be finite and positive, got {self.radius}")

    @property
    def length(self) -> float:
        return self.cross_section.length

    @property
    def is_circular(self) -> bool:
        return self.cross_section.is_circular

    @property
    def area(self) -> float:
        return 0.5 * self.length * self.radius**2

    def point(self, r: np.ndarray, s: np.ndarray) -> np.ndarray:
        """sigma(r, s) = r * tau(s)."""
        return np.asarray(r, dtype=float)[..., None] * self.cross_section.evaluate(s)


@dataclass(frozen=True)
class SurfaceConstants:
    """Diameter D and potential bound C of a cone with their grid errors."""

    diameter: float
    potential: float
    diameter_error: float
    potential_error: float


def _check_length(L: float) -> None:
    if not (0.0 < L <= TWO_PI):
        raise DomainError(f"Loop length must lie in (0, 2*pi], got {L}")


def _spectrum(points: np.ndarray) -> np.ndarray:
    n = points.shape[0]
    coefficients = np.fft.rfft(points, axis=0) / n
    coefficients[1:] *= 2.0
    if n % 2 == 0:
        coefficients[-1] /= 2.0
    return coefficients


def spectral_tail(points: np.ndarray) -> float:
    """Largest coefficient in the upper half of the sampled spectrum, relative to the largest overall."""
    magnitude = np.abs(_spectrum(points)).max(axis=1)
    return float(magnitude[magnitude.size // 2 :].max() / magnitude.max())


def _fourier_coefficients(points: np.ndarray) -> np.ndarray:
    """Real-signal Fourier coefficients of equispaced samples, truncated."""
    coefficients = _spectrum(points)
    magnitude = np.abs(coefficients).max(axis=1)
    significant = np.nonzero(magnitude > MODE_CUTOFF * magnitude.max())[0]
    keep = max(2, int(significant[-1]) + 1)
    return coefficients[:keep].copy()


def _arclength_resample(point: CurveFn, velocity: CurveFn, n_out: int) -> Tuple[np.ndarray, float]:
    """
    Sample a closed curve p(phi), phi in [0, 2*pi), at equispaced arc length.

    The cumulative trapezoid of the speed, inverted by monotone cubic
    interpolation, gives the starting parameters; Newton steps against the
    spectral primitive of the speed then pin them to roundoff.

    Returns:
        (points, total length)
    """
    phi = TWO_PI * np.arange(N_PHI) / N_PHI
    speed = np.linalg.norm(velocity(phi), axis=-1)

    spectrum = np.fft.rfft(speed) / N_PHI
    mean_speed = spectrum[0].real
    total = TWO_PI * mean_speed
    harmonics = 2.0 * spectrum[1 : N_PHI // 2]
    significant = np.nonzero(np.abs(harmonics) > MODE_CUTOFF * mean_speed)[0]
    harmonics = harmonics[: (int(significant[-1]) + 1) if significant.size else 0]
    modes = np.arange(1, harmonics.size + 1)
    offset = np.sum((harmonics / (1j * modes)).real)

    def primitive(x: np.ndarray) -> np.ndarray:
        if harmonics.size == 0:
            return mean_speed * x
        waves = np.exp(1j * np.outer(x, modes)) @ (harmonics / (1j * modes))
        return mean_speed * x + waves.real - offset

    closed_speed = np.append(speed, speed[0])
    cumulative = cumulative_trapezoid(closed_speed, dx=TWO_PI / N_PHI, initial=0.0)
    cumulative *= total / cumulative[-1]
    inverse = PchipInterpolator(cumulative, np.append(phi, TWO_PI))

    targets = total * np.arange(n_out) / n_out
    guess = inverse(targets)
    for _ in range(30):
        step = (primitive(guess) - targets) / np.linalg.norm(velocity(guess), axis=-1)
        guess = guess - step
        if np.max(np.abs(step)) < 1e-15:
            break
    else:
        logger.warning("Arc-length inversion stopped at max step %.3e", np.max(np.abs(step)))

    return point(guess), float(total)


def _resolved_resample(point: CurveFn, velocity: CurveFn) -> Tuple[np.ndarray, float]:
    """
    Arc-length samples of a smooth closed curve, doubling the sample count
    from N_FOURIER until the upper half of the spectrum is below RESOLUTION_TOL.

    Returns:
        (points, total length)
    """
    n = N_FOURIER
    while True:
        points, total = _arclength_resample(point, velocity, n)
        tail = spectral_tail(points)
        if tail <= RESOLUTION_TOL or n >= N_FOURIER_MAX:
            break
        logger.debug("Spectral tail %.3e at %d samples, doubling", tail, n)
        n *= 2

    if tail > RESOLUTION_TOL:
        logger.warning("Loop spectrum unresolved at %d samples: tail %.3e", n, tail)
    return points, total


def _polar_curve(theta0: float, eps: float, k: int) -> Tuple[CurveFn, CurveFn]:
    """Point and velocity of theta(phi) = theta0 + eps * cos(k * phi)."""

    def point(phi: np.ndarray) -> np.ndarray:
        theta = theta0 + eps * np.cos(k * phi)
        return np.stack(
            [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1
        )

    def velocity(phi: np.ndarray) -> np.ndarray:
        theta = theta0 + eps * np.cos(k * phi)
        dtheta = -eps * k * np.sin(k * phi)
        return np.stack(
            [
                dtheta * np.cos(theta) * np.cos(phi) - np.sin(theta) * np.sin(phi),
                dtheta * np.cos(theta) * np.sin(phi) + np.sin(theta) * np.cos(phi),
                -dtheta * np.sin(theta),
            ],
            axis=-1,
        )

    return point, velocity


def polar_curve_length(theta0: float, eps: float, k: int) -> float:
    """Length of the polar curve; periodic trapezoid, spectrally accurate."""
    phi = TWO_PI * np.arange(N_PHI) / N_PHI
    theta = theta0 + eps * np.cos(k * phi)
    dtheta = -eps * k * np.sin(k * phi)
    return float(TWO_PI * np.mean(np.sqrt(dtheta**2 + np.sin(theta) ** 2)))


def _circle_points(L: float, n: int) -> Tuple[np.ndarray, float]:
    sin_theta = min(1.0, L / TWO_PI)
    theta = math.asin(sin_theta)
    s = L * np.arange(n) / n
    points = np.stack(
        [
            sin_theta * np.cos(s / sin_theta),
            sin_theta * np.sin(s / sin_theta),
            np.full(n, math.cos(theta)),
        ],
        axis=-1,
    )
    return points, theta


def validate_loop(loop: Loop, sphere_tol: float = SPHERE_TOL, speed_rtol: float = SPEED_RTOL) -> None:
    """
    Check the Loop invariants on a probe grid.

    Raises:
        InvalidShapeError: Off-sphere points, non-unit speed or a self-intersection
    """
    n_probe = 512
    s, points = loop.sample(n_probe)

    off_sphere = np.max(np.abs(np.linalg.norm(points, axis=-1) - 1.0))
    if off_sphere > sphere_tol:
        raise InvalidShapeError(f"Loop leaves the unit sphere by {off_sphere:.3e}")

    # term-wise derivative of the stored series
    speed_error = np.max(np.abs(np.linalg.norm(loop.tangent(s), axis=-1) - 1.0))
    if speed_error > speed_rtol:
        raise InvalidShapeError(f"Loop is not unit speed: max |speed - 1| = {speed_error:.3e}")

    gram = points @ points.T
    chord = np.sqrt(np.clip(2.0 - 2.0 * gram, 0.0, None))
    separation = periodic_distance(s[:, None], s[None, :], loop.length)
    far = separation > loop.length / 50.0
    if np.any(chord[far] <= MIN_CHORD):
        raise InvalidShapeError(
            f"Loop self-intersects: minimum chord {chord[far].min():.3e} between separated points"
        )


def make_circle(L: float) -> Loop:
    """
    Circle of arc length L at polar angle theta with sin(theta) = L / (2*pi).

    Args:
        L: Arc length in (0, 2*pi]

    Returns:
        Loop of kind "circle"

    Raises:
        DomainError: If L is out of range
    """
    _check_length(L)
    points, theta = _circle_points(L, N_FOURIER)
    return Loop(
        length=float(L),
        kind="circle",
        coefficients=_fourier_coefficients(points),
        theta0=theta,
        eps=0.0,
        k=None,
    )


def make_perturbed_loop(L: float, eps: float, k: int) -> Loop:
    """
    Non-circular loop theta(phi) = theta0 + eps * cos(k * phi) of arc length L.

    theta0 is root-found so the length equals L; the curve is then
    reparametrized to unit speed and validated.

    Args:
        L: Target arc length in (0, 2*pi]
        eps: Amplitude, eps >= 0
        k: Integer wave number, k >= 2

    Returns:
        Loop of kind "perturbed-circle"

    Raises:
        DomainError: On out-of-range parameters
        InfeasibleShapeError: If no theta0 gives length L
        InvalidShapeError: If the curve leaves (0, pi) in polar angle or self-intersects
    """
    _check_length(L)
    if eps < 0.0:
        raise DomainError(f"Perturbation amplitude must be nonnegative, got {eps}")
    if int(k) != k or k < 2:
        raise DomainError(f"Wave number must be an integer >= 2, got {k}")
    k = int(k)

    if eps == 0.0:
        points, theta = _circle_points(L, N_FOURIER)
        return Loop(
            length=float(L),
            kind="perturbed-circle",
            coefficients=_fourier_coefficients(points),
            theta0=theta,
            eps=0.0,
            k=k,
        )

    if eps >= 0.5 * math.pi:
        raise InvalidShapeError(f"Amplitude {eps} pushes the polar angle out of (0, pi)")

    lower = eps * (1.0 + 1e-9)
    upper = 0.5 * math.pi
    shortest = polar_curve_length(lower, eps, k)
    longest = polar_curve_length(upper, eps, k)
    if not (shortest <= L <= longest):
        raise InfeasibleShapeError(
            f"Length {L} unreachable for eps={eps}, k={k}: "
            f"reachable range is [{shortest:.6f}, {longest:.6f}]"
        )

    theta0 = brentq(
        lambda t: polar_curve_length(t, eps, k) - L, lower, upper, xtol=1e-15, rtol=1e-15, maxiter=200
    )
    if not (theta0 - eps > 0.0 and theta0 + eps < math.pi):
        raise InvalidShapeError(f"Polar angle range ({theta0 - eps}, {theta0 + eps}) leaves (0, pi)")

    point, velocity = _polar_curve(theta0, eps, k)
    points, total = _resolved_resample(point, velocity)
    logger.debug("Perturbed loop eps=%g k=%d: theta0=%.15f, length=%.15f", eps, k, theta0, total)

    loop = Loop(
        length=float(L),
        kind="perturbed-circle",
        coefficients=_fourier_coefficients(points),
        theta0=float(theta0),
        eps=float(eps),
        k=k,
    )
    validate_loop(loop)
    return loop


def loop_from_samples(s: np.ndarray, points: np.ndarray, period: float) -> Loop:
    """
    Build a loop from user-supplied samples.

    The samples are joined by a periodic cubic spline, projected radially onto
    the sphere and reparametrized by arc length. The resulting length is
    measured, not prescribed.

    Args:
        s: Increasing curve parameters in [0, period)
        points: Sample points, shape (n, 3)
        period: Parameter period of the closed curve

    Raises:
        DomainError: Too few samples, bad parameters or a measured length above 2*pi
        InvalidShapeError: If the resulting loop fails validation
    """
    s = np.asarray(s, dtype=float)
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 3 or points.shape[0] != s.size:
        raise DomainError(f"Expected matching (n,) parameters and (n, 3) points, got {s.shape}, {points.shape}")
    if s.size < 8:
        raise DomainError(f"Need at least 8 samples, got {s.size}")
    if np.any(np.diff(s) <= 0.0) or s[0] < 0.0 or s[-1] >= period:
        raise DomainError("Sample parameters must increase strictly within [0, period)")

    norms = np.linalg.norm(points, axis=-1)
    if np.any(norms == 0.0):
        raise DomainError("Sample points must be nonzero")
    unit = points / norms[:, None]
    spline = CubicSpline(np.append(s, s[0] + period), np.vstack([unit, unit[:1]]), bc_type="periodic")
    scale = period / TWO_PI

    def point(phi: np.ndarray) -> np.ndarray:
        q = spline(s[0] + phi * scale)
        return q / np.linalg.norm(q, axis=-1, keepdims=True)

    def velocity(phi: np.ndarray) -> np.ndarray:
        u = s[0] + phi * scale
        q = spline(u)
        dq = spline(u, 1)
        norm = np.linalg.norm(q, axis=-1, keepdims=True)
        radial = np.sum(q * dq, axis=-1, keepdims=True) / norm**2
        return (dq - q * radial) / norm * scale

    sampled, total = _arclength_resample(point, velocity, N_FOURIER_SAMPLES)
    if total > TWO_PI * (1.0 + 1e-9):
        raise DomainError(f"Sampled loop has length {total} > 2*pi")

    loop = Loop(
        length=min(total, TWO_PI),
        kind="user-supplied-samples",
        coefficients=_fourier_coefficients(sampled),
    )
    validate_loop(loop, sphere_tol=SAMPLE_SPHERE_TOL, speed_rtol=SAMPLE_SPEED_RTOL)
    return loop


def reparametrize(loop: Loop) -> Loop:
    """Run the arc-length reparametrization again on an existing loop."""
    scale = loop.length / TWO_PI

    def point(phi: np.ndarray) -> np.ndarray:
        return loop.evaluate(phi * scale)

    def velocity(phi: np.ndarray) -> np.ndarray:
        return loop.tangent(phi * scale) * scale

    if loop.kind == "user-supplied-samples":
        points, _ = _arclength_resample(point, velocity, N_FOURIER_SAMPLES)
    else:
        points, _ = _resolved_resample(point, velocity)
    return replace(loop, coefficients=_fourier_coefficients(points))


def measured_length(loop: Loop, n: int = 4096) -> float:
    """Arc length of the stored representation, by periodic trapezoid of |tau'|."""
    s = loop.length * np.arange(n) / n
    return float(loop.length * np.mean(np.linalg.norm(loop.tangent(s), axis=-1)))


def _check_parameters(loop: Loop, *params: np.ndarray) -> None:
    upper = loop.length * (1.0 + 1e-12)
    for p in params:
        p = np.asarray(p)
        if np.any(p < 0.0) or np.any(p > upper):
            raise DomainError(f"Arc parameters must lie in [0, {loop.length}]")


def chord_sq_loop(loop: Loop, s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """
    Squared chord |tau(s) - tau(t)|^2 = 2 - 2 <tau(s), tau(t)>, clamped at 0.

    Broadcasts over s and t.
    """
    _check_parameters(loop, s, t)
    inner = np.sum(loop.evaluate(s) * loop.evaluate(t), axis=-1)
    result = np.clip(2.0 - 2.0 * inner, 0.0, None)
    return result if result.ndim else float(result)


def cone_chord_sq(r: np.ndarray, s: np.ndarray, r_prime: np.ndarray, t: np.ndarray, loop: Loop) -> np.ndarray:
    """
    Squared distance |sigma(r, s) - sigma(r', t)|^2 = (r - r')^2 + r r' |tau(s) - tau(t)|^2.
    """
    r = np.asarray(r, dtype=float)
    r_prime = np.asarray(r_prime, dtype=float)
    if np.any(r < 0.0) or np.any(r_prime < 0.0):
        raise DomainError("Radii must be nonnegative")
    return (r - r_prime) ** 2 + r * r_prime * chord_sq_loop(loop, s, t)


def surface_constants(cone: Cone, grid) -> SurfaceConstants:
    """
    Diameter D and potential bound C = sup_x int dsigma(y) / (4 pi |x - y|).

    D is the largest node-to-node distance, bounded through the rim nodes;
    C is the largest row potential of the assembled kappa = 0 operator.
    Both are repeated on the half-resolution grid to estimate their errors.
    """
    from .bs_operator import BsAssembler

    def constants(g) -> Tuple[float, float]:
        points = cone.cross_section.evaluate(g.s_nodes)
        chord_max = float(np.max(np.clip(2.0 - 2.0 * points @ points.T, 0.0, None)))
        diameter = cone.radius * max(1.0, math.sqrt(chord_max))
        potential = float(np.max(BsAssembler(cone, g).potentials()))
        return diameter, potential

    diameter, potential = constants(grid)
    coarse_diameter, coarse_potential = constants(grid.coarsened())
    logger.debug("Surface constants: D=%.12g C=%.12g", diameter, potential)
    return SurfaceConstants(
        diameter=diameter,
        potential=potential,
        diameter_error=abs(diameter - coarse_diameter),
        potential_error=abs(potential - coarse_potential),
    )

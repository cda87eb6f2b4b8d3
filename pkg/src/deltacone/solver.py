"""
Spectral questions about H = -Delta - alpha delta_Sigma answered through the
largest Birman-Schwinger eigenvalue mu(kappa):

    a bound state exists      iff  mu(0) > 1/alpha
    E_1 = -kappa^2            iff  mu(kappa) = 1/alpha

mu is continuous and strictly decreasing in kappa, so the ground state is a
bracketed root-find. Circular cones use the m = 0 radial block, all other
cones the full two-dimensional matrix.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bs_operator import BsAssembler, BsMatrix, Grid, build_grid
from .exceptions import DomainError, NoBoundStateError, NumericError
from .geometry import TWO_PI, Cone, Loop, make_circle
from .spectral import eigencount_above, largest_eigenpair, largest_eigenvalue
from .utils import Estimate, limit_estimate, three_point_limit

logger = logging.getLogger(__name__)

GUARD_BAND = 1e-12
MAX_DOUBLINGS = 60
MAX_ROOT_ITER = 200
ROOT_RTOL = 1e-10
STRADDLE = 0.45
MARGIN_SIGMAS = 3.0
EXTRAPOLATION_LABEL = "three-point extrapolation in 1/R (not a computed infinite cone)"


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """
    One delta-interaction problem.

    Attributes:
        alpha: Coupling strength alpha > 0
        cone: Supporting cone
        grid: Quadrature grid matching the cone's R and L
    """

    alpha: float
    cone: Cone
    grid: Grid

    def __post_init__(self) -> None:
        if not self.alpha > 0.0:
            raise DomainError(f"Coupling strength must be positive, got alpha={self.alpha}")
        if not self.grid.matches(self.cone):
            raise DomainError(
                f"Grid (R={self.grid.radius}, L={self.grid.length}) does not match cone "
                f"(R={self.cone.radius}, L={self.cone.length})"
            )

    def with_grid(self, grid: Grid) -> "ProblemSpec":
        return ProblemSpec(self.alpha, self.cone, grid)

    def with_alpha(self, alpha: float) -> "ProblemSpec":
        return ProblemSpec(alpha, self.cone, self.grid)


@dataclass(frozen=True)
class GroundState:
    """
    Lowest eigenvalue E_1 = -kappa^2 of H.

    Attributes:
        energy: E_1 < 0
        kappa: sqrt(-E_1)
        mu_at_kappa: mu(kappa), equal to 1/alpha up to the root tolerance
        bracket: Final root bracket (kappa_lo, kappa_hi)
        iterations: mu evaluations inside the bracket
    """

    energy: float
    kappa: float
    mu_at_kappa: float
    bracket: Tuple[float, float]
    iterations: int


@dataclass(frozen=True)
class IsoperimetricResult:
    """
    Ground-state comparison of a circular cone and a cone over another loop.

    Energies are 0 when no bound state exists (bottom of the spectrum).
    Errors are differences to the half-resolution grid.
    """

    alpha: float
    e_circle: float
    e_loop: float
    margin: float
    margin_error: float
    circle_error: float
    loop_error: float
    status: str

    @property
    def strict(self) -> bool:
        return self.status == "strict"


@dataclass(frozen=True)
class TransferBound:
    """mu of the circular cone, the Rayleigh quotient of its lifted Perron vector on the loop cone, and mu of the loop cone."""

    kappa: float
    mu_circle: float
    rayleigh_quotient: float
    mu_loop: float


@dataclass(frozen=True)
class LimitRow:
    R: float
    n_r: int
    energy: Optional[float]
    error: float
    count_below_threshold: int
    count_in_window: int


@dataclass(frozen=True)
class LimitStudy:
    """
    E_1(R) over growing radii at fixed radial node density.

    Attributes:
        alpha: Coupling strength
        length: Loop length L
        rows: One row per radius
        reference: Essential-spectrum threshold -alpha^2 / 4 of the infinite cone
        monotone: True when E_1(R) is nonincreasing within error bars
        extrapolated: E_1 at 1/R -> 0 from the last three rows, if available
        extrapolation_error: Spread of the three- and two-point limits plus the carried row errors
        extrapolation_label: Description of how ``extrapolated`` was obtained
    """

    alpha: float
    length: float
    rows: List[LimitRow]
    reference: float
    monotone: bool
    extrapolated: Optional[float]
    extrapolation_error: Optional[float]
    extrapolation_label: str = EXTRAPOLATION_LABEL


class MuCurve:
    """
    kappa -> mu(kappa) for one cone and grid, memoized.

    Uses the m = 0 radial block for circular cones, which is exactly the
    rotationally invariant block of the full matrix.
    """

    def __init__(self, cone: Cone, grid: Grid, assembler: Optional[BsAssembler] = None):
        self.cone = cone
        self.grid = grid
        self.assembler = assembler or BsAssembler(cone, grid)
        self.radial = cone.is_circular
        self._values: Dict[float, float] = {}

    def matrix(self, kappa: float) -> BsMatrix:
        return self.assembler.radial(kappa, 0) if self.radial else self.assembler.full(kappa)

    def __call__(self, kappa: float) -> float:
        kappa = float(kappa)
        if kappa not in self._values:
            self._values[kappa] = largest_eigenvalue(self.matrix(kappa))
        return self._values[kappa]

    @property
    def evaluations(self) -> int:
        return len(self._values)


def critical_alpha(cone: Cone, grid: Grid) -> float:
    """alpha_cr = 1 / mu(0)."""
    mu0 = MuCurve(cone, grid)(0.0)
    logger.debug("mu(0) = %.15g on %dx%d grid", mu0, grid.n_r, grid.n_s)
    return 1.0 / mu0


def _exists(mu0: float, alpha: float) -> bool:
    return mu0 > (1.0 / alpha) * (1.0 + GUARD_BAND)


def bound_state_exists(spec: ProblemSpec, curve: Optional[MuCurve] = None) -> bool:
    """True iff mu(0) > 1/alpha, with a relative guard band of 1e-12."""
    curve = curve or MuCurve(spec.cone, spec.grid)
    return _exists(curve(0.0), spec.alpha)


def ground_state_energy(spec: ProblemSpec, curve: Optional[MuCurve] = None) -> GroundState:
    """
    Solve mu(kappa) = 1/alpha for the ground state E_1 = -kappa^2.

    The bracket starts at [0, 1] and doubles its upper end until
    g = mu - 1/alpha changes sign. Inside the bracket, false-position steps
    are followed by a probe just across the estimate so both ends close in;
    two consecutive moves of the same end force a bisection step. Stops when
    the bracket is narrower than 1e-10 (1 + kappa_lo) and interpolates kappa
    linearly inside it.

    Raises:
        NoBoundStateError: If mu(0) <= 1/alpha
        NumericError: If no sign change is found after 60 doublings
    """
    curve = curve or MuCurve(spec.cone, spec.grid)
    target = 1.0 / spec.alpha
    mu0 = curve(0.0)
    if not _exists(mu0, spec.alpha):
        raise NoBoundStateError(
            f"No bound state at alpha={spec.alpha}: mu(0)={mu0:.12g} <= 1/alpha={target:.12g}",
            diagnostics={"mu0": mu0, "alpha": spec.alpha},
        )

    def g(kappa: float) -> float:
        return curve(kappa) - target

    lo, g_lo = 0.0, mu0 - target
    hi, g_hi = 1.0, g(1.0)
    doublings = 0
    while g_hi >= 0.0:
        if doublings >= MAX_DOUBLINGS:
            raise NumericError(
                f"Root bracket not found after {MAX_DOUBLINGS} doublings",
                diagnostics={"kappa_hi": hi, "g_hi": g_hi},
            )
        lo, g_lo = hi, g_hi
        hi *= 2.0
        g_hi = g(hi)
        doublings += 1
    logger.debug("Bracket [%g, %g] after %d doublings", lo, hi, doublings)

    iterations = 0
    last_side = 0
    repeats = 0

    def update(x: float, gx: float) -> None:
        nonlocal lo, g_lo, hi, g_hi, last_side, repeats
        side = 1 if gx > 0.0 else -1
        if side > 0:
            lo, g_lo = x, gx
        else:
            hi, g_hi = x, gx
        repeats = repeats + 1 if side == last_side else 0
        last_side = side

    while g_lo != 0.0 and hi - lo > ROOT_RTOL * (1.0 + lo):
        iterations += 1
        if iterations > MAX_ROOT_ITER:
            raise NumericError(
                f"Root-finding did not converge in {MAX_ROOT_ITER} iterations",
                diagnostics={"bracket": (lo, hi), "g": (g_lo, g_hi)},
            )
        tol = ROOT_RTOL * (1.0 + lo)
        if repeats >= 2:
            x = 0.5 * (lo + hi)
            update(x, g(x))
            repeats = 0
            continue

        x = hi - g_hi * (hi - lo) / (g_hi - g_lo)
        x = min(max(x, lo + STRADDLE * tol), hi - STRADDLE * tol)
        gx = g(x)
        update(x, gx)
        if gx == 0.0:
            lo, g_lo = x, gx
            break
        probe = x + STRADDLE * tol if gx > 0.0 else x - STRADDLE * tol
        if lo < probe < hi:
            update(probe, g(probe))

    if g_lo == 0.0:
        kappa = lo
    else:
        kappa = lo - g_lo * (hi - lo) / (g_hi - g_lo)
    mu_at_kappa = curve(kappa)
    logger.info("Ground state E1=%.12g (kappa=%.12g) after %d iterations", -kappa * kappa, kappa, iterations)
    return GroundState(
        energy=-kappa * kappa,
        kappa=kappa,
        mu_at_kappa=mu_at_kappa,
        bracket=(lo, hi),
        iterations=iterations,
    )


def _energy_or_zero(spec: ProblemSpec) -> float:
    try:
        return ground_state_energy(spec).energy
    except NoBoundStateError:
        return 0.0


def energy_with_error(spec: ProblemSpec, state: Optional[GroundState] = None) -> Estimate:
    """
    E_1 on spec.grid with the difference to the half-resolution grid as error.

    A coarse grid without a bound state contributes E = 0 (the bottom of the
    spectrum) and is logged. Pass ``state`` to reuse a ground state already
    solved on spec.grid.
    """
    fine = (state if state is not None else ground_state_energy(spec)).energy
    try:
        coarse = ground_state_energy(spec.with_grid(spec.grid.coarsened())).energy
    except NoBoundStateError:
        logger.warning("No bound state on the coarse grid at alpha=%g; using E=0 there", spec.alpha)
        coarse = 0.0
    return Estimate(value=fine, error=abs(fine - coarse), coarse=coarse, fine=fine)


def isoperimetric_compare(alpha: float, L: float, R: float, loop: Loop, grid: Grid) -> IsoperimetricResult:
    """
    Compare E_1 of the circular cone with E_1 of the cone over ``loop``.

    margin = E_circle - E_loop; its error is the change of the margin between
    the grid and its half-resolution version. Status is "identical" for a
    circular loop, "no-bound-state" when neither cone binds, "strict" when
    margin exceeds three errors, "violated" when it is below minus three
    errors and "inconclusive" otherwise.
    """
    if not math.isclose(loop.length, L, rel_tol=1e-10):
        raise DomainError(f"Loop length {loop.length} differs from L={L}")
    circle_cone = Cone(R, make_circle(L))
    loop_cone = Cone(R, loop)
    coarse_grid = grid.coarsened()

    e_circle = _energy_or_zero(ProblemSpec(alpha, circle_cone, grid))
    e_loop = _energy_or_zero(ProblemSpec(alpha, loop_cone, grid))
    c_circle = _energy_or_zero(ProblemSpec(alpha, circle_cone, coarse_grid))
    c_loop = _energy_or_zero(ProblemSpec(alpha, loop_cone, coarse_grid))

    margin = e_circle - e_loop
    margin_error = abs(margin - (c_circle - c_loop))
    if loop.is_circular:
        status = "identical"
    elif e_circle == 0.0 and e_loop == 0.0:
        status = "no-bound-state"
    elif margin > MARGIN_SIGMAS * margin_error:
        status = "strict"
    elif margin < -MARGIN_SIGMAS * margin_error:
        status = "violated"
    else:
        status = "inconclusive"
    if status in ("violated", "inconclusive"):
        logger.warning("Isoperimetric comparison %s: margin=%.3e error=%.3e", status, margin, margin_error)

    return IsoperimetricResult(
        alpha=alpha,
        e_circle=e_circle,
        e_loop=e_loop,
        margin=margin,
        margin_error=margin_error,
        circle_error=abs(e_circle - c_circle),
        loop_error=abs(e_loop - c_loop),
        status=status,
    )


def transfer_bound(circle_cone: Cone, loop_cone: Cone, grid: Grid, kappa: float = 0.0) -> TransferBound:
    """
    Lift the rotationally invariant Perron vector of the circular cone to the loop cone.

    The lifted vector reproduces mu_circle on the circular cone; its Rayleigh
    quotient on the loop cone is a lower bound for mu_loop.
    """
    if not circle_cone.is_circular:
        raise DomainError("First cone must have a circular cross-section")
    if not math.isclose(circle_cone.radius, loop_cone.radius) or not math.isclose(
        circle_cone.length, loop_cone.length, rel_tol=1e-10
    ):
        raise DomainError("Cones must share R and L")

    radial = largest_eigenpair(BsAssembler(circle_cone, grid).radial(kappa, 0))
    lifted = np.repeat(radial.vector, grid.n_s) / math.sqrt(grid.n_s)
    matrix = BsAssembler(loop_cone, grid).full(kappa)
    quotient = float(lifted @ (matrix.entries @ lifted))
    mu_loop = largest_eigenvalue(matrix)
    return TransferBound(kappa=kappa, mu_circle=radial.mu, rayleigh_quotient=quotient, mu_loop=mu_loop)


def count_bound_states(spec: ProblemSpec, energy: float = 0.0, assembler: Optional[BsAssembler] = None) -> int:
    """
    Number of eigenvalues of H below ``energy`` <= 0: eigenvalues of S(sqrt(-energy)) above 1/alpha.

    Circular cones sum the counts of all radial blocks m = 0..n_s - 1, which
    together carry the spectrum of the full matrix. A diagnostic count.
    """
    if energy > 0.0:
        raise DomainError(f"Energy must be <= 0, got {energy}")
    kappa = math.sqrt(-energy)
    threshold = 1.0 / spec.alpha
    assembler = assembler or BsAssembler(spec.cone, spec.grid)
    if spec.cone.is_circular:
        return sum(eigencount_above(assembler.radial(kappa, m), threshold) for m in range(spec.grid.n_s))
    return eigencount_above(assembler.full(kappa), threshold)


def richardson_limit(R_values: Sequence[float], energies: Sequence[float]) -> float:
    """E(R) = E_inf + a/R + b/R^2 through the last three points; returns E_inf."""
    return three_point_limit([1.0 / R for R in R_values], energies)


def limit_study(
    alpha: float,
    L: float,
    loop: Loop,
    R_values: Sequence[float],
    points_per_unit: float = 8.0,
    n_s: int = 64,
    grading: float = 2.0,
) -> LimitStudy:
    """
    E_1(R) for growing R with n_r = ceil(points_per_unit * R).

    Each row also counts eigenvalues of H below -alpha^2/4 and in
    (-alpha^2/4, 0). The infinite cone is represented only by the labelled
    extrapolation of the last three energies in 1/R.
    """
    if not L < TWO_PI:
        raise DomainError(f"Limit study needs L < 2*pi, got L={L}")
    if not math.isclose(loop.length, L, rel_tol=1e-10):
        raise DomainError(f"Loop length {loop.length} differs from L={L}")
    radii = [float(R) for R in R_values]
    if not radii or radii[0] <= 0.0 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise DomainError(f"R values must be positive and strictly increasing, got {radii}")

    reference = -alpha * alpha / 4.0
    rows: List[LimitRow] = []
    for R in radii:
        n_r = max(4, math.ceil(points_per_unit * R))
        spec = ProblemSpec(alpha, Cone(R, loop), build_grid(R, L, n_r, n_s, grading))
        assembler = BsAssembler(spec.cone, spec.grid)
        try:
            estimate = energy_with_error(spec)
            energy, error = estimate.value, estimate.error
        except NoBoundStateError:
            energy, error = None, 0.0
        below = count_bound_states(spec, reference, assembler)
        total = count_bound_states(spec, 0.0, assembler)
        rows.append(LimitRow(R, n_r, energy, error, below, total - below))
        logger.info("R=%g n_r=%d E1=%s", R, n_r, energy)

    monotone = True
    for prev, row in zip(rows, rows[1:]):
        e_prev = prev.energy if prev.energy is not None else 0.0
        e_row = row.energy if row.energy is not None else 0.0
        if e_row > e_prev + prev.error + row.error:
            monotone = False
    if not monotone:
        logger.warning("E1(R) is not monotone within error bars; discretization too coarse")

    solved = [row for row in rows if row.energy is not None]
    extrapolated = extrapolation_error = None
    if len(solved) >= 3:
        limit = limit_estimate(
            [1.0 / row.R for row in solved], [row.energy for row in solved], [row.error for row in solved]
        )
        extrapolated, extrapolation_error = limit.value, limit.error

    return LimitStudy(
        alpha=alpha,
        length=L,
        rows=rows,
        reference=reference,
        monotone=monotone,
        extrapolated=extrapolated,
        extrapolation_error=extrapolation_error,
    )

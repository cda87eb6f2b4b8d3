"""
Nystrom discretization of the Birman-Schwinger operator on a finite cone.

    (S(kappa) psi)(x) = int_Sigma G_kappa(x - y) psi(y) dsigma(y),
    G_kappa(d) = exp(-kappa d) / (4 pi d)

Matrices are the symmetric similarity transform A = W^(1/2) K W^(-1/2) of the
Nystrom operator K, so A_ij = sqrt(w_i) G(d_ij) sqrt(w_j) off the diagonal and
A_ii is the integral of G over the node's own quadrature cell. For circular
cones the matrix is block-circulant in the angular index and splits into one
radial matrix per angular mode; assemble_radial builds those blocks directly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from .exceptions import (
    AccuracyError,
    DomainError,
    GridError,
    MisuseError,
    SingularArgumentError,
)
from .geometry import Cone, chord_sq_loop
from .utils import gauss_legendre

logger = logging.getLogger(__name__)

FOUR_PI = 4.0 * math.pi
CELL_NODES = 10
TAYLOR_ORDER = 8
MODE_KERNEL_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class Grid:
    """
    Tensor quadrature on (0, R) x [0, L).

    Node (a, j) has flat index a * n_s + j and weight
    r_weights[a] * r_nodes[a] * s_weights[j] for the measure r dr ds.

    Attributes:
        radius: Cone radius R
        length: Loop length L
        n_r: Radial node count
        n_s: Angular node count
        grading: Exponent of the map t -> R t**grading (1 = uniform)
        r_nodes: Radial nodes, strictly inside (0, R)
        r_weights: dr weights (Jacobian of the grading map included)
        r_edges: Radial cell boundaries, n_r + 1 values from 0 to R
        s_nodes: Angular midpoints
        s_weights: Angular weights L / n_s
    """

    radius: float
    length: float
    n_r: int
    n_s: int
    grading: float
    r_nodes: np.ndarray
    r_weights: np.ndarray
    r_edges: np.ndarray
    s_nodes: np.ndarray
    s_weights: np.ndarray

    @property
    def size(self) -> int:
        return self.n_r * self.n_s

    @property
    def s_step(self) -> float:
        return self.length / self.n_s

    @property
    def radial_measure(self) -> np.ndarray:
        return self.r_weights * self.r_nodes

    @property
    def weights(self) -> np.ndarray:
        return np.outer(self.radial_measure, self.s_weights).ravel()

    @property
    def total_measure(self) -> float:
        return float(np.sum(self.radial_measure) * np.sum(self.s_weights))

    def coarsened(self, factor: int = 2) -> "Grid":
        return build_grid(
            self.radius, self.length, max(4, self.n_r // factor), max(4, self.n_s // factor), self.grading
        )

    def refined(self, factor: int = 2) -> "Grid":
        return build_grid(self.radius, self.length, self.n_r * factor, self.n_s * factor, self.grading)

    def matches(self, cone: Cone) -> bool:
        return math.isclose(self.radius, cone.radius, rel_tol=1e-12) and math.isclose(
            self.length, cone.length, rel_tol=1e-12
        )


@dataclass(frozen=True, eq=False)
class BsMatrix:
    """
    Symmetric discretization of S(kappa).

    Attributes:
        kappa: Spectral parameter kappa >= 0
        entries: Dense symmetric matrix
        mode: "full" or the angular mode m of a radial block
        weighting: True when entries carry the symmetric sqrt(w) scaling
    """

    kappa: float
    entries: np.ndarray
    mode: Union[str, int] = "full"
    weighting: bool = True

    def __post_init__(self) -> None:
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise MisuseError(f"BsMatrix entries must be square, got shape {self.entries.shape}")

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def to_file(self, path: Path) -> None:
        from .serialization import write_matrix

        write_matrix(Path(path), self.entries)

    @classmethod
    def from_file(cls, path: Path, kappa: float = float("nan"), mode: Union[str, int] = "full") -> "BsMatrix":
        from .serialization import read_matrix

        return cls(kappa=kappa, entries=read_matrix(Path(path)), mode=mode)


def build_grid(R: float, L: float, n_r: int, n_s: int, grading: float = 2.0) -> Grid:
    """
    Build the tensor grid for a cone of radius R and loop length L.

    Radial nodes are Gauss-Legendre nodes on (0, 1) mapped by t -> R t**grading;
    radial cells are the images of the cumulative Gauss weights, which
    separate the nodes. Angular nodes are equispaced midpoints.

    Raises:
        DomainError: On non-positive sizes, counts below 4 or grading below 1
    """
    if not (R > 0.0 and L > 0.0):
        raise DomainError(f"Need R > 0 and L > 0, got R={R}, L={L}")
    if n_r < 4 or n_s < 4:
        raise DomainError(f"Need at least 4 nodes per direction, got n_r={n_r}, n_s={n_s}")
    if grading < 1.0:
        raise DomainError(f"Grading exponent must be >= 1, got {grading}")

    t, omega = gauss_legendre(n_r)
    r_nodes = R * t**grading
    r_weights = R * grading * t ** (grading - 1.0) * omega
    cumulative = np.concatenate([[0.0], np.cumsum(omega)])
    cumulative[-1] = 1.0
    r_edges = R * cumulative**grading

    step = L / n_s
    s_nodes = step * (np.arange(n_s) + 0.5)
    s_weights = np.full(n_s, step)

    return Grid(
        radius=float(R),
        length=float(L),
        n_r=int(n_r),
        n_s=int(n_s),
        grading=float(grading),
        r_nodes=r_nodes,
        r_weights=r_weights,
        r_edges=r_edges,
        s_nodes=s_nodes,
        s_weights=s_weights,
    )


def green_kernel(kappa: float, d: np.ndarray) -> np.ndarray:
    """
    G_kappa(d) = exp(-kappa d) / (4 pi d).

    Raises:
        SingularArgumentError: If any distance is not positive
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0.0):
        raise SingularArgumentError("Green kernel evaluated at zero distance; use the singular-cell rule")
    value = np.exp(-kappa * d) / (FOUR_PI * d)
    return value if value.ndim else float(value)


class BsAssembler:
    """
    Assembles S(kappa) matrices for one (cone, grid) pair.

    Node distances, weights and the singular-cell quadrature are computed once
    and cached, so a kappa sweep or a root-find only re-evaluates exponentials.
    """

    def __init__(self, cone: Cone, grid: Grid):
        if not grid.matches(cone):
            raise DomainError(
                f"Grid (R={grid.radius}, L={grid.length}) does not match cone "
                f"(R={cone.radius}, L={cone.length})"
            )
        self.cone = cone
        self.grid = grid
        self.loop = cone.cross_section

        self._sqrt_w = np.sqrt(grid.weights)
        self._sqrt_v = np.sqrt(grid.radial_measure)

        angular = self.loop.evaluate(grid.s_nodes)
        chord = np.clip(2.0 - 2.0 * (angular @ angular.T), 0.0, None)
        chord = 0.5 * (chord + chord.T)
        np.fill_diagonal(chord, 0.0)
        self._chord = chord

        self._full: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self._radial: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self._cells: Dict[str, Tuple[np.ndarray, np.ndarray]] = {}

    # -- singular cells ---------------------------------------------------

    def _cell_quadrature(self, a_idx: np.ndarray, s_values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Quadrature for the integral of G over each node's own cell.

        The cell is split into four triangles with apex at the node. Each
        triangle uses (lambda, z) coordinates, point = lambda * (a n + y t)
        with y = a sinh(z), which cancels the 1/d singularity and flattens the
        near-singular edge profile. Returns (distances, factors) such that
        integral(kappa) = sum(factors * exp(-kappa * distances), axis=1).
        """
        grid = self.grid
        r_a = grid.r_nodes[a_idx]
        u_lo = grid.r_edges[a_idx] - r_a
        u_hi = grid.r_edges[a_idx + 1] - r_a
        v_hi = 0.5 * r_a * grid.s_step

        derivs = self.loop.derivatives(s_values, TAYLOR_ORDER)
        lam, w_lam = gauss_legendre(CELL_NODES, 0.0, 1.0)
        zx, w_z = gauss_legendre(CELL_NODES, -1.0, 1.0)

        edges = [
            (u_hi, -v_hi, v_hi, (1.0, 0.0), (0.0, 1.0)),
            (-u_lo, -v_hi, v_hi, (-1.0, 0.0), (0.0, 1.0)),
            (v_hi, u_lo, u_hi, (0.0, 1.0), (1.0, 0.0)),
            (v_hi, u_lo, u_hi, (0.0, -1.0), (1.0, 0.0)),
        ]

        distances = []
        factors = []
        for a, y1, y2, normal, along in edges:
            z1 = np.arcsinh(y1 / a)
            z2 = np.arcsinh(y2 / a)
            half = 0.5 * (z2 - z1)
            z = 0.5 * (z1 + z2)[:, None] + half[:, None] * zx[None, :]
            y = a[:, None] * np.sinh(z)
            edge_u = normal[0] * a[:, None] + along[0] * y
            edge_v = normal[1] * a[:, None] + along[1] * y

            u = lam[None, None, :] * edge_u[:, :, None]
            v = lam[None, None, :] * edge_v[:, :, None]
            area = (
                lam[None, None, :]
                * (a**2)[:, None, None]
                * np.cosh(z)[:, :, None]
                * (half[:, None, None] * w_z[None, :, None])
                * w_lam[None, None, :]
            )

            r = r_a[:, None, None] + u
            delta = v / r_a[:, None, None]
            # Taylor polynomial of tau(s_j + delta) - tau(s_j) in Horner form
            acc = np.broadcast_to(derivs[TAYLOR_ORDER][:, None, None, :], u.shape + (3,))
            for p in range(TAYLOR_ORDER - 1, 0, -1):
                acc = derivs[p][:, None, None, :] + (delta / (p + 1))[..., None] * acc
            step = delta[..., None] * acc
            chord2 = np.sum(step**2, axis=-1)

            d = np.sqrt(u**2 + r * r_a[:, None, None] * chord2)
            factor = area * (r / r_a[:, None, None]) / (FOUR_PI * d)
            distances.append(d.reshape(d.shape[0], -1))
            factors.append(factor.reshape(factor.shape[0], -1))

        return np.concatenate(distances, axis=1), np.concatenate(factors, axis=1)

    def _cell_integrals(self, which: str, kappa: float) -> np.ndarray:
        if which not in self._cells:
            grid = self.grid
            if which == "radial":
                a_idx = np.arange(grid.n_r)
                s_values = np.full(grid.n_r, grid.s_nodes[0])
            else:
                a_idx = np.repeat(np.arange(grid.n_r), grid.n_s)
                s_values = np.tile(grid.s_nodes, grid.n_r)
            self._cells[which] = self._cell_quadrature(a_idx, s_values)
            logger.debug("Cached %s singular cells for %d nodes", which, a_idx.size)

        distances, factors = self._cells[which]
        if kappa == 0.0:
            return factors.sum(axis=1)
        return (factors * np.exp(-kappa * distances)).sum(axis=1)

    def diagonal(self, kappa: float) -> np.ndarray:
        """Diagonal entries of the full matrix (cell integrals), length N."""
        if self.cone.is_circular:
            return np.repeat(self._cell_integrals("radial", kappa), self.grid.n_s)
        return self._cell_integrals("full", kappa)

    def diagonal_cell(self, kappa: float, index: int) -> float:
        if not 0 <= index < self.grid.size:
            raise DomainError(f"Node index {index} out of range [0, {self.grid.size})")
        a, j = divmod(index, self.grid.n_s)
        distances, factors = self._cell_quadrature(np.array([a]), np.array([self.grid.s_nodes[j]]))
        return float(np.sum(factors * np.exp(-kappa * distances)))

    # -- full two-dimensional matrices -----------------------------------

    def _full_geometry(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._full is None:
            grid = self.grid
            r = grid.r_nodes
            dr2 = (r[:, None] - r[None, :]) ** 2
            rr = r[:, None] * r[None, :]
            d2 = dr2[:, None, :, None] + rr[:, None, :, None] * self._chord[None, :, None, :]
            d2 = d2.reshape(grid.size, grid.size)
            np.fill_diagonal(d2, 1.0)
            if np.any(d2 == 0.0):
                raise GridError("Two distinct grid nodes coincide")

            distance = np.sqrt(d2)
            base = np.outer(self._sqrt_w, self._sqrt_w) / (FOUR_PI * distance)
            np.fill_diagonal(base, 0.0)
            self._full = (distance, base)
        return self._full

    def full(self, kappa: float) -> BsMatrix:
        """Full N x N matrix at kappa."""
        if kappa < 0.0:
            raise DomainError(f"kappa must be nonnegative, got {kappa}")
        distance, base = self._full_geometry()
        entries = base.copy() if kappa == 0.0 else base * np.exp(-kappa * distance)
        np.fill_diagonal(entries, self.diagonal(kappa))
        return BsMatrix(kappa=float(kappa), entries=entries, mode="full")

    # -- radial blocks of circular cones ---------------------------------

    def _radial_geometry(self) -> Tuple[np.ndarray, np.ndarray]:
        if self._radial is None:
            grid = self.grid
            r = grid.r_nodes
            dr2 = (r[:, None] - r[None, :]) ** 2
            rr = r[:, None] * r[None, :]
            d2 = dr2[:, :, None] + rr[:, :, None] * self._chord[0][None, None, :]
            diag = np.arange(grid.n_r)
            d2[diag, diag, 0] = 1.0
            if np.any(d2 == 0.0):
                raise GridError("Two distinct grid nodes coincide")

            distance = np.sqrt(d2)
            base = grid.s_step / (FOUR_PI * distance)
            base[diag, diag, 0] = 0.0
            self._radial = (distance, base)
        return self._radial

    def radial(self, kappa: float, m: int) -> BsMatrix:
        """n_r x n_r block of angular mode m (circular cones only)."""
        if not self.cone.is_circular:
            raise MisuseError("Radial mode matrices need a circular cross-section")
        if kappa < 0.0:
            raise DomainError(f"kappa must be nonnegative, got {kappa}")

        distance, base = self._radial_geometry()
        kernel = base if kappa == 0.0 else base * np.exp(-kappa * distance)
        phases = np.cos(2.0 * math.pi * m * np.arange(self.grid.n_s) / self.grid.n_s)
        block = kernel @ phases
        block = np.triu(block) + np.triu(block, 1).T

        entries = np.outer(self._sqrt_v, self._sqrt_v) * block
        entries[np.diag_indices_from(entries)] += self._cell_integrals("radial", kappa)
        return BsMatrix(kappa=float(kappa), entries=entries, mode=int(m))

    def potentials(self) -> np.ndarray:
        """
        Row potentials sum_j K_ij of the kappa = 0 Nystrom operator.

        Per radial shell for circular cones, per node otherwise.
        """
        if self.cone.is_circular:
            block = self.radial(0.0, 0).entries
            return (block @ self._sqrt_v) / self._sqrt_v
        matrix = self.full(0.0).entries
        return (matrix @ self._sqrt_w) / self._sqrt_w


def assemble_full(cone: Cone, grid: Grid, kappa: float) -> BsMatrix:
    """Full two-dimensional discretization of S(kappa) on the cone."""
    return BsAssembler(cone, grid).full(kappa)


def singular_cell(cone: Cone, grid: Grid, kappa: float, i: int) -> float:
    """Diagonal entry of node i: integral of G_kappa over the node's cell."""
    return BsAssembler(cone, grid).diagonal_cell(kappa, i)


def assemble_radial(cone: Cone, grid: Grid, kappa: float, m: int) -> BsMatrix:
    """
    Radial matrix of angular mode m for a circular cone.

    B_ab = sqrt(v_a) [h sum_l F(r_a, r_b, t_l) cos(2 pi m l / n_s)] sqrt(v_b),
    v_a = r_weight_a * r_node_a, with the singular (a = b, l = 0) term
    replaced by the cell integral. These are exactly the angular Fourier
    blocks of assemble_full on the same grid.

    Raises:
        MisuseError: For non-circular cross-sections
    """
    if not cone.is_circular:
        raise MisuseError("assemble_radial needs a circular cross-section")
    return BsAssembler(cone, grid).radial(kappa, m)


def radial_mode_kernel(
    circle_cone: Cone, kappa: float, m: int, r: float, r_prime: float, n_t: int = 64
) -> float:
    """
    Mode kernel int_0^L F_kappa(r, r', t) cos(2 pi m t / L) dt.

    Periodic trapezoid at n_t and 2 n_t nodes; on the diagonal r = r' the
    nodes are offset by half a step so t = 0 is never sampled.

    Raises:
        MisuseError: For non-circular cross-sections
        DomainError: For radii outside [0, R] or n_t < 4
        AccuracyError: If the two resolutions disagree, which always happens
            on the diagonal where the kernel has a logarithmic singularity
    """
    if not circle_cone.is_circular:
        raise MisuseError("radial_mode_kernel needs a circular cross-section")
    R = circle_cone.radius
    if not (0.0 <= r <= R and 0.0 <= r_prime <= R):
        raise DomainError(f"Radii must lie in [0, {R}], got r={r}, r'={r_prime}")
    if n_t < 4:
        raise DomainError(f"Need n_t >= 4, got {n_t}")

    loop = circle_cone.cross_section
    L = loop.length
    offset = 0.5 if r == r_prime else 0.0

    def trapezoid(n: int) -> Tuple[float, float]:
        t = L * (np.arange(n) + offset) / n
        d = np.sqrt((r - r_prime) ** 2 + r * r_prime * chord_sq_loop(loop, 0.0, t))
        values = green_kernel(kappa, d)
        return (L / n) * float(np.sum(values * np.cos(2.0 * math.pi * m * t / L))), (L / n) * float(
            np.sum(values)
        )

    coarse, _ = trapezoid(n_t)
    fine, scale = trapezoid(2 * n_t)
    if abs(fine - coarse) > MODE_KERNEL_RTOL * scale:
        raise AccuracyError(
            f"Mode kernel unresolved at r={r}, r'={r_prime} with n_t={n_t}: {coarse!r} vs {fine!r}",
            coarse=coarse,
            fine=fine,
        )
    return fine

"""
Spectral tools for Birman-Schwinger matrices: the Perron eigenpair, eigenvalue
counts above a threshold, and angular-mode diagnostics for circular cones.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Union

import numpy as np
from scipy.linalg import eigh, eigvalsh
from scipy.sparse.linalg import eigsh

from .bs_operator import BsAssembler, BsMatrix, Grid
from .exceptions import DomainError, MisuseError, NumericError
from .geometry import Cone

logger = logging.getLogger(__name__)

DENSE_LIMIT = 2048
POWER_TOL = 1e-12
POWER_MAX_ITER = 20000
SIMPLE_GAP_RTOL = 1e-9

MatrixLike = Union[BsMatrix, np.ndarray]


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """
    Largest eigenpair of a symmetric matrix with diagnostics.

    Attributes:
        mu: Largest eigenvalue
        vector: Unit eigenvector, sign-normalized (largest-magnitude entry positive)
        residual: ||A v - mu v||_2
        gap: mu minus the second largest eigenvalue (inf for 1 x 1 matrices)
        count_above: Eigenvalue counts above the requested thresholds
        method: "dense" or "power"
        iterations: Power iterations used (0 for the dense path)
    """

    mu: float
    vector: np.ndarray
    residual: float
    gap: float
    count_above: Dict[float, int] = field(default_factory=dict)
    method: str = "dense"
    iterations: int = 0

    @property
    def is_simple(self) -> bool:
        return self.gap > SIMPLE_GAP_RTOL * abs(self.mu)

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.vector > 0.0))


def _entries(A: MatrixLike) -> np.ndarray:
    matrix = A.entries if isinstance(A, BsMatrix) else np.asarray(A, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise MisuseError(f"Expected a square matrix, got shape {matrix.shape}")
    return matrix


def _normalize_sign(vector: np.ndarray) -> np.ndarray:
    vector = vector / np.linalg.norm(vector)
    return -vector if vector[np.argmax(np.abs(vector))] < 0.0 else vector


def _power_iteration(matrix: np.ndarray, shift: float, tol: float, max_iter: int):
    """Power iteration on A + shift*I from the all-ones vector."""
    n = matrix.shape[0]
    v = np.ones(n) / math.sqrt(n)
    mu = 0.0
    residual = math.inf
    for iteration in range(1, max_iter + 1):
        w = matrix @ v
        mu = float(v @ w)
        residual = float(np.linalg.norm(w - mu * v))
        if residual <= tol * abs(mu):
            return mu, v, iteration, residual
        w = w + shift * v
        v = w / np.linalg.norm(w)
    raise NumericError(
        f"Power iteration did not converge in {max_iter} iterations",
        diagnostics={"iterations": max_iter, "mu": mu, "residual": residual, "shift": shift},
    )


def largest_eigenpair(
    A: MatrixLike,
    thresholds: Sequence[float] = (),
    method: str = "auto",
    shift: float = 0.0,
    tol: float = POWER_TOL,
    max_iter: int = POWER_MAX_ITER,
) -> SpectralResult:
    """
    Largest eigenvalue and eigenvector of a symmetric matrix.

    Dense symmetric decomposition for N <= 2048 (or method="dense"); power
    iteration otherwise, with the second eigenvalue taken from a Lanczos run
    for the gap.

    Args:
        A: Symmetric BsMatrix or array
        thresholds: Values t for which the count of eigenvalues > t is recorded
        method: "auto", "dense" or "power"
        shift: Spectral shift for the power iteration
        tol: Relative residual tolerance for the power iteration
        max_iter: Power iteration limit

    Raises:
        NumericError: If the power iteration does not converge
    """
    matrix = _entries(A)
    n = matrix.shape[0]
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "power"
    if method not in ("dense", "power"):
        raise MisuseError(f"Unknown eigen method: {method}")

    iterations = 0
    if method == "dense":
        values, vectors = eigh(matrix)
        mu = float(values[-1])
        vector = vectors[:, -1]
        gap = float(values[-1] - values[-2]) if n > 1 else math.inf
        counts = {float(t): int(np.count_nonzero(values > t)) for t in thresholds}
    else:
        mu, vector, iterations, _ = _power_iteration(matrix, shift, tol, max_iter)
        if n > 2:
            top = np.sort(eigsh(matrix, k=2, which="LA", return_eigenvectors=False))
            gap = float(mu - top[0])
        else:
            values = eigvalsh(matrix)
            gap = float(values[-1] - values[0]) if n > 1 else math.inf
        counts = {}
        if thresholds:
            values = eigvalsh(matrix)
            counts = {float(t): int(np.count_nonzero(values > t)) for t in thresholds}

    vector = _normalize_sign(vector)
    residual = float(np.linalg.norm(matrix @ vector - mu * vector))
    logger.debug("Largest eigenpair (%s, N=%d): mu=%.15g gap=%.3e residual=%.1e", method, n, mu, gap, residual)
    return SpectralResult(
        mu=mu,
        vector=vector,
        residual=residual,
        gap=gap,
        count_above=counts,
        method=method,
        iterations=iterations,
    )


def largest_eigenvalue(A: MatrixLike, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """Largest eigenvalue only; the cheap path used inside root-finding."""
    matrix = _entries(A)
    n = matrix.shape[0]
    if n <= DENSE_LIMIT:
        return float(eigvalsh(matrix, subset_by_index=[n - 1, n - 1])[0])
    mu, _, _, _ = _power_iteration(matrix, 0.0, tol, max_iter)
    return mu


def eigencount_above(A: MatrixLike, threshold: float) -> int:
    """Number of eigenvalues strictly greater than threshold > 0."""
    if not threshold > 0.0:
        raise DomainError(f"Threshold must be positive, got {threshold}")
    values = eigvalsh(_entries(A))
    return int(np.count_nonzero(values > threshold))


def mode_coupling_residual(
    cone: Cone,
    grid: Grid,
    kappa: float,
    m: int,
    n: int,
    assembler: Optional[BsAssembler] = None,
) -> float:
    """
    ||P_m A P_n||_F / ||A||_F for the full matrix A(kappa).

    P_m projects each radial shell onto the sampled angular mode
    exp(2 pi i m s / L). For circular cones the blocks vanish for m != n;
    other cones give a nonzero coupling.

    Raises:
        MisuseError: If m == n, or m and n alias on the angular grid
    """
    if m == n or (m - n) % grid.n_s == 0:
        raise MisuseError(f"Coupling residual needs distinct modes on {grid.n_s} angular nodes, got m={m}, n={n}")
    assembler = assembler or BsAssembler(cone, grid)
    matrix = assembler.full(kappa).entries
    blocks = matrix.reshape(grid.n_r, grid.n_s, grid.n_r, grid.n_s)

    phase = 2.0 * math.pi * grid.s_nodes / grid.length
    q_m = np.exp(1j * m * phase) / math.sqrt(grid.n_s)
    q_n = np.exp(1j * n * phase) / math.sqrt(grid.n_s)
    coupling = np.einsum("j,ajbl,l->ab", q_m.conj(), blocks, q_n)
    return float(np.linalg.norm(coupling) / np.linalg.norm(matrix))


def angular_mode_mass(vector: np.ndarray, grid: Grid) -> float:
    """
    Largest fraction of total mass carried by angular modes m != 0 on one radial shell.

    Zero for rotationally invariant vectors.
    """
    vector = np.asarray(vector, dtype=float)
    if vector.size != grid.size:
        raise MisuseError(f"Vector of length {vector.size} does not fit a grid of {grid.size} nodes")
    power = np.abs(np.fft.fft(vector.reshape(grid.n_r, grid.n_s), axis=1)) ** 2
    return float(np.max(power[:, 1:].sum(axis=1)) / power.sum())

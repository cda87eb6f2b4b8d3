import numpy as np
import pytest

from deltacone.bs_operator import BsAssembler, assemble_full
from deltacone.exceptions import DomainError, MisuseError
from deltacone.spectral import (
    angular_mode_mass,
    eigencount_above,
    largest_eigenpair,
    largest_eigenvalue,
    mode_coupling_residual,
)


@pytest.fixture(scope="module")
def disk_matrix(disk, disk_grid):
    return assemble_full(disk, disk_grid, 0.0)


class TestLargestEigenpair:
    def test_diagonal(self):
        result = largest_eigenpair(np.diag([3.0, 2.0, 1.0]))
        assert result.mu == 3.0
        np.testing.assert_allclose(result.vector, [1.0, 0.0, 0.0], atol=1e-14)
        assert result.gap == pytest.approx(1.0)
        assert result.residual < 1e-14
        assert result.is_simple

    def test_perron_vector(self, disk_matrix):
        result = largest_eigenpair(disk_matrix)
        assert result.is_positive
        assert result.is_simple
        assert result.residual < 1e-10 * result.mu
        assert result.mu == pytest.approx(largest_eigenvalue(disk_matrix), rel=1e-12)

    def test_power_iteration_agrees(self, disk_matrix):
        dense = largest_eigenpair(disk_matrix, method="dense")
        power = largest_eigenpair(disk_matrix, method="power")
        assert power.method == "power"
        assert power.iterations > 0
        assert power.mu == pytest.approx(dense.mu, rel=1e-10)
        assert power.gap == pytest.approx(dense.gap, rel=1e-6)
        np.testing.assert_allclose(power.vector, dense.vector, atol=1e-6)

    def test_thresholds(self, disk_matrix):
        mu = largest_eigenvalue(disk_matrix)
        result = largest_eigenpair(disk_matrix, thresholds=(0.5 * mu, 2.0 * mu))
        assert result.count_above[2.0 * mu] == 0
        assert result.count_above[0.5 * mu] >= 1

    def test_thresholds_agree_across_methods(self, disk_matrix):
        mu = largest_eigenvalue(disk_matrix)
        thresholds = (-2.0 * mu, 0.5 * mu)
        dense = largest_eigenpair(disk_matrix, thresholds=thresholds, method="dense")
        power = largest_eigenpair(disk_matrix, thresholds=thresholds, method="power")
        assert power.count_above == dense.count_above
        assert dense.count_above[-2.0 * mu] == disk_matrix.size

    def test_unknown_method(self, disk_matrix):
        with pytest.raises(MisuseError):
            largest_eigenpair(disk_matrix, method="qr")

    def test_non_square(self):
        with pytest.raises(MisuseError):
            largest_eigenpair(np.ones((3, 2)))


class TestEigencount:
    def test_above_spectrum(self, disk_matrix):
        assert eigencount_above(disk_matrix, 1.01 * largest_eigenvalue(disk_matrix)) == 0

    def test_monotone_in_threshold(self, disk_matrix):
        mu = largest_eigenvalue(disk_matrix)
        counts = [eigencount_above(disk_matrix, t * mu) for t in (0.9, 0.5, 0.2, 0.1, 0.01)]
        assert counts == sorted(counts)
        assert counts[0] >= 1
        assert counts[-1] <= disk_matrix.size

    def test_monotone_in_coupling(self, disk, disk_grid):
        matrix = assemble_full(disk, disk_grid, 0.5)
        counts = [eigencount_above(matrix, 1.0 / alpha) for alpha in (5.0, 10.0, 20.0, 40.0)]
        assert counts == sorted(counts)

    @pytest.mark.parametrize("threshold", [0.0, -1.0])
    def test_nonpositive_threshold(self, disk_matrix, threshold):
        with pytest.raises(DomainError):
            eigencount_above(disk_matrix, threshold)


class TestModeCoupling:
    @pytest.mark.parametrize("kappa", [0.0, 0.5])
    def test_circular_modes_decouple(self, circle_cone, pi_grid, kappa):
        assembler = BsAssembler(circle_cone, pi_grid)
        modes = (-3, -2, -1, 0, 1, 2, 3)
        worst = max(
            mode_coupling_residual(circle_cone, pi_grid, kappa, m, n, assembler)
            for m in modes
            for n in modes
            if m != n
        )
        assert worst < 1e-8

    def test_non_circular_modes_couple(self, wavy_cone, pi_grid):
        assert mode_coupling_residual(wavy_cone, pi_grid, 0.0, 0, 2) > 1e-3

    def test_symmetric_in_modes(self, wavy_cone, pi_grid):
        assembler = BsAssembler(wavy_cone, pi_grid)
        forward = mode_coupling_residual(wavy_cone, pi_grid, 0.3, 0, 2, assembler)
        backward = mode_coupling_residual(wavy_cone, pi_grid, 0.3, 2, 0, assembler)
        assert forward == pytest.approx(backward, rel=1e-10)

    @pytest.mark.parametrize("m, n", [(1, 1), (0, 16)])
    def test_same_or_aliased_mode(self, circle_cone, pi_grid, m, n):
        with pytest.raises(MisuseError):
            mode_coupling_residual(circle_cone, pi_grid, 0.0, m, n)


class TestAngularModeMass:
    def test_perron_vector_is_rotation_invariant(self, disk_matrix, disk_grid):
        vector = largest_eigenpair(disk_matrix).vector
        assert angular_mode_mass(vector, disk_grid) < 1e-6

    def test_single_mode(self, disk_grid):
        shell = np.cos(2.0 * np.pi * 2.0 * disk_grid.s_nodes / disk_grid.length)
        vector = np.tile(shell, disk_grid.n_r)
        assert angular_mode_mass(vector, disk_grid) == pytest.approx(1.0 / disk_grid.n_r, rel=1e-10)

    def test_wrong_length(self, disk_grid):
        with pytest.raises(MisuseError):
            angular_mode_mass(np.ones(3), disk_grid)

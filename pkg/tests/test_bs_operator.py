import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import integrate

from deltacone.bs_operator import (
    BsAssembler,
    BsMatrix,
    assemble_full,
    assemble_radial,
    build_grid,
    green_kernel,
    radial_mode_kernel,
    singular_cell,
)
from deltacone.exceptions import AccuracyError, DomainError, GridError, MisuseError, SingularArgumentError
from deltacone.geometry import Cone, surface_constants

TWO_PI = 2.0 * math.pi


def brute_force_cell(grid, a, j, kappa):
    """Cell integral on the flat disk by adaptive quadrature over four quadrants."""
    r_a = grid.r_nodes[a]
    s_j = grid.s_nodes[j]
    h = grid.s_step

    def integrand(s, r):
        d = math.sqrt(r_a**2 + r**2 - 2.0 * r_a * r * math.cos(s - s_j))
        return math.exp(-kappa * d) / (4.0 * math.pi * d) * r

    total = 0.0
    for r_lo, r_hi in ((grid.r_edges[a], r_a), (r_a, grid.r_edges[a + 1])):
        for s_lo, s_hi in ((s_j - 0.5 * h, s_j), (s_j, s_j + 0.5 * h)):
            value, _ = integrate.dblquad(integrand, r_lo, r_hi, s_lo, s_hi, epsabs=1e-13, epsrel=1e-10)
            total += value
    return total


class TestGrid:
    @pytest.mark.parametrize("R, L", [(1.0, TWO_PI), (2.0, math.pi), (0.5, 1.5 * math.pi)])
    def test_measure_is_exact(self, R, L):
        grid = build_grid(R, L, 8, 12, 2.0)
        assert grid.total_measure == pytest.approx(0.5 * L * R**2, rel=1e-12)
        assert grid.size == 96

    def test_cells_separate_nodes(self):
        grid = build_grid(1.0, math.pi, 12, 8, 2.0)
        assert grid.r_edges[0] == 0.0
        assert grid.r_edges[-1] == pytest.approx(1.0, rel=1e-15)
        assert np.all(grid.r_edges[:-1] < grid.r_nodes)
        assert np.all(grid.r_nodes < grid.r_edges[1:])

    def test_grading_clusters_at_tip(self):
        uniform = build_grid(1.0, math.pi, 8, 8, 1.0)
        graded = build_grid(1.0, math.pi, 8, 8, 2.0)
        assert graded.r_nodes[0] < uniform.r_nodes[0]

    def test_coarsened_and_refined(self):
        grid = build_grid(1.0, math.pi, 8, 16)
        assert (grid.coarsened().n_r, grid.coarsened().n_s) == (4, 8)
        assert (grid.refined().n_r, grid.refined().n_s) == (16, 32)

    @pytest.mark.parametrize(
        "args",
        [(0.0, math.pi, 8, 8, 2.0), (1.0, 0.0, 8, 8, 2.0), (1.0, math.pi, 3, 8, 2.0), (1.0, math.pi, 8, 8, 0.5)],
    )
    def test_invalid(self, args):
        with pytest.raises(DomainError):
            build_grid(*args)


class TestGreenKernel:
    def test_values(self):
        assert green_kernel(0.0, 1.0) == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-15)
        assert green_kernel(1.0, 1.0) == pytest.approx(math.exp(-1.0) / (4.0 * math.pi), rel=1e-15)

    def test_decreasing(self):
        d = np.linspace(0.1, 3.0, 30)
        values = green_kernel(0.7, d)
        assert np.all(np.diff(values) < 0.0)
        assert np.all(green_kernel(1.5, d) < values)

    def test_zero_distance(self):
        with pytest.raises(SingularArgumentError):
            green_kernel(1.0, 0.0)


class TestFullMatrix:
    def test_symmetric_and_positive(self, wavy_cone, pi_grid):
        entries = assemble_full(wavy_cone, pi_grid, 0.5).entries
        assert entries.shape == (pi_grid.size, pi_grid.size)
        assert np.array_equal(entries, entries.T)
        assert np.all(entries > 0.0)

    def test_decreasing_in_kappa(self, wavy_cone, pi_grid):
        assembler = BsAssembler(wavy_cone, pi_grid)
        lower = assembler.full(0.2).entries
        upper = assembler.full(1.0).entries
        assert np.all(upper < lower)

    def test_negative_kappa(self, disk, disk_grid):
        with pytest.raises(DomainError):
            assemble_full(disk, disk_grid, -0.1)

    def test_grid_must_match_cone(self, disk, pi_grid):
        with pytest.raises(DomainError):
            assemble_full(disk, pi_grid, 0.0)

    def test_coinciding_nodes(self, disk, disk_grid):
        r_nodes = disk_grid.r_nodes.copy()
        r_nodes[1] = r_nodes[0]
        with pytest.raises(GridError):
            assemble_full(disk, replace(disk_grid, r_nodes=r_nodes), 0.0)

    def test_norm_envelope(self, wavy_cone, pi_grid):
        constants = surface_constants(wavy_cone, pi_grid)
        assembler = BsAssembler(wavy_cone, pi_grid)
        base = assembler.full(0.0).entries
        for kappa in (0.01, 0.1, 0.5, 1.0):
            gap = np.linalg.norm(base - assembler.full(kappa).entries, 2)
            assert gap <= 1.1 * constants.potential * (1.0 - math.exp(-kappa * constants.diameter))


class TestSingularCell:
    @pytest.mark.parametrize("kappa", [0.0, 1.0])
    def test_matches_adaptive_quadrature(self, disk, kappa):
        grid = build_grid(1.0, TWO_PI, 12, 24, 2.0)
        a, j = 6, 5
        value = singular_cell(disk, grid, kappa, a * grid.n_s + j)
        assert value == pytest.approx(brute_force_cell(grid, a, j, kappa), rel=1e-5)

    def test_positive_and_decreasing(self, wavy_cone, pi_grid):
        index = 3 * pi_grid.n_s + 7
        at_zero = singular_cell(wavy_cone, pi_grid, 0.0, index)
        assert 0.0 < singular_cell(wavy_cone, pi_grid, 2.0, index) < at_zero

    def test_matches_diagonal(self, wavy_cone, pi_grid):
        diagonal = BsAssembler(wavy_cone, pi_grid).diagonal(0.3)
        assert singular_cell(wavy_cone, pi_grid, 0.3, 21) == pytest.approx(diagonal[21], rel=1e-14)

    def test_index_out_of_range(self, disk, disk_grid):
        with pytest.raises(DomainError):
            singular_cell(disk, disk_grid, 0.0, disk_grid.size)


class TestRadialBlocks:
    def test_same_spectrum_as_full(self, circle_cone, pi_grid):
        assembler = BsAssembler(circle_cone, pi_grid)
        full = np.linalg.eigvalsh(assembler.full(0.4).entries)
        blocks = np.concatenate(
            [np.linalg.eigvalsh(assembler.radial(0.4, m).entries) for m in range(pi_grid.n_s)]
        )
        np.testing.assert_allclose(np.sort(blocks), full, rtol=1e-10, atol=1e-13 * full[-1])

    def test_mode_zero_dominates(self, disk, disk_grid):
        top = [np.linalg.eigvalsh(assemble_radial(disk, disk_grid, 0.0, m).entries)[-1] for m in range(4)]
        assert top[0] == max(top)
        assert np.all(assemble_radial(disk, disk_grid, 0.0, 0).entries > 0.0)

    def test_non_circular(self, wavy_cone, pi_grid):
        with pytest.raises(MisuseError):
            assemble_radial(wavy_cone, pi_grid, 0.0, 0)


class TestRadialModeKernel:
    @pytest.fixture
    def wide_disk(self, great_circle):
        return Cone(2.0, great_circle)

    def test_matches_quadrature(self, wide_disk):
        expected, _ = integrate.quad(
            lambda t: 1.0 / (4.0 * math.pi * math.sqrt(5.0 - 4.0 * math.cos(t))), 0.0, TWO_PI, epsabs=1e-14
        )
        assert radial_mode_kernel(wide_disk, 0.0, 0, 1.0, 2.0) == pytest.approx(expected, rel=1e-10)

    def test_tip_suppresses_higher_modes(self, wide_disk):
        k0 = radial_mode_kernel(wide_disk, 0.0, 0, 1.0, 1e-9)
        assert abs(radial_mode_kernel(wide_disk, 0.0, 2, 1.0, 1e-9)) < 1e-6 * k0

    def test_modes_bounded_by_mode_zero(self, wide_disk):
        k0 = radial_mode_kernel(wide_disk, 0.5, 0, 0.7, 1.3)
        for m in (1, 2, 5):
            assert abs(radial_mode_kernel(wide_disk, 0.5, m, 0.7, 1.3)) <= k0

    def test_diagonal_is_unresolved(self, wide_disk):
        with pytest.raises(AccuracyError):
            radial_mode_kernel(wide_disk, 0.0, 0, 1.0, 1.0)

    def test_radius_outside_cone(self, wide_disk):
        with pytest.raises(DomainError):
            radial_mode_kernel(wide_disk, 0.0, 0, 1.0, 3.0)

    def test_non_circular(self, wavy_cone):
        with pytest.raises(MisuseError):
            radial_mode_kernel(wavy_cone, 0.0, 0, 0.5, 0.7)


class TestBsMatrixFile:
    def test_round_trip(self, disk, disk_grid, tmp_path):
        matrix = assemble_full(disk, disk_grid, 0.25)
        matrix.to_file(tmp_path / "s.bin")
        loaded = BsMatrix.from_file(tmp_path / "s.bin", kappa=0.25)
        assert np.array_equal(loaded.entries, matrix.entries)
        assert loaded.kappa == 0.25

import math

import numpy as np
import pytest

from deltacone.bs_operator import build_grid
from deltacone.exceptions import DomainError, InfeasibleShapeError, InvalidShapeError
from deltacone.geometry import (
    Cone,
    chord_sq_loop,
    cone_chord_sq,
    loop_from_samples,
    make_circle,
    make_perturbed_loop,
    measured_length,
    polar_curve_length,
    reparametrize,
    surface_constants,
    validate_loop,
)

TWO_PI = 2.0 * math.pi


class TestCircle:
    def test_great_circle_is_equator(self, great_circle):
        s = np.linspace(0.0, TWO_PI, 37, endpoint=False)
        expected = np.stack([np.cos(s), np.sin(s), np.zeros_like(s)], axis=-1)
        np.testing.assert_allclose(great_circle.evaluate(s), expected, atol=1e-12)

    def test_antipodal_chord(self, great_circle):
        assert chord_sq_loop(great_circle, 0.0, math.pi) == pytest.approx(4.0, abs=1e-12)

    def test_small_circle_start_point(self, circle_pi):
        np.testing.assert_allclose(circle_pi.evaluate(0.0), [0.5, 0.0, math.sqrt(3.0) / 2.0], atol=1e-12)
        assert circle_pi.theta0 == pytest.approx(math.pi / 6.0, abs=1e-14)

    @pytest.mark.parametrize("L", [0.0, -1.0, 7.0])
    def test_out_of_range_length(self, L):
        with pytest.raises(DomainError):
            make_circle(L)

    def test_unit_speed_and_sphere(self, circle_pi):
        s = np.linspace(0.0, math.pi, 101)
        np.testing.assert_allclose(np.linalg.norm(circle_pi.evaluate(s), axis=-1), 1.0, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(circle_pi.tangent(s), axis=-1), 1.0, atol=1e-10)

    def test_is_circular(self, circle_pi, wavy_pi):
        assert circle_pi.is_circular
        assert not wavy_pi.is_circular


class TestPerturbedLoop:
    def test_zero_amplitude_recovers_circle(self, circle_pi):
        for k in (2, 3, 5):
            loop = make_perturbed_loop(math.pi, 0.0, k)
            s = np.linspace(0.0, math.pi, 200, endpoint=False)
            assert np.max(np.abs(loop.evaluate(s) - circle_pi.evaluate(s))) < 1e-10
            assert loop.is_circular

    def test_length_matches(self, wavy_pi):
        assert measured_length(wavy_pi) == pytest.approx(math.pi, rel=1e-10)
        assert polar_curve_length(wavy_pi.theta0, 0.1, 2) == pytest.approx(math.pi, rel=1e-12)

    def test_loop_invariants_hold(self, wavy_pi):
        validate_loop(wavy_pi)

    def test_non_circular(self):
        loop = make_perturbed_loop(math.pi, 0.1, 3)
        _, points = loop.sample(512)
        axis = points.mean(axis=0)
        axis /= np.linalg.norm(axis)
        geodesic = np.arccos(np.clip(points @ axis, -1.0, 1.0))
        assert np.var(geodesic) > 1e-4

    @pytest.mark.parametrize("L, eps, k", [(math.pi, 0.2, 3), (0.5 * math.pi, 0.1, 3)])
    def test_strongly_perturbed_loops_are_resolved(self, L, eps, k):
        loop = make_perturbed_loop(L, eps, k)
        validate_loop(loop)
        assert measured_length(loop) == pytest.approx(L, rel=1e-10)
        s = np.linspace(0.0, L, 257)
        np.testing.assert_allclose(np.linalg.norm(loop.tangent(s), axis=-1), 1.0, atol=1e-8)

    def test_perturbation_peaks_at_origin(self, wavy_pi):
        polar = math.acos(wavy_pi.evaluate(0.0)[2])
        assert polar == pytest.approx(wavy_pi.theta0 + wavy_pi.eps, abs=1e-10)

    def test_infeasible_length(self):
        with pytest.raises(InfeasibleShapeError):
            make_perturbed_loop(0.5 * math.pi, 0.2, 3)

    def test_amplitude_leaves_polar_range(self):
        with pytest.raises(InvalidShapeError):
            make_perturbed_loop(math.pi, 2.0, 2)

    @pytest.mark.parametrize("eps, k", [(-0.1, 2), (0.1, 1), (0.1, 2.5)])
    def test_bad_parameters(self, eps, k):
        with pytest.raises(DomainError):
            make_perturbed_loop(math.pi, eps, k)

    def test_reparametrization_is_idempotent(self, wavy_pi):
        again = reparametrize(wavy_pi)
        s = np.linspace(0.0, math.pi, 300, endpoint=False)
        assert np.max(np.abs(again.evaluate(s) - wavy_pi.evaluate(s))) < 1e-10

    def test_shift(self, wavy_pi):
        shifted = wavy_pi.shifted(0.3)
        s = np.linspace(0.0, 2.0, 50)
        np.testing.assert_allclose(shifted.evaluate(s), wavy_pi.evaluate(s + 0.3), atol=1e-12)

    def test_derivatives_match_finite_differences(self, wavy_pi):
        s = np.linspace(0.1, 3.0, 20)
        h = 1e-5
        derivs = wavy_pi.derivatives(s, 2)
        fd = (wavy_pi.evaluate(s + h) - wavy_pi.evaluate(s - h)) / (2.0 * h)
        np.testing.assert_allclose(derivs[1], fd, atol=1e-8)
        fd2 = (wavy_pi.tangent(s + h) - wavy_pi.tangent(s - h)) / (2.0 * h)
        np.testing.assert_allclose(derivs[2], fd2, atol=1e-7)


class TestSampledLoop:
    def test_samples_of_circle(self, circle_pi):
        s, points = circle_pi.sample(128)
        loop = loop_from_samples(s, points, math.pi)
        assert loop.kind == "user-supplied-samples"
        assert loop.length == pytest.approx(math.pi, rel=1e-5)
        assert not loop.is_circular

    def test_too_few_samples(self, circle_pi):
        s, points = circle_pi.sample(4)
        with pytest.raises(DomainError):
            loop_from_samples(s, points, math.pi)


class TestChords:
    def test_coincident_points(self, wavy_pi):
        assert chord_sq_loop(wavy_pi, 1.2, 1.2) == pytest.approx(0.0, abs=1e-14)
        assert cone_chord_sq(0.7, 1.2, 0.7, 1.2, wavy_pi) == pytest.approx(0.0, abs=1e-14)

    def test_tip(self, wavy_pi):
        assert cone_chord_sq(0.8, 0.3, 0.0, 2.1, wavy_pi) == pytest.approx(0.64, rel=1e-15)

    def test_parameter_out_of_range(self, wavy_pi):
        with pytest.raises(DomainError):
            chord_sq_loop(wavy_pi, -0.5, 1.0)
        with pytest.raises(DomainError):
            cone_chord_sq(-1.0, 0.0, 1.0, 0.0, wavy_pi)

    def test_chord_identity_on_random_tuples(self, great_circle, circle_pi, wavy_pi):
        rng = np.random.default_rng(1234)
        loops = [great_circle, circle_pi, wavy_pi, make_perturbed_loop(math.pi, 0.1, 3), make_circle(1.5 * math.pi)]
        for loop, R in zip(loops, (1.0, 2.0, 1.0, 0.5, 1.5)):
            cone = Cone(R, loop)
            n = 2000
            r, r_prime = rng.uniform(0.0, R, n), rng.uniform(0.0, R, n)
            s, t = rng.uniform(0.0, loop.length, n), rng.uniform(0.0, loop.length, n)
            direct = np.sum((cone.point(r, s) - cone.point(r_prime, t)) ** 2, axis=-1)
            np.testing.assert_allclose(cone_chord_sq(r, s, r_prime, t, loop), direct, rtol=1e-12, atol=1e-13)


class TestCone:
    def test_area_and_point(self, circle_pi):
        cone = Cone(2.0, circle_pi)
        assert cone.area == pytest.approx(2.0 * math.pi)
        np.testing.assert_allclose(cone.point(2.0, 0.0), [1.0, 0.0, math.sqrt(3.0)], atol=1e-12)

    @pytest.mark.parametrize("R", [0.0, -1.0, math.inf])
    def test_bad_radius(self, circle_pi, R):
        with pytest.raises(DomainError):
            Cone(R, circle_pi)


class TestSurfaceConstants:
    def test_disk(self, disk):
        constants = surface_constants(disk, build_grid(1.0, TWO_PI, 16, 32, 2.0))
        assert constants.diameter == pytest.approx(2.0, abs=1e-12)
        assert constants.potential == pytest.approx(0.5, abs=0.02)
        assert constants.potential_error >= 0.0

    def test_positive_and_finite(self, wavy_cone, pi_grid):
        constants = surface_constants(wavy_cone, pi_grid)
        assert 0.0 < constants.potential < math.inf
        assert constants.diameter >= 1.0

from __future__ import annotations

import math
from typing import List

import numpy as np

from deltacone.bs_operator import BsAssembler, build_grid
from deltacone.geometry import Cone, make_circle, make_perturbed_loop, surface_constants
from deltacone.solver import MuCurve, ProblemSpec, bound_state_exists, critical_alpha, ground_state_energy
from deltacone.spectral import largest_eigenpair

from .common import Case

N_R = 8
N_S = 16
MULTIPLIERS = (1.01, 1.2, 1.5, 2.0, 3.0, 4.0, 6.0)
KAPPAS = tuple(0.1 * i for i in range(21))


def _grid(cone: Cone):
    return build_grid(cone.radius, cone.length, N_R, N_S)


def _radius_scaling(L: float, R: float):
    def run():
        loop = make_circle(L)
        small = critical_alpha(Cone(1.0, loop), build_grid(1.0, L, N_R, N_S))
        large = critical_alpha(Cone(R, loop), build_grid(R, L, N_R, N_S))
        ratio = small / large
        return ratio, math.isclose(ratio, R, rel_tol=1e-10)

    return run


def _mu_in_kappa(cone: Cone):
    def run():
        curve = MuCurve(cone, _grid(cone))
        values = [curve(kappa) for kappa in KAPPAS]
        steps = [a - b for a, b in zip(values, values[1:])]
        return min(steps), all(step > 0.0 for step in steps)

    return run


def _norm_envelope(cone: Cone):
    def run():
        grid = _grid(cone)
        constants = surface_constants(cone, grid)
        assembler = BsAssembler(cone, grid)
        base = assembler.full(0.0).entries
        worst = 0.0
        for kappa in (0.01, 0.1, 0.5, 1.0, 2.0):
            gap = np.linalg.norm(base - assembler.full(kappa).entries, 2)
            worst = max(worst, gap / (constants.potential * (1.0 - math.exp(-kappa * constants.diameter))))
        return worst, worst <= 1.1

    return run


def _perron(cone: Cone):
    def run():
        assembler = BsAssembler(cone, _grid(cone))
        ok = True
        worst = math.inf
        for kappa in (0.0, 0.5, 2.0):
            result = largest_eigenpair(assembler.full(kappa))
            ok = ok and result.is_simple and result.is_positive
            worst = min(worst, result.gap / result.mu)
        return worst, ok

    return run


def _energy_in_coupling(cone: Cone):
    def run():
        grid = _grid(cone)
        curve = MuCurve(cone, grid)
        alpha_cr = critical_alpha(cone, grid)
        energies = [ground_state_energy(ProblemSpec(m * alpha_cr, cone, grid), curve).energy for m in MULTIPLIERS]
        steps = [a - b for a, b in zip(energies, energies[1:])]
        return min(steps), all(step > 0.0 for step in steps)

    return run


def _existence_threshold(L: float, eps: float):
    def run():
        circle = Cone(1.0, make_circle(L))
        wavy = Cone(1.0, make_perturbed_loop(L, eps, 2))
        grid = _grid(circle)
        alpha_cr = critical_alpha(circle, grid)
        flips = (
            not bound_state_exists(ProblemSpec(0.999 * alpha_cr, circle, grid))
            and not bound_state_exists(ProblemSpec(alpha_cr, circle, grid))
            and bound_state_exists(ProblemSpec(1.001 * alpha_cr, circle, grid))
            and bound_state_exists(ProblemSpec(alpha_cr, wavy, grid))
        )
        return alpha_cr, flips

    return run


def build_cases() -> List[Case]:
    cases: List[Case] = []
    size = N_R * N_S
    for L in (0.5 * math.pi, math.pi, 2.0 * math.pi):
        for R in (2.0, 4.0):
            cases.append(
                Case("monotonicity", f"alpha_cr(1)/alpha_cr(R) L={L:.4f} R={R:g}", size, f"= {R:g}", _radius_scaling(L, R))
            )
    cones = (
        ("circle L=pi", Cone(1.0, make_circle(math.pi))),
        ("eps=0.1 k=2 L=pi", Cone(1.0, make_perturbed_loop(math.pi, 0.1, 2))),
        ("circle L=2pi", Cone(1.0, make_circle(2.0 * math.pi))),
    )
    for label, cone in cones:
        cases.append(Case("monotonicity", f"mu decreasing in kappa, {label}", size, "min step > 0", _mu_in_kappa(cone)))
        cases.append(Case("monotonicity", f"norm envelope, {label}", size, "ratio <= 1.1", _norm_envelope(cone)))
        cases.append(Case("monotonicity", f"Perron pair, {label}", size, "simple, positive", _perron(cone)))
        cases.append(
            Case("monotonicity", f"E1 decreasing in alpha, {label}", size, "min step > 0", _energy_in_coupling(cone))
        )
    for eps in (0.05, 0.1):
        cases.append(
            Case("monotonicity", f"existence flips at alpha_cr eps={eps:g}", size, "exact flip", _existence_threshold(math.pi, eps))
        )
    return cases

from __future__ import annotations

import math
from typing import List

import numpy as np

from deltacone.bs_operator import BsAssembler, build_grid
from deltacone.geometry import Cone, make_circle, make_perturbed_loop
from deltacone.spectral import mode_coupling_residual

from .common import Case

MODES = range(-3, 4)


def _circular_decoupling(L: float, kappa: float, n_r: int, n_s: int):
    def run():
        cone = Cone(1.0, make_circle(L))
        assembler = BsAssembler(cone, build_grid(1.0, L, n_r, n_s))
        worst = max(
            mode_coupling_residual(cone, assembler.grid, kappa, m, n, assembler)
            for m in MODES
            for n in MODES
            if m != n
        )
        return worst, worst < 1e-8

    return run


def _perturbed_coupling(eps: float, k: int, n_r: int, n_s: int):
    def run():
        cone = Cone(1.0, make_perturbed_loop(math.pi, eps, k))
        residual = mode_coupling_residual(cone, build_grid(1.0, math.pi, n_r, n_s), 0.0, 0, k)
        return residual, residual > 1e-3

    return run


def _block_spectrum(L: float, n_r: int, n_s: int):
    def run():
        cone = Cone(1.0, make_circle(L))
        assembler = BsAssembler(cone, build_grid(1.0, L, n_r, n_s))
        full = np.linalg.eigvalsh(assembler.full(0.5).entries)
        blocks = np.sort(
            np.concatenate([np.linalg.eigvalsh(assembler.radial(0.5, m).entries) for m in range(n_s)])
        )
        deviation = float(np.max(np.abs(full - blocks)) / full[-1])
        return deviation, deviation < 1e-10

    return run


def build_cases() -> List[Case]:
    cases: List[Case] = []
    for L in (0.5 * math.pi, math.pi, 2.0 * math.pi):
        for kappa in (0.0, 0.5):
            cases.append(
                Case("modes", f"circle L={L:.4f} kappa={kappa:g}", 8 * 16, "max coupling < 1e-8", _circular_decoupling(L, kappa, 8, 16))
            )
    for L in (math.pi, 2.0 * math.pi):
        cases.append(Case("modes", f"blocks vs full L={L:.4f}", 8 * 16, "rel dev < 1e-10", _block_spectrum(L, 8, 16)))
    for eps, k in ((0.05, 2), (0.1, 2), (0.1, 3)):
        cases.append(Case("modes", f"eps={eps:g} k={k} couples 0 and k", 8 * 16, "residual > 1e-3", _perturbed_coupling(eps, k, 8, 16)))
    return cases

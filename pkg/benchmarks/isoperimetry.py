from __future__ import annotations

from typing import List

from deltacone.bs_operator import build_grid
from deltacone.config import EXPERIMENT_MATRIX
from deltacone.exceptions import InfeasibleShapeError
from deltacone.geometry import Cone, make_circle, make_perturbed_loop
from deltacone.knot_energy import FParams, phi_gap
from deltacone.solver import MARGIN_SIGMAS, critical_alpha, isoperimetric_compare

from .common import Case

N_R = 8
N_S = 16
ALPHA_MULT = 2.0


def _margin(L: float, eps: float, k: int):
    def run():
        grid = build_grid(1.0, L, N_R, N_S)
        alpha = ALPHA_MULT * critical_alpha(Cone(1.0, make_circle(L)), grid)
        result = isoperimetric_compare(alpha, L, 1.0, make_perturbed_loop(L, eps, k), grid)
        return result.margin, result.margin > MARGIN_SIGMAS * result.margin_error

    return run


def _knot_gap(L: float, eps: float, k: int, params: FParams):
    def run():
        gap = phi_gap(make_perturbed_loop(L, eps, k), make_circle(L), params, n_quad=128)
        return gap.value, gap.value > MARGIN_SIGMAS * gap.error

    return run


def _feasible(L: float, eps: float, k: int) -> bool:
    try:
        make_perturbed_loop(L, eps, k)
    except InfeasibleShapeError:
        return False
    return True


def build_cases() -> List[Case]:
    cases: List[Case] = []
    params = FParams(a=1.0, b=1.0, c=0.0)
    for L in EXPERIMENT_MATRIX["L"]:
        for eps in EXPERIMENT_MATRIX["eps"]:
            if eps == 0.0:
                continue
            for k in EXPERIMENT_MATRIX["k"]:
                if not _feasible(L, eps, k):
                    continue
                label = f"L={L:.4f} eps={eps:g} k={k}"
                cases.append(Case("isoperimetry", f"E_circle - E_loop {label}", N_R * N_S, "margin > 3 err", _margin(L, eps, k)))
                cases.append(Case("isoperimetry", f"phi_f gap {label}", 128, "gap > 3 err", _knot_gap(L, eps, k, params)))
    return cases

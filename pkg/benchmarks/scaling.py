from __future__ import annotations

import math
from typing import List

from deltacone.bs_operator import build_grid
from deltacone.geometry import Cone, make_circle, make_perturbed_loop
from deltacone.solver import critical_alpha

from .common import Case

LEVELS = ((4, 8), (8, 16), (12, 24), (16, 32), (24, 48))


def _critical(cone: Cone, n_r: int, n_s: int):
    def run():
        alpha_cr = critical_alpha(cone, build_grid(cone.radius, cone.length, n_r, n_s))
        return alpha_cr, 0.0 < alpha_cr < math.inf

    return run


def build_cases() -> List[Case]:
    cases: List[Case] = []
    for label, cone in (
        ("circle", Cone(1.0, make_circle(math.pi))),
        ("eps=0.1 k=2", Cone(1.0, make_perturbed_loop(math.pi, 0.1, 2))),
    ):
        for n_r, n_s in LEVELS:
            cases.append(Case("scaling", f"alpha_cr {label} {n_r}x{n_s}", n_r * n_s, "finite > 0", _critical(cone, n_r, n_s)))
    return cases

from __future__ import annotations

import math
from typing import List

from deltacone.geometry import make_circle, make_perturbed_loop
from deltacone.solver import limit_study

from .common import Case

NOTES: List[str] = []

RADII = (2.0, 4.0, 8.0)
POINTS_PER_UNIT = 4.0
N_S = 16


def _limit(loop, alpha: float):
    def run():
        study = limit_study(alpha, loop.length, loop, RADII, points_per_unit=POINTS_PER_UNIT, n_s=N_S)
        last = study.rows[-1]
        NOTES.append(
            f"alpha={alpha:g} L={loop.length:.4f}: E1(R={last.R:g})={last.energy} vs -alpha^2/4={study.reference:g}, "
            f"{study.extrapolation_label}: {study.extrapolated} +- {study.extrapolation_error}"
        )
        return (last.energy if last.energy is not None else 0.0), study.monotone

    return run


def build_cases() -> List[Case]:
    size = math.ceil(POINTS_PER_UNIT * RADII[-1]) * N_S
    cases: List[Case] = []
    for alpha in (1.0, 2.0):
        for label, loop in (("circle L=pi", make_circle(math.pi)), ("eps=0.1 k=2 L=pi", make_perturbed_loop(math.pi, 0.1, 2))):
            cases.append(Case("limits", f"E1(R) alpha={alpha:g} {label}", size, "monotone in R", _limit(loop, alpha)))
    return cases

from __future__ import annotations

import math
from typing import List

import numpy as np

from deltacone.geometry import Cone, cone_chord_sq, make_circle, make_perturbed_loop

from .common import Case

N_TUPLES = 10_000


def _chord_identity(cone: Cone, seed: int):
    def run():
        rng = np.random.default_rng(seed)
        loop = cone.cross_section
        r, r_prime = rng.uniform(0.0, cone.radius, N_TUPLES), rng.uniform(0.0, cone.radius, N_TUPLES)
        s, t = rng.uniform(0.0, loop.length, N_TUPLES), rng.uniform(0.0, loop.length, N_TUPLES)
        direct = np.sum((cone.point(r, s) - cone.point(r_prime, t)) ** 2, axis=-1)
        deviation = np.abs(cone_chord_sq(r, s, r_prime, t, loop) - direct) / np.maximum(direct, 1e-12)
        worst = float(np.max(deviation))
        return worst, worst < 1e-10

    return run


def build_cases() -> List[Case]:
    cases: List[Case] = []
    loops = [
        ("circle L=2pi", lambda: make_circle(2.0 * math.pi)),
        ("circle L=pi", lambda: make_circle(math.pi)),
        ("circle L=pi/2", lambda: make_circle(0.5 * math.pi)),
        ("eps=0.1 k=2 L=pi", lambda: make_perturbed_loop(math.pi, 0.1, 2)),
        ("eps=0.2 k=3 L=pi", lambda: make_perturbed_loop(math.pi, 0.2, 3)),
        ("eps=0.05 k=2 L=3pi/2", lambda: make_perturbed_loop(1.5 * math.pi, 0.05, 2)),
    ]
    for seed, (label, factory) in enumerate(loops):
        for R in (1.0, 4.0):
            cone = Cone(R, factory())
            cases.append(Case("chords", f"{label} R={R:g}", N_TUPLES, "rel dev < 1e-10", _chord_identity(cone, seed)))
    return cases

#!/usr/bin/env python3
"""
Acceptance benchmark runner for the delta-cone Birman-Schwinger solver.

Goals:
- One table per group with the observed value, the acceptance rule and wall time
- Grouped runs (chords, modes, monotonicity, isoperimetry, limits, scaling, all)
- Final report with pass counts; the exit status is 1 when any case fails
"""

from __future__ import annotations

import sys
import argparse
import pathlib
from typing import Callable, Dict, List, Optional, Sequence, Tuple

# Ensure local imports work without installation
PROJECT_ROOT = pathlib.Path(__file__).resolve().parent
SRC_DIR = PROJECT_ROOT / "src"
if str(SRC_DIR) not in sys.path:
    sys.path.insert(0, str(SRC_DIR))

from benchmarks.common import Case, Result, print_group_table, report_complexity, run_cases, summarize
from benchmarks.chords import build_cases as build_chords
from benchmarks.modes import build_cases as build_modes
from benchmarks.monotonicity import build_cases as build_monotonicity
from benchmarks.isoperimetry import build_cases as build_isoperimetry
from benchmarks.limits import NOTES as LIMIT_NOTES, build_cases as build_limits
from benchmarks.scaling import build_cases as build_scaling

BUILDERS: Dict[str, Callable[[], List[Case]]] = {
    "chords": build_chords,
    "modes": build_modes,
    "monotonicity": build_monotonicity,
    "isoperimetry": build_isoperimetry,
    "limits": build_limits,
    "scaling": build_scaling,
}


def collect_groups(selected: Sequence[str]) -> List[Tuple[str, List[Case]]]:
    if not selected or "all" in selected:
        names = list(BUILDERS)
    else:
        names = [n for n in BUILDERS if n in set(selected)]
    return [(name, BUILDERS[name]()) for name in names]


def print_usage(groups: List[str]) -> None:
    print("\nDelta-cone benchmarks: grouped runner")
    print("\nUsage:")
    print("  ./benchmark.py [group ...] [options]\n")
    print("Groups:")
    print("  " + ", ".join(groups))
    print("\nCommon options:")
    print("  --filter SUBSTR     Filter cases by substring in case name")
    print("  --complexity        Fit observed scaling t ~ N^a per group\n")
    print("Examples:")
    print("  ./benchmark.py                          # show this help")
    print("  ./benchmark.py modes                    # run the angular mode checks")
    print("  ./benchmark.py isoperimetry --filter k=3")
    print("  ./benchmark.py scaling --complexity\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    groups = [*BUILDERS, "all"]
    if argv is None and len(sys.argv) == 1:
        print_usage(groups)
        return 0

    parser = argparse.ArgumentParser(description="Delta-cone acceptance benchmarks (modular groups)")
    parser.add_argument("group", nargs="*", choices=groups, help="Groups to run (default: all)")
    parser.add_argument("--filter", default=None, help="Substring to filter case names")
    parser.add_argument("--complexity", action="store_true", help="Report observed scaling vs matrix size per group")
    args = parser.parse_args(argv)

    all_results: List[Result] = []

    print("\n============================================================")
    print("Delta-Cone Acceptance Benchmarks")
    print("============================================================")
    print(" Units hbar = 2m = 1; times in ms; N is the matrix size.\n")

    for group_name, cases in collect_groups(args.group or ["all"]):
        if args.filter:
            cases = [c for c in cases if args.filter.lower() in c.name.lower()]
        if not cases:
            continue
        group_results = run_cases(cases)
        print_group_table(group_name, group_results)
        passed, total, avg_t, max_t = summarize(group_results)
        print(f" -> Summary: {passed}/{total} passed | avg {avg_t:.1f}ms | max {max_t:.1f}ms")
        if args.complexity:
            report_complexity(group_results)
        all_results.extend(group_results)

    if LIMIT_NOTES:
        print("\nLarge-R behaviour (reported, not asserted):")
        for note in LIMIT_NOTES:
            print(f"  {note}")

    print("\n============================================================")
    print("Final Report")
    print("============================================================")
    passed, total, avg_t, max_t = summarize(all_results)
    print(f" -> Summary: {passed}/{total} passed | avg {avg_t:.1f}ms | max {max_t:.1f}ms")
    print(
        "\nDense assembly costs O(N^2) memory and time; the dense eigensolver adds O(N^3).\n"
        "Circular cones are reduced to n_s radial blocks of size n_r."
    )

    failures = [r for r in all_results if not r.passed]
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())

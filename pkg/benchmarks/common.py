from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

from deltacone.exceptions import DeltaConeError


@dataclass
class Case:
    """One acceptance check: ``run`` returns the observed value and whether it passed."""

    category: str
    name: str
    size: int
    expected: str
    run: Callable[[], Tuple[float, bool]]


@dataclass
class Result:
    category: str
    name: str
    size: int
    expected: str
    value: Optional[float]
    passed: bool
    t_ms: float
    error: Optional[str] = None


def ms(seconds: float) -> float:
    return seconds * 1000.0


def format_value(v: Optional[float]) -> str:
    if v is None:
        return "ERROR"
    if v == 0.0 or 1e-3 <= abs(v) < 1e5:
        return f"{v:.6f}"
    return f"{v:.3e}"


def run_cases(cases: Sequence[Case]) -> List[Result]:
    results: List[Result] = []
    for c in cases:
        t0 = time.perf_counter()
        try:
            value, passed = c.run()
            error = None
        except DeltaConeError as e:
            value, passed, error = None, False, str(e)
        t = ms(time.perf_counter() - t0)
        results.append(Result(c.category, c.name, c.size, c.expected, value, bool(passed), t, error))
    return results


def summarize(results: Sequence[Result]) -> Tuple[int, int, float, float]:
    total = len(results)
    passed = sum(1 for r in results if r.passed)
    times = [r.t_ms for r in results]
    avg_t = sum(times) / len(times) if times else 0.0
    max_t = max(times) if times else 0.0
    return passed, total, avg_t, max_t


def print_group_table(group_name: str, results: Sequence[Result]) -> None:
    if not results:
        return
    name_width = max(20, max(len(r.name) for r in results))
    expected_width = max(12, max(len(r.expected) for r in results))

    def line(char: str = "-") -> str:
        parts = [char * (name_width + 2), char * 8, char * 14, char * (expected_width + 2), char * 12, char * 7]
        return "+" + "+".join(parts) + "+"

    total_width = name_width + 2 + 8 + 14 + expected_width + 2 + 12 + 7 + 5
    print(line("="))
    print(f" {group_name.upper()} ".center(total_width, " "))
    print(line("-"))
    print(
        "| "
        + f"{'Case':<{name_width}}"
        + " | "
        + f"{'N':>6}"
        + " | "
        + f"{'Value':>12}"
        + " | "
        + f"{'Expected':<{expected_width}}"
        + " | "
        + f"{'Time(ms)':>10}"
        + " | "
        + f"{'Pass':>4}"
        + " |"
    )
    print(line("-"))
    for r in results:
        print(
            "| "
            + f"{r.name:<{name_width}}"
            + " | "
            + f"{r.size:>6}"
            + " | "
            + f"{format_value(r.value):>12}"
            + " | "
            + f"{r.expected:<{expected_width}}"
            + " | "
            + f"{r.t_ms:10.1f}"
            + " | "
            + f"{'Yes' if r.passed else 'No':>4}"
            + " |"
        )
        if r.error:
            print(f"|   -> {r.error}")
    print(line("-"))


def estimate_power_law(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    """Estimate exponent a in y ~ x^a via log-log linear regression. Returns None if not enough points."""
    pts = [(x, y) for x, y in zip(xs, ys) if x > 0 and y > 0]
    if len(pts) < 2:
        return None
    lx = [math.log(x) for x, _ in pts]
    ly = [math.log(y) for _, y in pts]
    n = len(pts)
    sumx = sum(lx)
    sumy = sum(ly)
    sumxx = sum(x * x for x in lx)
    sumxy = sum(x * y for x, y in zip(lx, ly))
    denom = n * sumxx - sumx * sumx
    if denom == 0:
        return None
    return (n * sumxy - sumx * sumy) / denom


def report_complexity(results: Sequence[Result]) -> None:
    """Print the observed scaling t ~ N^a of wall time against matrix size."""
    a = estimate_power_law([r.size for r in results], [r.t_ms for r in results])
    if a is not None:
        print(f"   Observed scaling: t ~ N^{a:.2f}")
    else:
        print("   Observed scaling: insufficient data")

"""
Command-line interface for the delta-cone experiments.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from . import __version__
from .bs_operator import build_grid
from .config import COMMANDS, EXPERIMENT_MATRIX, FORMATS, QUANTITIES, RunConfig
from .exceptions import (
    ConfigError,
    DeltaConeError,
    DomainError,
    InfeasibleShapeError,
    NoBoundStateError,
)
from .geometry import Cone, Loop, make_circle, make_perturbed_loop
from .knot_energy import FParams, phi_f, phi_gap
from .serialization import read_loop
from .solver import (
    MuCurve,
    ProblemSpec,
    critical_alpha,
    energy_with_error,
    ground_state_energy,
    isoperimetric_compare,
    limit_study,
)
from .utils import convergence_order, richardson

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_INCONCLUSIVE = 4

UNITS = (
    "energies in units with hbar = 2m = 1 (operator -Delta); lengths dimensionless; angles in radians"
)


@dataclass
class RunRecord:
    """
    Result of one harness run.

    Attributes:
        command: Command that produced the record
        config: Key-value echo of the RunConfig (reparses to an equal config)
        rows: Per-point results
        summary: Derived quantities (orders, extrapolations, ratios)
        status: "ok" or "inconclusive"
        wall_clock_s: Run time in seconds
        single_thread: True when all points ran in this process
    """

    command: str
    config: str
    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)
    status: str = "ok"
    wall_clock_s: float = 0.0
    single_thread: bool = True
    tool: str = "deltacone"
    version: str = __version__
    units: str = UNITS

    @property
    def columns(self) -> List[str]:
        names: List[str] = []
        for row in self.rows:
            names.extend(key for key in row if key not in names)
        return names


# -- loops and sweeps -------------------------------------------------------


def build_loop(L: float, kind: str, eps: float = 0.0, k: int = 2, loop_file: Optional[str] = None) -> Loop:
    """
    Construct the cross-section named by a configuration.

    Raises:
        ConfigError: If the loop cannot be built from these parameters
    """
    try:
        if kind == "circle":
            return make_circle(L)
        if kind == "perturbed-circle":
            return make_perturbed_loop(L, eps, k)
        loop = read_loop(Path(loop_file))
    except DomainError as e:
        raise ConfigError(f"Cannot build {kind} loop (L={L}, eps={eps}, k={k}): {e}") from e
    if not math.isclose(loop.length, L, rel_tol=1e-8):
        raise ConfigError(f"Loop file {loop_file} has length {loop.length}, configuration says L={L}")
    return loop


def _config_loop(config: RunConfig, L: Optional[float] = None, eps: Optional[float] = None) -> Loop:
    g = config.geometry
    return build_loop(
        g.L if L is None else L, g.loop, g.eps if eps is None else eps, g.k, g.loop_file
    )


def _grid(config: RunConfig, R: float, L: float):
    n = config.numerics
    return build_grid(R, L, n.n_r, n.n_s, n.grading)


def _map(func: Callable[[Any], Any], points: Sequence[Any], config: RunConfig) -> List[Any]:
    """Evaluate sweep points in order, in a worker pool unless single-threaded."""
    workers = config.output.workers
    if config.output.single_thread or workers <= 1 or len(points) <= 1:
        return [func(point) for point in points]
    with Pool(processes=min(workers, len(points))) as pool:
        return pool.map(func, points)


def _alphas(config: RunConfig, alpha_cr: float) -> List[Dict[str, float]]:
    p = config.physics
    values = [{"alpha": a, "alpha_over_cr": a / alpha_cr} for a in p.alpha]
    values += [{"alpha": m * alpha_cr, "alpha_over_cr": m} for m in p.alpha_mult]
    return values


# -- per-point workers (module level so they pickle) -------------------------


def _critical_point(args) -> Dict[str, Any]:
    config, R = args
    loop = _config_loop(config)
    grid = _grid(config, R, loop.length)
    cone = Cone(R, loop)
    alpha_cr = critical_alpha(cone, grid)
    coarse = critical_alpha(cone, grid.coarsened())
    return {
        "R": R,
        "L": loop.length,
        "loop": loop.kind,
        "eps": loop.eps,
        "mu0": 1.0 / alpha_cr,
        "alpha_cr": alpha_cr,
        "alpha_cr_error": abs(alpha_cr - coarse),
    }


def _ground_point(args) -> List[Dict[str, Any]]:
    config, R = args
    loop = _config_loop(config)
    grid = _grid(config, R, loop.length)
    cone = Cone(R, loop)
    alpha_cr_circle = critical_alpha(Cone(R, make_circle(loop.length)), grid)
    rows = []
    for entry in _alphas(config, alpha_cr_circle):
        spec = ProblemSpec(entry["alpha"], cone, grid)
        row: Dict[str, Any] = {"R": R, "L": loop.length, "eps": loop.eps, **entry}
        try:
            state = ground_state_energy(spec)
            estimate = energy_with_error(spec, state)
            row.update(
                bound_state=True,
                energy=estimate.value,
                energy_error=estimate.error,
                kappa=state.kappa,
                mu_at_kappa=state.mu_at_kappa,
            )
        except NoBoundStateError:
            row.update(bound_state=False, energy=None, energy_error=None, kappa=None, mu_at_kappa=None)
        rows.append(row)
    return rows


def _isoperimetric_point(args) -> List[Dict[str, Any]]:
    config, L, eps, k, R, mults = args
    try:
        loop = build_loop(L, "perturbed-circle", eps, k) if eps is not None else _config_loop(config, L)
    except ConfigError as e:
        if isinstance(e.__cause__, InfeasibleShapeError):
            logger.info("Skipping infeasible shape L=%g eps=%g k=%d", L, eps, k)
            return []
        raise
    grid = _grid(config, R, L)
    alpha_cr = critical_alpha(Cone(R, make_circle(L)), grid)
    entries = [{"alpha": m * alpha_cr, "alpha_over_cr": m} for m in mults]
    if eps is None:
        entries = _alphas(config, alpha_cr)

    rows = []
    for entry in entries:
        result = isoperimetric_compare(entry["alpha"], L, R, loop, grid)
        rows.append(
            {
                "L": L,
                "R": R,
                "eps": loop.eps,
                "k": loop.k,
                **entry,
                "E_circle": result.e_circle,
                "E_loop": result.e_loop,
                "margin": result.margin,
                "margin_error": result.margin_error,
                "circle_error": result.circle_error,
                "loop_error": result.loop_error,
                "status": result.status,
            }
        )
    return rows


def _knot_point(args) -> Optional[Dict[str, Any]]:
    config, L, eps, k = args
    p = config.physics
    params = FParams(p.f_a, p.f_b, p.f_c)
    try:
        loop = build_loop(L, "perturbed-circle", eps, k) if eps is not None else _config_loop(config, L)
    except ConfigError as e:
        if isinstance(e.__cause__, InfeasibleShapeError):
            logger.info("Skipping infeasible shape L=%g eps=%g k=%d", L, eps, k)
            return None
        raise
    circle = make_circle(L)
    n_quad = config.numerics.n_quad
    gap = phi_gap(loop, circle, params, n_quad)
    row: Dict[str, Any] = {"L": L, "eps": loop.eps, "k": loop.k, "a": params.a, "b": params.b, "c": params.c}
    if params.c > 0.0:
        row.update(phi_circle=phi_f(circle, params, n_quad).value, phi_loop=phi_f(loop, params, n_quad).value)
    else:
        row.update(phi_circle=None, phi_loop=None)
    row.update(gap=gap.value, gap_error=gap.error, strict=bool(gap.value > 3.0 * gap.error))
    return row


# -- commands ----------------------------------------------------------------


def _run_critical(config: RunConfig, record: RunRecord) -> None:
    record.rows = _map(_critical_point, [(config, R) for R in config.geometry.R], config)
    if len(record.rows) > 1:
        first = record.rows[0]
        record.summary["alpha_cr_ratios"] = [
            {"R": row["R"], "ratio_to_first": first["alpha_cr"] / row["alpha_cr"]} for row in record.rows[1:]
        ]


def _run_ground(config: RunConfig, record: RunRecord) -> None:
    chunks = _map(_ground_point, [(config, R) for R in config.geometry.R], config)
    record.rows = [row for chunk in chunks for row in chunk]


def _run_isoperimetric(config: RunConfig, record: RunRecord) -> None:
    g = config.geometry
    if config.output.matrix:
        points = [
            (config, L, eps, k, R, EXPERIMENT_MATRIX["alpha_mult"])
            for L, eps, k, R in itertools.product(
                EXPERIMENT_MATRIX["L"], EXPERIMENT_MATRIX["eps"], EXPERIMENT_MATRIX["k"], EXPERIMENT_MATRIX["R"]
            )
        ]
    else:
        points = [(config, g.L, None, g.k, R, ()) for R in g.R]
    chunks = _map(_isoperimetric_point, points, config)
    record.rows = [row for chunk in chunks for row in chunk]
    statuses = [row["status"] for row in record.rows]
    record.summary["strict"] = statuses.count("strict")
    record.summary["inconclusive"] = statuses.count("inconclusive")
    record.summary["violated"] = statuses.count("violated")
    if record.summary["inconclusive"] or record.summary["violated"]:
        record.status = "inconclusive"


def _run_limit(config: RunConfig, record: RunRecord) -> None:
    g, n = config.geometry, config.numerics
    loop = _config_loop(config)
    for alpha in config.physics.alpha:
        study = limit_study(alpha, g.L, loop, g.R, n.points_per_unit, n.n_s, n.grading)
        for row in study.rows:
            record.rows.append(
                {"alpha": alpha, **asdict(row), "reference": study.reference, "below_reference": (
                    row.energy is not None and row.energy < study.reference
                )}
            )
        record.summary[f"alpha={alpha!r}"] = {
            "monotone": study.monotone,
            "extrapolated": study.extrapolated,
            "extrapolation_error": study.extrapolation_error,
            "extrapolation": study.extrapolation_label,
            "reference": study.reference,
        }
        if not study.monotone:
            record.status = "inconclusive"


def _run_knot(config: RunConfig, record: RunRecord) -> None:
    if config.output.matrix:
        points = [
            (config, L, eps, k)
            for L, eps, k in itertools.product(EXPERIMENT_MATRIX["L"], EXPERIMENT_MATRIX["eps"], EXPERIMENT_MATRIX["k"])
            if eps > 0.0
        ]
    else:
        points = [(config, config.geometry.L, None, config.geometry.k)]
    record.rows = [row for row in _map(_knot_point, points, config) if row is not None]
    non_circular = [row for row in record.rows if row["eps"] > 0.0]
    if any(not row["strict"] for row in non_circular):
        record.status = "inconclusive"


def convergence_report(config: RunConfig) -> RunRecord:
    """
    Evaluate mu(0) (or E_1) on nested grids and report the empirical order.

    Level i uses (n_r 2^i) x (n_s 2^i) nodes. Non-monotone convergence makes
    the record inconclusive.
    """
    config.validate()
    if config.numerics.levels < 3:
        raise ConfigError("convergence needs at least three refinement levels")
    record = RunRecord(command="convergence", config=config.to_text())
    g, n = config.geometry, config.numerics
    loop = _config_loop(config)
    R = g.R[0]
    cone = Cone(R, loop)
    alpha = None
    if n.quantity == "energy":
        alpha_cr = critical_alpha(Cone(R, make_circle(loop.length)), _grid(config, R, loop.length))
        alpha = config.physics.alpha[0] if config.physics.alpha else config.physics.alpha_mult[0] * alpha_cr

    values = []
    for level in range(n.levels):
        grid = build_grid(R, loop.length, n.n_r * 2**level, n.n_s * 2**level, n.grading)
        if n.quantity == "mu0":
            value = MuCurve(cone, grid)(0.0)
        else:
            value = ground_state_energy(ProblemSpec(alpha, cone, grid)).energy
        values.append(value)
        record.rows.append({"level": level, "n_r": grid.n_r, "n_s": grid.n_s, n.quantity: value})

    order = convergence_order(values)
    record.summary["quantity"] = n.quantity
    record.summary["order"] = order
    if order is None:
        record.status = "inconclusive"
        record.summary["extrapolated"] = None
        logger.warning("Non-monotone convergence of %s: %s", n.quantity, values)
    else:
        estimate = richardson(values[-2], values[-1], order=order)
        record.summary["extrapolated"] = estimate.value
        record.summary["extrapolation_error"] = estimate.error
    return record


RUNNERS: Dict[str, Callable[[RunConfig, RunRecord], None]] = {
    "critical-alpha": _run_critical,
    "ground-state": _run_ground,
    "isoperimetric": _run_isoperimetric,
    "limit-study": _run_limit,
    "knot-energy": _run_knot,
}


def run(config: RunConfig, emit: bool = True) -> RunRecord:
    """
    Dispatch one configured run and write its output file.

    Returns:
        The RunRecord (also written to config.output_path() when emit is set)
    """
    config.validate()
    start = time.perf_counter()
    if config.command == "convergence":
        record = convergence_report(config)
    else:
        record = RunRecord(command=config.command, config=config.to_text())
        RUNNERS[config.command](config, record)
    record.wall_clock_s = time.perf_counter() - start
    record.single_thread = config.output.single_thread or config.output.workers <= 1
    if emit:
        write_record(record, config.output_path(), config.output.format)
    return record


# -- output ------------------------------------------------------------------


def write_record(record: RunRecord, filepath: Path, fmt: str = "csv") -> None:
    """Write a record as CSV (units comment line, then a header row) or JSON."""
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        payload = {
            "tool": record.tool,
            "version": record.version,
            "command": record.command,
            "units": record.units,
            "config": record.config,
            "rows": record.rows,
            "summary": record.summary,
            "status": record.status,
            "wall_clock_s": record.wall_clock_s,
            "single_thread": record.single_thread,
        }
        filepath.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        return
    if fmt != "csv":
        raise ConfigError(f"Unsupported format: {fmt}")
    with filepath.open("w", newline="", encoding="utf-8") as handle:
        handle.write(f"# {record.tool} {record.version} {record.command}; {record.units}\n")
        writer = csv.DictWriter(handle, fieldnames=record.columns, restval="", quoting=csv.QUOTE_MINIMAL)
        writer.writeheader()
        for row in record.rows:
            writer.writerow({key: _csv_value(value) for key, value in row.items()})


def read_csv_rows(filepath: Path) -> List[Dict[str, str]]:
    """Rows of a CSV written by write_record (comment lines skipped)."""
    with Path(filepath).open(newline="", encoding="utf-8") as handle:
        lines = [line for line in handle if not line.startswith("#")]
    return list(csv.DictReader(lines))


def _csv_value(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


# -- entry point -------------------------------------------------------------


FLAG_KEYS = {
    "L": "L",
    "R": "R",
    "loop": "loop",
    "eps": "eps",
    "k": "k",
    "loop_file": "loop_file",
    "n_r": "n_r",
    "n_s": "n_s",
    "grading": "grading",
    "levels": "levels",
    "points_per_unit": "points_per_unit",
    "n_quad": "n_quad",
    "quantity": "quantity",
    "alpha": "alpha",
    "alpha_mult": "alpha_mult",
    "f_a": "f_a",
    "f_b": "f_b",
    "f_c": "f_c",
    "output": "path",
    "format": "format",
    "workers": "workers",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deltacone",
        description="Birman-Schwinger experiments for delta-interactions on cones",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Critical coupling of the flat unit disk
  deltacone critical-alpha --L 6.2832 --R 1

  # Circular versus perturbed cone at twice the critical coupling
  deltacone isoperimetric --L 3.14159 --R 1 --eps 0.1 --k 2 --alpha-mult 2

  # E_1(R) for growing radii, JSON output
  deltacone limit-study --L 3.14159 --loop circle --R 1,2,4,8 --alpha 1 --format json
        """,
    )
    subparsers = parser.add_subparsers(dest="command", help="Experiment to run")

    for command in COMMANDS:
        sub = subparsers.add_parser(command, help=f"Run the {command} experiment")
        sub.add_argument("--config", type=Path, help="Key-value configuration file")
        sub.add_argument("--L", type=str, help="Loop length in (0, 2*pi]")
        sub.add_argument("--R", type=str, help="Cone radius or comma-separated increasing radii")
        sub.add_argument("--loop", choices=["circle", "perturbed-circle", "user-supplied-samples"])
        sub.add_argument("--eps", type=str, help="Perturbation amplitude")
        sub.add_argument("--k", type=str, help="Perturbation wave number (>= 2)")
        sub.add_argument("--loop-file", dest="loop_file", type=str, help="Loop record or sample table")
        sub.add_argument("--n-r", dest="n_r", type=str, help="Radial nodes")
        sub.add_argument("--n-s", dest="n_s", type=str, help="Angular nodes")
        sub.add_argument("--grading", type=str, help="Radial grading exponent (>= 1)")
        sub.add_argument("--levels", type=str, help="Refinement levels for convergence")
        sub.add_argument("--points-per-unit", dest="points_per_unit", type=str, help="Radial nodes per unit length")
        sub.add_argument("--n-quad", dest="n_quad", type=str, help="Knot-energy quadrature nodes")
        sub.add_argument("--quantity", choices=QUANTITIES, help="Quantity for convergence")
        sub.add_argument("--alpha", type=str, help="Comma-separated coupling strengths")
        sub.add_argument("--alpha-mult", dest="alpha_mult", type=str, help="Couplings as multiples of alpha_cr")
        sub.add_argument("--f-a", dest="f_a", type=str, help="Knot-energy parameter a")
        sub.add_argument("--f-b", dest="f_b", type=str, help="Knot-energy parameter b")
        sub.add_argument("--f-c", dest="f_c", type=str, help="Knot-energy parameter c")
        sub.add_argument("--output", "-o", type=str, help="Output file")
        sub.add_argument("--format", choices=FORMATS, help="Output format")
        sub.add_argument("--workers", type=str, help="Worker processes for sweeps")
        sub.add_argument("--single-thread", dest="single_thread", action="store_true", default=None,
                         help="Run every point in this process (bit-reproducible)")
        sub.add_argument("--matrix", action="store_true", default=None, help="Sweep the default experiment matrix")
        sub.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides: Dict[str, Any] = {"command": args.command}
    for flag, key in FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if args.single_thread:
        overrides["single_thread"] = "true"
    if args.matrix:
        overrides["matrix"] = "true"
    if args.config is not None:
        return RunConfig.from_file(args.config, overrides)
    return RunConfig.from_mapping(overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the CLI; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK

    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        config = config_from_args(args)
        record = run(config)
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DeltaConeError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_NUMERIC

    print(f"{record.command}: {len(record.rows)} rows -> {config.output_path()} ({record.wall_clock_s:.2f}s)")
    if record.status != "ok":
        print(f"Result {record.status}: {json.dumps(record.summary, default=str)}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

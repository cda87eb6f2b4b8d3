"""
Run configuration for the command-line harness.

A RunConfig is built from command-line flags, from a ``key = value`` text
file, or both (flags win). ``RunConfig.to_text`` writes the same format, so
the configuration echoed into every output record parses back to an equal
RunConfig. See docs/config_format.md for the key list.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from .exceptions import ConfigError
from .geometry import LOOP_KINDS, TWO_PI

logger = logging.getLogger(__name__)

COMMANDS = ("critical-alpha", "ground-state", "isoperimetric", "limit-study", "knot-energy", "convergence")
FORMATS = ("csv", "json")
QUANTITIES = ("mu0", "energy")
OUTPUT_DIR_ENV = "DELTACONE_OUTPUT_DIR"
LENGTH_SNAP = 1e-4

# Parameter sets mirroring the comparison theorems; the isoperimetric and
# knot-energy commands sweep them with --matrix.
EXPERIMENT_MATRIX: Dict[str, Tuple[float, ...]] = {
    "L": (0.5 * math.pi, math.pi, 1.5 * math.pi),
    "eps": (0.0, 0.05, 0.1, 0.2),
    "k": (2, 3),
    "alpha_mult": (0.5, 1.0, 2.0, 4.0),
    "R": (0.5, 1.0, 2.0, 4.0, 8.0),
}


@dataclass(frozen=True)
class GeometryConfig:
    L: float = math.pi
    R: Tuple[float, ...] = (1.0,)
    loop: str = "perturbed-circle"
    eps: float = 0.1
    k: int = 2
    loop_file: Optional[str] = None


@dataclass(frozen=True)
class NumericsConfig:
    n_r: int = 16
    n_s: int = 32
    grading: float = 2.0
    levels: int = 3
    points_per_unit: float = 8.0
    n_quad: int = 256
    quantity: str = "mu0"


@dataclass(frozen=True)
class PhysicsConfig:
    alpha: Tuple[float, ...] = ()
    alpha_mult: Tuple[float, ...] = (2.0,)
    f_a: float = 1.0
    f_b: float = 1.0
    f_c: float = 0.25


@dataclass(frozen=True)
class OutputConfig:
    path: Optional[str] = None
    format: str = "csv"
    single_thread: bool = False
    workers: int = 1
    matrix: bool = False


@dataclass(frozen=True)
class RunConfig:
    """
    Complete description of one harness run.

    Attributes:
        command: One of COMMANDS
        geometry: Loop and cone parameters
        numerics: Grid and refinement parameters
        physics: Coupling strengths and knot-energy parameters
        output: Output file, format and execution mode
    """

    command: str
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> "RunConfig":
        """
        Re-check every parameter constraint.

        Returns:
            self, for chaining

        Raises:
            ConfigError: Naming the offending key and value
        """
        g, n, p, o = self.geometry, self.numerics, self.physics, self.output
        if self.command not in COMMANDS:
            raise ConfigError(f"command must be one of {', '.join(COMMANDS)}; got {self.command!r}")
        if not 0.0 < g.L <= TWO_PI:
            raise ConfigError(f"L must lie in (0, 2*pi]; got {g.L}")
        if not g.R:
            raise ConfigError("R needs at least one radius")
        if any(R <= 0.0 for R in g.R) or any(b <= a for a, b in zip(g.R, g.R[1:])):
            raise ConfigError(f"R values must be positive and strictly increasing; got {list(g.R)}")
        if g.loop not in LOOP_KINDS:
            raise ConfigError(f"loop must be one of {', '.join(LOOP_KINDS)}; got {g.loop!r}")
        if g.loop == "user-supplied-samples" and not g.loop_file:
            raise ConfigError("loop = user-supplied-samples needs loop_file")
        if g.eps < 0.0:
            raise ConfigError(f"eps must be >= 0; got {g.eps}")
        if g.k < 2:
            raise ConfigError(f"k must be an integer >= 2; got {g.k}")

        if n.n_r < 4 or n.n_s < 4:
            raise ConfigError(f"n_r and n_s must be >= 4; got n_r={n.n_r}, n_s={n.n_s}")
        if n.grading < 1.0:
            raise ConfigError(f"grading must be >= 1; got {n.grading}")
        if n.points_per_unit <= 0.0:
            raise ConfigError(f"points_per_unit must be positive; got {n.points_per_unit}")
        if n.n_quad < 16:
            raise ConfigError(f"n_quad must be >= 16; got {n.n_quad}")
        if n.quantity not in QUANTITIES:
            raise ConfigError(f"quantity must be one of {', '.join(QUANTITIES)}; got {n.quantity!r}")
        if self.command == "convergence" and n.levels < 3:
            raise ConfigError(f"convergence needs levels >= 3; got {n.levels}")

        if any(a <= 0.0 for a in p.alpha) or any(m <= 0.0 for m in p.alpha_mult):
            raise ConfigError("alpha and alpha_mult values must be positive")
        needs_alpha = self.command in ("ground-state", "isoperimetric") or (
            self.command == "convergence" and n.quantity == "energy"
        )
        if needs_alpha and not (p.alpha or p.alpha_mult):
            raise ConfigError(f"{self.command} needs alpha or alpha_mult")
        if self.command == "limit-study":
            if not p.alpha:
                raise ConfigError("limit-study needs explicit alpha values")
            if g.L >= TWO_PI:
                raise ConfigError(f"limit-study needs L < 2*pi; got {g.L}")
        if min(p.f_a, p.f_b, p.f_c) < 0.0 or (p.f_b == 0.0 and p.f_c == 0.0):
            raise ConfigError(f"f parameters need a, b, c >= 0 and (b, c) != (0, 0); got {p.f_a}, {p.f_b}, {p.f_c}")

        if o.format not in FORMATS:
            raise ConfigError(f"format must be csv or json; got {o.format!r}")
        if o.workers < 1:
            raise ConfigError(f"workers must be >= 1; got {o.workers}")
        return self

    def output_path(self) -> Path:
        """Output file, with its directory replaced by $DELTACONE_OUTPUT_DIR when set."""
        path = Path(self.output.path or f"{self.command}.{self.output.format}")
        override = os.environ.get(OUTPUT_DIR_ENV)
        if override:
            path = Path(override) / path.name
        return path

    def flat(self) -> Dict[str, Any]:
        values: Dict[str, Any] = {"command": self.command}
        for section in (self.geometry, self.numerics, self.physics, self.output):
            values.update(asdict(section))
        return values

    def to_text(self) -> str:
        lines = [f"command = {self.command}"]
        for section in ("geometry", "numerics", "physics", "output"):
            lines.append(f"# {section}")
            for key, value in asdict(getattr(self, section)).items():
                lines.append(f"{key} = {_format_value(value)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "RunConfig":
        """Build from flat ``key -> value`` pairs (strings or typed values)."""
        if "command" not in values or values["command"] in (None, ""):
            raise ConfigError("No command given")
        unknown = set(values) - set(KEYS) - {"command"}
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {', '.join(sorted(unknown))}")

        sections: Dict[str, Dict[str, Any]] = {name: {} for name in SECTIONS}
        for key, value in values.items():
            if key == "command" or value is None:
                continue
            section, parse = KEYS[key]
            try:
                sections[section][key] = parse(value) if isinstance(value, str) else _coerce(parse, value)
            except ValueError as e:
                raise ConfigError(f"Invalid value for {key}: {value!r} ({e})") from e

        config = cls(
            command=str(values["command"]),
            geometry=GeometryConfig(**sections["geometry"]),
            numerics=NumericsConfig(**sections["numerics"]),
            physics=PhysicsConfig(**sections["physics"]),
            output=OutputConfig(**sections["output"]),
        )
        return config.snapped().validate()

    @classmethod
    def from_text(cls, text: str, overrides: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        values: Dict[str, Any] = {}
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"Line {number}: expected 'key = value', got {raw!r}")
            values[key.strip()] = value.strip()
        values.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_mapping(values)

    @classmethod
    def from_file(cls, filepath: Path, overrides: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        try:
            text = Path(filepath).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read config file {filepath}: {e}") from e
        return cls.from_text(text, overrides)

    def snapped(self) -> "RunConfig":
        """Snap L within 1e-4 of 2*pi to exactly 2*pi (the great circle)."""
        L = self.geometry.L
        if L != TWO_PI and abs(L - TWO_PI) < LENGTH_SNAP:
            logger.info("Snapping L=%r to 2*pi", L)
            return replace(self, geometry=replace(self.geometry, L=TWO_PI))
        return self


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true or false")


def _parse_optional(value: str) -> Optional[str]:
    return None if value.strip().lower() in ("", "none") else value.strip()


def _parse_int(value: str) -> int:
    number = float(value)
    if number != int(number):
        raise ValueError("expected an integer")
    return int(number)


def _parse_floats(value: str) -> Tuple[float, ...]:
    return tuple(float(item) for item in value.split(",") if item.strip())


def _coerce(parse: Callable[[str], Any], value: Any) -> Any:
    if parse is _parse_floats:
        if isinstance(value, (int, float)):
            return (float(value),)
        return tuple(float(v) for v in value)
    if parse is _parse_bool:
        return bool(value)
    if parse is _parse_optional:
        return None if value is None else str(value)
    return parse(str(value))


def _format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


SECTIONS = ("geometry", "numerics", "physics", "output")

KEYS: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    "L": ("geometry", float),
    "R": ("geometry", _parse_floats),
    "loop": ("geometry", str.strip),
    "eps": ("geometry", float),
    "k": ("geometry", _parse_int),
    "loop_file": ("geometry", _parse_optional),
    "n_r": ("numerics", _parse_int),
    "n_s": ("numerics", _parse_int),
    "grading": ("numerics", float),
    "levels": ("numerics", _parse_int),
    "points_per_unit": ("numerics", float),
    "n_quad": ("numerics", _parse_int),
    "quantity": ("numerics", str.strip),
    "alpha": ("physics", _parse_floats),
    "alpha_mult": ("physics", _parse_floats),
    "f_a": ("physics", float),
    "f_b": ("physics", float),
    "f_c": ("physics", float),
    "path": ("output", _parse_optional),
    "format": ("output", str.strip),
    "single_thread": ("output", _parse_bool),
    "workers": ("output", _parse_int),
    "matrix": ("output", _parse_bool),
}

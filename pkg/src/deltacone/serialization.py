"""
Loop records and binary matrix dumps.

Loop records are plain text. Parametric loops are stored as ``key = value``
lines and rebuilt from their parameters; other loops are stored as a sample
table (s, x, y, z) under the header ``# loop-samples v1``.

Matrix dumps are ``BSMAT1\\0\\0`` followed by two little-endian uint64
dimensions and little-endian float64 entries in row-major order. The format
is for debugging and carries no stability guarantee.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict

import numpy as np

from .exceptions import ConfigError
from .geometry import Loop, loop_from_samples, make_circle, make_perturbed_loop

logger = logging.getLogger(__name__)

SAMPLES_HEADER = "# loop-samples v1"
RECORD_HEADER = "# loop-record v1"
MATRIX_MAGIC = b"BSMAT1\x00\x00"
MATRIX_HEADER_BYTES = len(MATRIX_MAGIC) + 16
DEFAULT_SAMPLES = 1024


def write_loop(loop: Loop, filepath: Path, n_samples: int = DEFAULT_SAMPLES) -> None:
    """
    Write a loop record.

    Circles and perturbed circles are written as parameter records; loops
    built from samples are written as a sample table of the stored curve.
    """
    filepath = Path(filepath)
    try:
        if loop.kind == "user-supplied-samples":
            s, points = loop.sample(n_samples)
            lines = [SAMPLES_HEADER, f"# length = {loop.length!r}"]
            lines += [f"{si!r} {x!r} {y!r} {z!r}" for si, (x, y, z) in zip(s, points)]
        else:
            fields = {
                "kind": loop.kind,
                "L": repr(loop.length),
                "theta0": repr(loop.theta0),
                "eps": repr(loop.eps),
                "k": str(loop.k) if loop.k is not None else "none",
                "origin": repr(loop.origin),
            }
            lines = [RECORD_HEADER] + [f"{key} = {value}" for key, value in fields.items()]
        filepath.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Failed to write loop to {filepath}: {e}") from e


def _parse_record(lines) -> Dict[str, str]:
    fields: Dict[str, str] = {}
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"Malformed loop record line: {line!r}")
        fields[key.strip()] = value.strip()
    return fields


def read_loop(filepath: Path) -> Loop:
    """
    Read a loop record written by write_loop, or any sample table with the
    ``# loop-samples v1`` header (optionally followed by ``# length = L``).

    Raises:
        ConfigError: If the file cannot be read or parsed
    """
    filepath = Path(filepath)
    try:
        lines = filepath.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ConfigError(f"Failed to read loop from {filepath}: {e}") from e
    if not lines:
        raise ConfigError(f"Empty loop file: {filepath}")

    header = lines[0].strip()
    if header == SAMPLES_HEADER:
        length = None
        for line in lines[1:]:
            if line.startswith("#") and "length" in line:
                length = float(line.partition("=")[2])
        try:
            table = np.loadtxt(lines[1:], comments="#", ndmin=2)
        except ValueError as e:
            raise ConfigError(f"Malformed sample table in {filepath}: {e}") from e
        if table.shape[1] != 4:
            raise ConfigError(f"Sample table needs 4 columns (s, x, y, z), got {table.shape[1]}")
        s = table[:, 0]
        if length is None:
            step = s[1] - s[0]
            length = float(s[-1] + step)
        return loop_from_samples(s, table[:, 1:], length)

    if header != RECORD_HEADER:
        raise ConfigError(f"Unknown loop file header in {filepath}: {header!r}")

    fields = _parse_record(lines[1:])
    try:
        kind = fields["kind"]
        length = float(fields["L"])
        if kind == "circle":
            loop = make_circle(length)
        elif kind == "perturbed-circle":
            loop = make_perturbed_loop(length, float(fields["eps"]), int(fields["k"]))
        else:
            raise ConfigError(f"Loop kind {kind!r} cannot be stored as a parameter record")
        origin = float(fields.get("origin", "0.0"))
    except (KeyError, ValueError) as e:
        raise ConfigError(f"Incomplete loop record in {filepath}: {e}") from e

    if origin != 0.0:
        loop = loop.shifted(origin)
    logger.debug("Read %s loop (L=%g) from %s", loop.kind, loop.length, filepath)
    return loop


def write_matrix(filepath: Path, entries: np.ndarray) -> None:
    entries = np.ascontiguousarray(entries, dtype="<f8")
    if entries.ndim != 2:
        raise ValueError(f"Expected a 2D matrix, got shape {entries.shape}")
    header = MATRIX_MAGIC + np.array(entries.shape, dtype="<u8").tobytes()
    Path(filepath).write_bytes(header + entries.tobytes(order="C"))


def read_matrix(filepath: Path) -> np.ndarray:
    """
    Read a matrix dump.

    Raises:
        ConfigError: On a short file, a wrong magic or a size mismatch
    """
    data = Path(filepath).read_bytes()
    if len(data) < MATRIX_HEADER_BYTES:
        raise ConfigError(f"{filepath}: {len(data)} bytes is shorter than the matrix header")
    if data[:8] != MATRIX_MAGIC:
        raise ConfigError(f"{filepath} is not a matrix dump (bad magic)")
    if (len(data) - MATRIX_HEADER_BYTES) % 8:
        raise ConfigError(f"{filepath}: body is not a whole number of float64 entries")
    rows, cols = np.frombuffer(data, dtype="<u8", count=2, offset=8)
    body = np.frombuffer(data, dtype="<f8", offset=MATRIX_HEADER_BYTES)
    if body.size != rows * cols:
        raise ConfigError(f"{filepath}: header says {rows}x{cols}, found {body.size} entries")
    return body.reshape(int(rows), int(cols)).astype(float)

import math

import numpy as np
import pytest

from deltacone.exceptions import ConfigError
from deltacone.geometry import loop_from_samples
from deltacone.serialization import MATRIX_MAGIC, read_loop, read_matrix, write_loop, write_matrix


def _same_curve(a, b, atol):
    s = np.linspace(0.0, min(a.length, b.length), 64, endpoint=False)
    return np.max(np.abs(a.evaluate(s) - b.evaluate(s))) < atol


class TestLoopRecords:
    def test_circle(self, circle_pi, tmp_path):
        path = tmp_path / "circle.loop"
        write_loop(circle_pi, path)
        loaded = read_loop(path)
        assert loaded.kind == "circle"
        assert loaded.length == circle_pi.length
        assert _same_curve(loaded, circle_pi, 1e-14)

    def test_perturbed_with_shifted_origin(self, wavy_pi, tmp_path):
        shifted = wavy_pi.shifted(0.4)
        path = tmp_path / "wavy.loop"
        write_loop(shifted, path)
        text = path.read_text()
        assert text.startswith("# loop-record v1\n")
        assert "k = 2" in text
        loaded = read_loop(path)
        assert (loaded.eps, loaded.k) == (0.1, 2)
        assert loaded.origin == pytest.approx(0.4)
        assert _same_curve(loaded, shifted, 1e-12)

    def test_sample_table(self, circle_pi, tmp_path):
        s, points = circle_pi.sample(128)
        sampled = loop_from_samples(s, points, math.pi)
        path = tmp_path / "sampled.loop"
        write_loop(sampled, path, n_samples=256)
        assert path.read_text().startswith("# loop-samples v1\n")
        loaded = read_loop(path)
        assert loaded.kind == "user-supplied-samples"
        assert loaded.length == pytest.approx(sampled.length, rel=1e-6)
        assert _same_curve(loaded, sampled, 1e-6)

    def test_bare_sample_table(self, circle_pi, tmp_path):
        s, points = circle_pi.sample(64)
        rows = "\n".join(f"{si!r} {x!r} {y!r} {z!r}" for si, (x, y, z) in zip(s, points))
        path = tmp_path / "bare.loop"
        path.write_text("# loop-samples v1\n" + rows + "\n")
        assert read_loop(path).length == pytest.approx(math.pi, rel=1e-4)

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "# something else\nkind = circle\n",
            "# loop-record v1\nkind = circle\n",
            "# loop-record v1\nkind circle\nL = 3.0\n",
            "# loop-record v1\nkind = user-supplied-samples\nL = 3.0\n",
            "# loop-samples v1\n0.0 1.0 0.0\n",
        ],
    )
    def test_malformed(self, tmp_path, text):
        path = tmp_path / "bad.loop"
        path.write_text(text)
        with pytest.raises(ConfigError):
            read_loop(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            read_loop(tmp_path / "missing.loop")


class TestMatrixDumps:
    def test_round_trip(self, tmp_path):
        entries = np.arange(12, dtype=float).reshape(3, 4) / 7.0
        path = tmp_path / "m.bin"
        write_matrix(path, entries)
        data = path.read_bytes()
        assert data[:8] == MATRIX_MAGIC
        assert np.frombuffer(data, dtype="<u8", count=2, offset=8).tolist() == [3, 4]
        assert len(data) == 24 + 12 * 8
        assert np.array_equal(read_matrix(path), entries)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.bin"
        path.write_bytes(b"NOTAMAT\x00" + bytes(16))
        with pytest.raises(ConfigError):
            read_matrix(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "m.bin"
        write_matrix(path, np.ones((4, 4)))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ConfigError):
            read_matrix(path)

    @pytest.mark.parametrize("size", [0, 10, 23])
    def test_shorter_than_header(self, tmp_path, size):
        path = tmp_path / "m.bin"
        path.write_bytes((MATRIX_MAGIC + bytes(16))[:size])
        with pytest.raises(ConfigError, match="shorter than the matrix header"):
            read_matrix(path)

    def test_partial_entry(self, tmp_path):
        path = tmp_path / "m.bin"
        write_matrix(path, np.ones((2, 2)))
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(ConfigError):
            read_matrix(path)

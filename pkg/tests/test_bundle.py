"""Deterministic rendering, manifest hashing, and atomic bundle writes."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gva.bundle import (csv_text, fmt_float, json_text, read_csv,
                        read_manifest, sha256_hex, verify_bundle, write_bundle)
from gva.errors import DataError


class TestFmtFloat:
    @given(st.floats(allow_nan=False, allow_infinity=False))
    @settings(deadline=None)
    def test_round_trips_exactly(self, x):
        assert float(fmt_float(x)) == x

    def test_non_finite_by_name(self):
        assert fmt_float(math.nan) == "nan"
        assert fmt_float(math.inf) == "inf"
        assert fmt_float(-math.inf) == "-inf"

    def test_integral_floats_stay_short(self):
        assert fmt_float(2.0) == "2"
        assert fmt_float(-0.5) == "-0.5"


class TestCsv:
    def test_sequence_rows(self):
        text = csv_text(["a", "b"], [[1, 2.5], [3, 0.1]])
        assert text.splitlines()[0] == "a,b"
        assert text.splitlines()[1] == "1,2.5"
        assert text.endswith("\n")

    def test_dict_rows_follow_column_order(self):
        text = csv_text(["a", "b"], [{"b": 2, "a": 1}])
        assert text.splitlines()[1] == "1,2"

    def test_missing_dict_column(self):
        with pytest.raises(DataError, match="missing columns: b"):
            csv_text(["a", "b"], [{"a": 1}])

    def test_row_length_mismatch(self):
        with pytest.raises(DataError, match="2 cells for 3 columns"):
            csv_text(["a", "b", "c"], [[1, 2]])

    def test_bool_and_numpy_cells(self):
        text = csv_text(["x", "y", "z"], [[np.float64(0.25), np.int64(7), True]])
        assert text.splitlines()[1] == "0.25,7,true"

    def test_read_back(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text(csv_text(["a", "b"], [[1, 2], [3, 4]]))
        header, rows = read_csv(path)
        assert header == ["a", "b"]
        assert rows == [["1", "2"], ["3", "4"]]

    def test_read_empty_rejected(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("\n")
        with pytest.raises(DataError, match="empty CSV"):
            read_csv(path)

    @given(st.lists(st.floats(allow_nan=False, allow_infinity=False),
                    min_size=1, max_size=20))
    @settings(deadline=None)
    def test_float_cells_round_trip(self, values):
        lines = csv_text(["v"], [[v] for v in values]).splitlines()
        assert [float(cell) for cell in lines[1:]] == values


class TestJson:
    def test_keys_sorted(self):
        assert json_text({"b": 1, "a": 2}) == '{\n  "a": 2,\n  "b": 1\n}\n'

    def test_numpy_values_coerced(self):
        out = json.loads(json_text({
            "arr": np.array([1.0, 2.0]),
            "n": np.int32(3),
            "flag": np.bool_(True),
        }))
        assert out == {"arr": [1.0, 2.0], "n": 3, "flag": True}

    def test_non_finite_values_stringified(self):
        out = json.loads(json_text({"x": math.inf, "y": math.nan}))
        assert out == {"x": "inf", "y": "nan"}

    def test_identical_input_identical_bytes(self):
        obj = {"z": [1, 2, {"k": 0.1}], "a": "text"}
        assert json_text(obj) == json_text(json.loads(json.dumps(obj)))


class TestWriteBundle:
    def test_manifest_covers_every_file(self, tmp_path):
        out = tmp_path / "run"
        bundle = write_bundle(out, {"a.csv": "x,y\n1,2\n", "sub/b.json": "{}\n"})
        manifest = read_manifest(out)
        assert set(manifest) == {"a.csv", "sub/b.json"}
        assert bundle.manifest == manifest
        assert manifest["a.csv"] == sha256_hex(b"x,y\n1,2\n")

    def test_verify_accepts_untouched_bundle(self, tmp_path):
        out = tmp_path / "run"
        write_bundle(out, {"a.txt": "hello\n"})
        assert verify_bundle(out) == {"a.txt": sha256_hex(b"hello\n")}

    def test_verify_detects_tampering(self, tmp_path):
        out = tmp_path / "run"
        write_bundle(out, {"a.txt": "hello\n"})
        (out / "a.txt").write_text("edited\n")
        with pytest.raises(DataError, match="hash mismatch for a.txt"):
            verify_bundle(out)

    def test_replaces_existing_bundle(self, tmp_path):
        out = tmp_path / "run"
        write_bundle(out, {"old.txt": "1"})
        write_bundle(out, {"new.txt": "2"})
        assert not (out / "old.txt").exists()
        assert (out / "new.txt").read_text() == "2"

    def test_no_temp_directories_left_behind(self, tmp_path):
        out = tmp_path / "run"
        write_bundle(out, {"a.txt": "x"})
        assert [p.name for p in tmp_path.iterdir()] == ["run"]

    def test_failed_write_leaves_no_partial_bundle(self, tmp_path):
        out = tmp_path / "run"
        with pytest.raises(TypeError):
            write_bundle(out, {"a.txt": 123})
        assert not out.exists()
        assert list(tmp_path.iterdir()) == []

    def test_empty_bundle_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="at least one file"):
            write_bundle(tmp_path / "run", {})

    def test_manifest_name_reserved(self, tmp_path):
        with pytest.raises(ValueError, match="written by the bundle"):
            write_bundle(tmp_path / "run", {"manifest.json": "{}"})

    def test_missing_manifest_detected(self, tmp_path):
        with pytest.raises(DataError, match="no manifest.json"):
            read_manifest(tmp_path)

    def test_malformed_manifest_detected(self, tmp_path):
        (tmp_path / "manifest.json").write_text('{"other": 1}')
        with pytest.raises(DataError, match="malformed manifest"):
            read_manifest(tmp_path)

    def test_same_content_same_manifest_bytes(self, tmp_path):
        files = {"data.csv": csv_text(["v"], [[0.1], [0.2]])}
        write_bundle(tmp_path / "one", files)
        write_bundle(tmp_path / "two", files)
        a = (tmp_path / "one" / "manifest.json").read_bytes()
        b = (tmp_path / "two" / "manifest.json").read_bytes()
        assert a == b

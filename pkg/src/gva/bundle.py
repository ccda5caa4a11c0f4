"""Deterministic result bundles: CSV/JSON rendering, hashing, atomic writes.

A bundle is a directory holding a config echo, data tables, an optional plot,
and a manifest mapping every other file to its SHA-256. All renderers are
byte-deterministic (17-significant-digit floats, sorted JSON keys, no
timestamps), so re-running an experiment with the same config reproduces the
manifest exactly. Bundles are written to a temporary sibling directory and
renamed into place.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import shutil
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

MANIFEST_NAME = "manifest.json"


def fmt_float(x: float) -> str:
    """Round-trippable decimal text; non-finite values by name."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt_float(float(value))
    return str(value)


def csv_text(columns, rows) -> str:
    """Render rows (sequences or dicts keyed by column) to CSV text."""
    lines = [",".join(columns)]
    for row in rows:
        if isinstance(row, dict):
            missing = [c for c in columns if c not in row]
            if missing:
                raise DataError(f"row is missing columns: {', '.join(missing)}")
            cells = [row[c] for c in columns]
        else:
            if len(row) != len(columns):
                raise DataError(
                    f"row has {len(row)} cells for {len(columns)} columns"
                )
            cells = row
        lines.append(",".join(_cell(c) for c in cells))
    return "\n".join(lines) + "\n"


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    if not lines:
        raise DataError(f"empty CSV: {path}")
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return fmt_float(value)
        return value
    return value


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class ResultBundle:
    path: Path
    manifest: dict


def write_bundle(out_dir, files: dict) -> ResultBundle:
    """Write files plus a manifest atomically, replacing any existing bundle.

    files maps relative paths to str or bytes content. The manifest records
    the SHA-256 of every file; it does not hash itself.
    """
    out_dir = Path(out_dir)
    if not files:
        raise ValueError("bundle needs at least one file")
    if MANIFEST_NAME in files:
        raise ValueError(f"{MANIFEST_NAME} is written by the bundle itself")
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    manifest = {}
    tmp = tempfile.mkdtemp(prefix=out_dir.name + ".", dir=out_dir.parent)
    try:
        for rel in sorted(files):
            data = files[rel]
            if isinstance(data, str):
                data = data.encode("utf-8")
            target = Path(tmp) / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)
            manifest[rel] = sha256_hex(data)
        (Path(tmp) / MANIFEST_NAME).write_text(
            json_text({"files": manifest}), encoding="utf-8")
        if out_dir.exists():
            shutil.rmtree(out_dir)
        os.rename(tmp, out_dir)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return ResultBundle(path=out_dir, manifest=manifest)


def read_manifest(bundle_dir) -> dict:
    path = Path(bundle_dir) / MANIFEST_NAME
    if not path.is_file():
        raise DataError(f"no {MANIFEST_NAME} in {bundle_dir}")
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if "files" not in data or not isinstance(data["files"], dict):
        raise DataError(f"malformed manifest in {bundle_dir}")
    return data["files"]


def verify_bundle(bundle_dir) -> dict:
    """Recompute hashes for a bundle on disk; raises DataError on mismatch."""
    bundle_dir = Path(bundle_dir)
    manifest = read_manifest(bundle_dir)
    for rel, expected in manifest.items():
        actual = sha256_hex((bundle_dir / rel).read_bytes())
        if actual != expected:
            raise DataError(f"hash mismatch for {rel} in {bundle_dir}")
    return manifest

"""Shared fixtures: cached preset runs for the acceptance suite.

Presets are expensive, so each one is executed at most once per session (plus
one deliberate re-run for the determinism checks) and the results are shared
across tests.
"""

import time
from dataclasses import dataclass, field

import pytest

from gva.bundle import MANIFEST_NAME, write_bundle
from gva.config import parse_config, preset_text
from gva.experiments import RunResult, run_experiment


def preset_names():
    from importlib import resources
    root = resources.files("gva").joinpath("presets")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


@dataclass
class PresetRun:
    name: str
    result: RunResult
    wall_s: float
    manifest: bytes
    rerun_manifest: bytes | None = None


@dataclass
class PresetCache:
    tmp_factory: object
    runs: dict = field(default_factory=dict)

    def get(self, name: str) -> PresetRun:
        if name not in self.runs:
            config = parse_config(preset_text(name))
            t0 = time.monotonic()
            result = run_experiment(config)
            wall = time.monotonic() - t0
            out = self.tmp_factory.mktemp(f"preset-{name}")
            bundle = write_bundle(out / "first", result.files)
            manifest = (bundle.path / MANIFEST_NAME).read_bytes()
            self.runs[name] = PresetRun(name=name, result=result,
                                        wall_s=wall, manifest=manifest)
        return self.runs[name]

    def get_with_rerun(self, name: str) -> PresetRun:
        run = self.get(name)
        if run.rerun_manifest is None:
            config = parse_config(preset_text(name))
            result = run_experiment(config)
            out = self.tmp_factory.mktemp(f"preset-{name}-rerun")
            bundle = write_bundle(out / "second", result.files)
            run.rerun_manifest = (bundle.path / MANIFEST_NAME).read_bytes()
        return run


@pytest.fixture(scope="session")
def preset_runs(tmp_path_factory):
    return PresetCache(tmp_factory=tmp_path_factory)

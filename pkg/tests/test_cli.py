"""Command-line interface: subcommands, exit codes, output routing."""

import json
import subprocess
import sys

import pytest

from gva.cli import main
from gva.bundle import read_csv

TINY_AMP = """\
kind = verify-amplification
d = 1
eps = 0.01
c = 1.0
H = 200
eps_primes = [-0.005, 0.01, 0.02]
"""

# a filter this fast tracks the iterate into the cliff, so the recorded
# separation checks genuinely fail
FAILING_CLIFF = """\
kind = verify-cliff
gamma = 0.45
T = 200
trials = 400
"""

OVERFLOW_AMP = """\
kind = verify-amplification
d = 2
eps = 0.5
c = 100.0
H = 1000
eps_primes = [5.0]
"""

TINY_MEAN_CLIFF = """\
kind = mean-cliff
T = 300
trials = 400
n_checkpoints = 5
"""

TINY_LQR = """\
kind = lqr-cliff
H = 30
N = 8
epochs = 1
batch = 8
eval_every = 10
eval_seeds = 3
seeds = 2
ema_burn_in = 2
init_lo_deg = -80.0
init_hi_deg = 90.0
"""


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestRun:
    def test_passing_run_exits_zero_and_writes_a_bundle(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, TINY_AMP)
        code = main(["run", cfg, "--out", str(tmp_path / "res")])
        out = capsys.readouterr().out
        assert code == 0
        assert "checks passed" in out
        assert "wrote" in out
        bundle = tmp_path / "res" / "verify-amplification-seed0"
        assert (bundle / "manifest.json").is_file()
        assert (bundle / "summary.json").is_file()
        assert (bundle / "config.cfg").is_file()

    def test_preset_name_resolves(self, tmp_path):
        code = main(["run", "bench-averaging", "--out", str(tmp_path),
                     "--seed", "3"])
        assert code == 0
        assert (tmp_path / "bench-averaging-seed3" / "bench.csv").is_file()

    def test_seed_override_lands_in_the_bundle_config(self, tmp_path):
        cfg = write_cfg(tmp_path, TINY_AMP)
        main(["run", cfg, "--out", str(tmp_path / "res"), "--seed", "7"])
        bundle = tmp_path / "res" / "verify-amplification-seed7"
        assert "seed = 7" in (bundle / "config.cfg").read_text()

    def test_failed_check_exits_one(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, FAILING_CLIFF)
        code = main(["run", cfg, "--out", str(tmp_path / "res")])
        assert code == 1
        assert "FAILED" in capsys.readouterr().out

    def test_bad_config_exits_two(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, TINY_AMP + "unknown_key = 1\n")
        code = main(["run", cfg, "--out", str(tmp_path / "res")])
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_unknown_preset_exits_two(self, tmp_path, capsys):
        code = main(["run", "no-such-preset", "--out", str(tmp_path)])
        assert code == 2
        assert "config error" in capsys.readouterr().err

    @pytest.mark.filterwarnings("ignore:overflow")
    def test_numeric_blowup_exits_three(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, OVERFLOW_AMP)
        code = main(["run", cfg, "--out", str(tmp_path / "res")])
        assert code == 3
        assert "numeric error" in capsys.readouterr().err

    def test_env_var_supplies_the_out_root(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GVA_OUT_ROOT", str(tmp_path / "envroot"))
        cfg = write_cfg(tmp_path, TINY_AMP)
        code = main(["run", cfg])
        assert code == 0
        assert (tmp_path / "envroot" / "verify-amplification-seed0").is_dir()


def run_bundle(tmp_path, text, name):
    cfg = write_cfg(tmp_path, text, name + ".cfg")
    code = main(["run", cfg, "--out", str(tmp_path / name)])
    assert code == 0
    dirs = [p for p in (tmp_path / name).iterdir() if p.is_dir()]
    assert len(dirs) == 1
    return dirs[0]


class TestPlot:
    def test_renders_next_to_the_csv(self, tmp_path, capsys):
        bundle = run_bundle(tmp_path, TINY_MEAN_CLIFF, "mc")
        code = main(["plot", str(bundle / "cliff.csv"), "--spec",
                     "cliff-curves"])
        assert code == 0
        assert "wrote" in capsys.readouterr().out
        assert (bundle / "cliff-curves.svg").is_file()

    def test_out_directory_honored(self, tmp_path):
        bundle = run_bundle(tmp_path, TINY_MEAN_CLIFF, "mc")
        dest = tmp_path / "charts"
        code = main(["plot", str(bundle / "cliff.csv"), "--spec",
                     "cliff-curves", "--out", str(dest)])
        assert code == 0
        assert (dest / "cliff-curves.svg").is_file()

    def test_rendered_file_matches_the_library(self, tmp_path):
        from gva import plots
        bundle = run_bundle(tmp_path, TINY_MEAN_CLIFF, "mc")
        main(["plot", str(bundle / "cliff.csv"), "--spec", "cliff-curves",
              "--out", str(tmp_path / "charts")])
        header, rows = read_csv(bundle / "cliff.csv")
        expected = plots.render_csv(header, rows, "cliff-curves")
        written = (tmp_path / "charts" / "cliff-curves.svg").read_text()
        assert written == expected["cliff-curves.svg"]

    def test_unknown_spec_exits_three(self, tmp_path, capsys):
        bundle = run_bundle(tmp_path, TINY_MEAN_CLIFF, "mc")
        code = main(["plot", str(bundle / "cliff.csv"), "--spec", "pie"])
        assert code == 3
        assert "numeric error" in capsys.readouterr().err

    def test_missing_csv_exits_two(self, tmp_path, capsys):
        code = main(["plot", str(tmp_path / "nope.csv"), "--spec", "series"])
        assert code == 2


class TestReport:
    def test_check_bundle_report(self, tmp_path, capsys):
        bundle = run_bundle(tmp_path, TINY_AMP, "amp")
        code = main(["report", str(bundle)])
        out = capsys.readouterr().out
        assert code == 0
        assert "verify-amplification bundle(s)" in out
        assert "checks passed" in out

    def test_imitation_bundles_pool_seeds(self, tmp_path, capsys):
        b1 = run_bundle(tmp_path, TINY_LQR, "r1")
        b2 = run_bundle(tmp_path, TINY_LQR.replace("kind = lqr-cliff",
                                                   "kind = lqr-cliff\nseed = 1"),
                        "r2")
        code = main(["report", str(b1), str(b2)])
        out = capsys.readouterr().out
        assert code == 0
        assert "oscillation ratio" in out
        assert "seeds pooled: 4" in out

    def test_mixed_kinds_exit_two(self, tmp_path, capsys):
        b1 = run_bundle(tmp_path, TINY_AMP, "amp")
        b2 = run_bundle(tmp_path, TINY_MEAN_CLIFF, "mc")
        code = main(["report", str(b1), str(b2)])
        assert code == 2
        assert "mix" in capsys.readouterr().err

    def test_tampered_bundle_exits_three(self, tmp_path, capsys):
        bundle = run_bundle(tmp_path, TINY_AMP, "amp")
        target = bundle / "amplification.csv"
        target.write_text(target.read_text() + "tampered\n")
        code = main(["report", str(bundle)])
        assert code == 3
        assert "numeric error" in capsys.readouterr().err

    def test_deleted_file_exits_two(self, tmp_path, capsys):
        # a missing path is reported like any other bad argument
        bundle = run_bundle(tmp_path, TINY_AMP, "amp")
        (bundle / "summary.json").unlink()
        code = main(["report", str(bundle)])
        assert code == 2

    def test_bundle_without_summary_exits_three(self, tmp_path, capsys):
        from gva.bundle import write_bundle
        write_bundle(tmp_path / "b", {"data.csv": "a\n1\n"})
        code = main(["report", str(tmp_path / "b")])
        assert code == 3
        assert "summary.json" in capsys.readouterr().err


class TestVerify:
    def test_named_suite_runs_its_preset(self, tmp_path, capsys):
        code = main(["verify", "amplification", "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "== verify-amplification ==" in out
        assert (tmp_path / "verify-amplification-seed0").is_dir()

    def test_prefixed_suite_name_accepted(self, tmp_path):
        code = main(["verify", "verify-amplification", "--out",
                     str(tmp_path)])
        assert code == 0

    def test_unknown_suite_exits_two(self, tmp_path, capsys):
        code = main(["verify", "everything", "--out", str(tmp_path)])
        assert code == 2
        assert "unknown suite" in capsys.readouterr().err


class TestEntryPoint:
    def test_console_script_help(self):
        proc = subprocess.run([sys.executable, "-m", "gva.cli", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        for word in ("run", "plot", "report", "verify"):
            assert word in proc.stdout

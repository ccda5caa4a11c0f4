"""End-to-end acceptance checks over the shipped presets.

Each test pins a headline contract of the package: closed forms verified by
Monte Carlo, analytic bounds bracketing simulation, the control testbeds
reproducing reward oscillation and its filtering, and bit-exact determinism
of every preset. Preset runs are cached per session (see conftest).
"""

import math
import time

import numpy as np
import pytest

from gva.behavior_cloning import bc_batch_loss, init_mlp, mlp_grad
from gva.linear_control import dare_solve
from gva.numerics import RngState
from gva.stabilizers import AverageFilter

from conftest import preset_names
from oracles import (brute_force_lacoste_julien, brute_force_suffix,
                     fd_gradient)


class TestRiccatiGainReference:
    def test_reference_gain_reproduced_to_four_decimals(self):
        # reflection-structured input map with calibrated scale; the solver
        # must reproduce the reference gain digit for digit
        eps = 0.004999796879385537
        phi = 0.5366888485022867
        A = 1.0025 * np.eye(2)
        B = -eps * np.array([[math.cos(phi), math.sin(phi)],
                             [math.sin(phi), -math.cos(phi)]])
        t0 = time.monotonic()
        _, K = dare_solve(A, B, np.eye(2), np.eye(2))
        elapsed = time.monotonic() - t0
        expected = np.array([[1.3867, 0.8250], [0.8250, -1.3867]])
        assert np.max(np.abs(K - expected)) < 5e-5
        assert elapsed < 5.0


def passed_checks(result, needle):
    hits = [c for c in result.checks if needle in c.name]
    assert hits, f"no checks matching {needle!r}"
    return all(c.passed for c in hits)


class TestMeanEstimationTheory:
    def test_raw_mse_matches_closed_form_over_the_grid(self, preset_runs):
        run = preset_runs.get("verify-dt-ema")
        result = run.result
        raw_checks = [c for c in result.checks
                      if c.name.startswith("raw mse matches closed form (eta")]
        assert len(raw_checks) == 12  # etas x offsets x horizons
        assert all(c.passed for c in raw_checks)
        assert result.summary["trials"] == 100000
        assert result.timings["raw_grid_s"] < 60.0

    def test_filtered_mse_bracketed_by_the_analytic_bounds(self, preset_runs):
        run = preset_runs.get("verify-dt-ema")
        result = run.result
        lo = [c for c in result.checks if "above lower bound" in c.name]
        hi = [c for c in result.checks if "below upper bound" in c.name]
        assert len(lo) == len(hi) == 6  # two etas x three gammas
        assert all(c.passed for c in lo + hi)
        assert result.timings["bounds_grid_s"] < 120.0

    def test_cliff_reward_separation(self, preset_runs):
        run = preset_runs.get("verify-cliff")
        s = run.result.summary
        assert s["gap_raw"] >= 50.0
        assert s["gap_ema"] <= 1.0
        assert s["separation"] >= 20.0
        assert run.wall_s < 60.0

    def test_cliff_ball_hit_rate_order_of_magnitude(self, preset_runs):
        run = preset_runs.get("verify-cliff")
        p = run.result.config.params
        rate = run.result.summary["p_inside_raw"]
        assert rate >= 0.1 * p["gamma"] / p["eta"]
        assert rate <= 0.9


class TestContinuousTimeTheory:
    def test_ou_moments_and_variance_bound(self, preset_runs):
        run = preset_runs.get("verify-ou")
        assert passed_checks(run.result, "filtered mean matches")
        assert passed_checks(run.result, "iterate variance matches")
        assert passed_checks(run.result, "filtered variance within")
        assert run.result.summary["trials"] == 100000
        assert run.wall_s < 300.0

    def test_driftless_schedule_bounds(self, preset_runs):
        run = preset_runs.get("verify-driftless")
        result = run.result
        for schedule in ("inverse_sqrt", "inverse", "linear_decay"):
            assert passed_checks(result, f"{schedule}: iterate variance")
            assert passed_checks(result, f"{schedule}: filtered variance")


class TestErrorAmplification:
    def test_gap_closed_form_and_exponential_growth(self, preset_runs):
        run = preset_runs.get("verify-amplification")
        s = run.result.summary
        at_002 = [r for r in s["rows"] if abs(r[1] - 0.02) < 1e-12]
        assert len(at_002) == 1
        assert at_002[0][4] <= 1e-10  # relative error against the sum
        assert s["gap_ratio"] >= math.exp(0.005 * s["H"] * 0.9)


class TestImitationTestbeds:
    def test_marginally_stable_training_shows_no_oscillation(self, preset_runs):
        run = preset_runs.get("lqr-marginal")
        s = run.result.summary
        raw, ema = s["median_raw"], s["median_ema"]
        band = 0.02 * abs(raw["J_max"])
        assert raw["loss_final"] <= 1e-6
        assert raw["range_mid"] <= band
        # the filtered curve stays inside the same band: no help, no harm
        assert ema["range_mid"] <= 0.02 * abs(ema["J_max"])
        assert abs(ema["mu_mid"] - raw["mu_mid"]) <= band
        assert run.wall_s < 600.0

    def test_cliff_training_oscillates_and_the_filter_removes_it(
            self, preset_runs):
        run = preset_runs.get("lqr-cliff")
        s = run.result.summary
        raw, ema = s["median_raw"], s["median_ema"]
        assert ema["range_mid"] <= 0.5 * raw["range_mid"]
        assert ema["mu_mid"] >= raw["mu_mid"]
        assert run.wall_s < 600.0


class TestAveragingOracleEquivalence:
    def test_filters_match_brute_force_on_random_streams(self):
        rng = np.random.default_rng(1234)
        marks = (1, 3, 17, 60, 133, 200)
        t0 = time.monotonic()
        for _ in range(100):
            xs = np.cumsum(rng.normal(size=200))
            alpha = float(rng.uniform(0.05, 1.0))
            lj = AverageFilter.lacoste_julien()
            sfx = AverageFilter.suffix(alpha)
            for t in range(1, 201):
                got_lj = lj.update(t, xs[t - 1])[()]
                got_sfx = sfx.update(t, xs[t - 1])[()]
                if t not in marks:
                    continue
                # leading zero carries weight zero in the product form
                want_lj = brute_force_lacoste_julien(
                    np.concatenate([[0.0], xs[:t]]))[()]
                want_sfx = brute_force_suffix(xs[:t], alpha)[()]
                assert abs(got_lj - want_lj) <= 1e-10 * (1.0 + abs(want_lj))
                assert abs(got_sfx - want_sfx) <= 1e-10 * (1.0 + abs(want_sfx))
        assert time.monotonic() - t0 < 5.0


class TestGradientCorrectness:
    def test_fifty_random_networks_pass_finite_difference(self):
        rng = np.random.default_rng(77)
        t0 = time.monotonic()
        for i in range(50):
            d_x = int(rng.integers(1, 5))
            d_u = int(rng.integers(1, 4))
            depth = int(rng.integers(0, 3))
            hidden = [int(rng.integers(2, 7)) for _ in range(depth)]
            activation = ("relu", "tanh")[int(rng.integers(0, 2))]
            augmented = bool(rng.integers(0, 2))
            n = int(rng.integers(1, 7))
            policy = init_mlp(RngState(1000 + i), d_x, d_u, hidden,
                              activation, augmented)
            batch = (rng.normal(size=(n, d_x)), rng.normal(size=(n, d_u)),
                     rng.normal(size=(n, d_u)))
            grad = mlp_grad(policy, batch)
            theta = policy.to_vector()

            def loss_at(vec):
                policy.set_vector(vec)
                return bc_batch_loss(policy, *batch)

            fd = fd_gradient(loss_at, theta, h=1e-6)
            assert np.allclose(grad, fd, rtol=1e-4, atol=1e-7), (
                f"net {i}: d_x={d_x} d_u={d_u} hidden={hidden} "
                f"{activation} augmented={augmented}")
        assert time.monotonic() - t0 < 30.0


class TestDeterminism:
    @pytest.mark.parametrize("name", preset_names())
    def test_preset_rerun_manifests_are_byte_identical(self, name,
                                                       preset_runs):
        run = preset_runs.get_with_rerun(name)
        assert run.manifest == run.rerun_manifest

"""Training-curve oscillation summaries and seed medians."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gva.errors import DataError
from gva.metrics import (CheckpointRecord, CompareReport, GvaSummary,
                         TrainingCurve, compare, median_over_seeds,
                         reward_threshold, summarize, summary_table)


def curve_of(rewards, steps=None, losses=None):
    n = len(rewards)
    steps = steps if steps is not None else [100 * (i + 1) for i in range(n)]
    losses = losses if losses is not None else [1.0] * n
    return TrainingCurve([
        CheckpointRecord(step=s, mean_reward=r, val_loss=l)
        for s, r, l in zip(steps, rewards, losses)
    ])


def brute_force_summary(steps, rewards, losses):
    """Definition-by-definition re-evaluation used against summarize()."""
    t_max = steps[-1]
    j_max = max(rewards)
    thr = j_max - 0.05 * abs(j_max)
    mid = [r for s, r in zip(steps, rewards) if 0.25 * t_max <= s <= 0.75 * t_max]
    first_good = min(s for s, r in zip(steps, rewards) if r >= thr)
    dips = [s for s, r in zip(steps, rewards) if r < thr and s > first_good]
    return GvaSummary(
        J_max=j_max,
        J_final=rewards[-1],
        loss_min=np.nanmin(losses),
        loss_final=losses[-1],
        mu_mid=sum(mid) / len(mid),
        range_mid=max(mid) - min(mid),
        t_early=first_good / t_max,
        t_worse=max(dips) / t_max if dips else None,
    )


class TestTrainingCurve:
    def test_steps_must_increase(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            curve_of([1.0, 2.0, 3.0], steps=[100, 100, 300])

    def test_divergence_rate(self):
        recs = [
            CheckpointRecord(step=1, mean_reward=1.0,
                             rewards=np.ones(18), n_diverged=2),
            CheckpointRecord(step=2, mean_reward=1.0,
                             rewards=np.ones(20), n_diverged=0),
        ]
        assert TrainingCurve(recs).divergence_rate() == pytest.approx(2 / 40)

    def test_divergence_rate_without_reward_arrays(self):
        assert curve_of([1.0, 2.0]).divergence_rate() == 0.0


class TestSummarize:
    def test_requires_four_records(self):
        with pytest.raises(DataError, match=">= 4 records"):
            summarize(curve_of([1.0, 2.0, 3.0]))

    def test_constant_curve(self):
        s = summarize(curve_of([5.0] * 8))
        assert s.J_max == 5.0 and s.J_final == 5.0
        assert s.mu_mid == 5.0 and s.range_mid == 0.0
        assert s.t_early == pytest.approx(100 / 800)
        assert s.t_worse is None

    def test_monotone_curve_has_no_late_dip(self):
        rewards = [1.0, 2.0, 4.0, 8.0, 9.0, 9.5, 9.8, 10.0]
        s = summarize(curve_of(rewards))
        # first record at or above 9.5 is the sixth (step 600 of 800)
        assert s.t_early == pytest.approx(600 / 800)
        assert s.t_worse is None
        assert s.J_final == 10.0

    def test_sawtooth_matches_brute_force(self):
        steps = [50, 100, 150, 200, 250, 300, 350, 400]
        rewards = [2.0, 10.0, 3.0, 9.0, 1.0, 8.0, 2.5, 9.5]
        losses = [0.9, 0.5, 0.45, 0.3, 0.35, 0.2, 0.25, 0.21]
        got = summarize(curve_of(rewards, steps=steps, losses=losses))
        want = brute_force_summary(steps, rewards, losses)
        for name in ("J_max", "J_final", "loss_min", "loss_final",
                     "mu_mid", "range_mid", "t_early", "t_worse"):
            assert getattr(got, name) == pytest.approx(getattr(want, name)), name

    def test_negative_rewards_use_absolute_threshold(self):
        # J_max = -10 gives threshold -10 - 0.5 = -10.5
        assert reward_threshold(-10.0) == pytest.approx(-10.5)
        rewards = [-20.0, -10.0, -10.4, -30.0, -10.2, -10.1, -10.3, -10.0]
        s = summarize(curve_of(rewards))
        assert s.t_early == pytest.approx(200 / 800)
        assert s.t_worse == pytest.approx(400 / 800)

    def test_mid_window_bounds_inclusive(self):
        steps = [0, 100, 200, 300, 400]
        rewards = [0.0, 7.0, 5.0, 3.0, 0.0]
        s = summarize(curve_of(rewards, steps=steps))
        # t_max = 400: the window [100, 300] keeps the middle three records
        assert s.mu_mid == pytest.approx(5.0)
        assert s.range_mid == pytest.approx(4.0)

    @given(st.lists(st.floats(min_value=-100, max_value=100), min_size=4,
                    max_size=100))
    @settings(deadline=None)
    def test_random_curves_match_brute_force(self, rewards):
        steps = [10 * (i + 1) for i in range(len(rewards))]
        losses = [1.0] * len(rewards)
        got = summarize(curve_of(rewards, steps=steps, losses=losses))
        want = brute_force_summary(steps, rewards, losses)
        assert got.mu_mid == pytest.approx(want.mu_mid)
        assert got.range_mid == pytest.approx(want.range_mid)
        assert got.t_early == pytest.approx(want.t_early)
        if want.t_worse is None:
            assert got.t_worse is None
        else:
            assert got.t_worse == pytest.approx(want.t_worse)

    def test_affine_scaling_maps_summary(self):
        rewards = [1.0, 6.0, 2.0, 5.5, 3.0, 4.0, 5.9, 6.0]
        a = 3.0
        base = summarize(curve_of(rewards))
        scaled = summarize(curve_of([a * r for r in rewards]))
        assert scaled.J_max == pytest.approx(a * base.J_max)
        assert scaled.mu_mid == pytest.approx(a * base.mu_mid)
        assert scaled.range_mid == pytest.approx(a * base.range_mid)
        assert scaled.t_early == base.t_early
        assert scaled.t_worse == base.t_worse


class TestMedianOverSeeds:
    def mk(self, range_mid=0.0, t_worse=None):
        return GvaSummary(J_max=1.0, J_final=1.0, loss_min=0.0, loss_final=0.0,
                          mu_mid=1.0, range_mid=range_mid, t_early=0.1,
                          t_worse=t_worse)

    def test_single_summary_is_identity(self):
        s = self.mk(range_mid=2.0, t_worse=0.5)
        assert median_over_seeds([s]) == s

    def test_lower_median_of_three(self):
        med = median_over_seeds([self.mk(1.0), self.mk(5.0), self.mk(3.0)])
        assert med.range_mid == 3.0

    def test_even_count_takes_lower_median(self):
        med = median_over_seeds([self.mk(1.0), self.mk(2.0),
                                 self.mk(3.0), self.mk(4.0)])
        assert med.range_mid == 2.0

    def test_absent_t_worse_sorts_as_best(self):
        med = median_over_seeds([self.mk(t_worse=None), self.mk(t_worse=0.4),
                                 self.mk(t_worse=0.6)])
        assert med.t_worse == 0.6

    def test_median_can_be_absent(self):
        med = median_over_seeds([self.mk(t_worse=None), self.mk(t_worse=None),
                                 self.mk(t_worse=0.4)])
        assert med.t_worse is None

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            median_over_seeds([])


class TestCompare:
    def mk(self, range_mid, mu_mid=1.0):
        return GvaSummary(J_max=1.0, J_final=1.0, loss_min=0.0, loss_final=0.0,
                          mu_mid=mu_mid, range_mid=range_mid, t_early=0.1,
                          t_worse=None)

    def test_identical_summaries(self):
        rep = compare(self.mk(2.0), self.mk(2.0))
        assert rep.oscillation_ratio == 1.0
        assert all(d == 0 for d in rep.deltas.values() if d is not None)

    def test_half_range(self):
        assert compare(self.mk(4.0), self.mk(2.0)).oscillation_ratio == 0.5

    def test_both_zero_is_one_by_convention(self):
        assert compare(self.mk(0.0), self.mk(0.0)).oscillation_ratio == 1.0

    def test_raw_zero_ema_positive_is_inf(self):
        assert math.isinf(compare(self.mk(0.0), self.mk(1.0)).oscillation_ratio)

    def test_deltas_are_ema_minus_raw(self):
        rep = compare(self.mk(4.0, mu_mid=1.0), self.mk(2.0, mu_mid=3.0))
        assert rep.deltas["mu_mid"] == pytest.approx(2.0)
        assert rep.deltas["range_mid"] == pytest.approx(-2.0)
        assert rep.deltas["t_worse"] is None

    def test_report_type(self):
        assert isinstance(compare(self.mk(1.0), self.mk(1.0)), CompareReport)


class TestSummaryTable:
    def test_rows_align_and_mark_absent(self):
        s = GvaSummary(J_max=10.0, J_final=9.5, loss_min=0.01, loss_final=0.02,
                       mu_mid=9.0, range_mid=1.0, t_early=0.125, t_worse=None)
        text = summary_table({"raw": s})
        lines = text.splitlines()
        assert lines[0].startswith("variant")
        assert "J_max" in lines[0] and "range_mid" in lines[0]
        assert lines[1].startswith("raw")
        assert lines[1].rstrip().endswith("-")
        assert text.endswith("\n")

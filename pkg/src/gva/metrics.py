"""Oscillation statistics for training curves of checkpoint evaluations.

A curve is a step-ordered sequence of checkpoint records carrying the mean
rollout reward and validation loss. The summary captures how good the curve
gets (J_max), where it ends (J_final), how much it swings over the middle
half of training (mu_mid, range_mid), and when it first reaches / last falls
below 95% of its best reward (t_early, t_worse, as fractions of the run).

Rewards may be negative, so the 95% threshold is J_max - 0.05*|J_max|, which
reduces to 0.95*J_max for positive rewards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import DataError


@dataclass
class CheckpointRecord:
    step: int
    mean_reward: float
    rewards: np.ndarray | None = None
    val_loss: float = math.nan
    n_diverged: int = 0


@dataclass
class TrainingCurve:
    records: list[CheckpointRecord] = field(default_factory=list)

    def __post_init__(self):
        steps = [r.step for r in self.records]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("checkpoint steps must be strictly increasing")

    @property
    def steps(self) -> np.ndarray:
        return np.array([r.step for r in self.records])

    @property
    def mean_rewards(self) -> np.ndarray:
        return np.array([r.mean_reward for r in self.records])

    @property
    def val_losses(self) -> np.ndarray:
        return np.array([r.val_loss for r in self.records])

    def divergence_rate(self) -> float:
        counts = [r.n_diverged for r in self.records]
        sizes = [len(r.rewards) + r.n_diverged for r in self.records
                 if r.rewards is not None]
        if not sizes:
            return 0.0
        return float(sum(counts)) / float(sum(sizes))


@dataclass
class GvaSummary:
    J_max: float
    J_final: float
    loss_min: float
    loss_final: float
    mu_mid: float
    range_mid: float
    t_early: float | None
    t_worse: float | None


def reward_threshold(j_max: float) -> float:
    return j_max - 0.05 * abs(j_max)


def summarize(curve: TrainingCurve) -> GvaSummary:
    """Oscillation summary of a curve with at least 4 records."""
    if len(curve.records) < 4:
        raise DataError(
            f"mid-window statistics need >= 4 records, got {len(curve.records)}"
        )
    steps = curve.steps
    rewards = curve.mean_rewards
    losses = curve.val_losses
    j_max = float(rewards.max())
    t_max = float(steps[-1])
    lo, hi = 0.25 * t_max, 0.75 * t_max
    mid = (steps >= lo) & (steps <= hi)
    if not mid.any():
        raise DataError("no checkpoints fall in the middle half of the run")
    mid_rewards = rewards[mid]
    threshold = reward_threshold(j_max)
    good = np.flatnonzero(rewards >= threshold)
    t_early_step = int(steps[good[0]])
    t_early = t_early_step / t_max if t_max > 0 else 0.0
    late_dips = np.flatnonzero((rewards < threshold) & (steps > t_early_step))
    t_worse = float(steps[late_dips[-1]]) / t_max if late_dips.size else None
    return GvaSummary(
        J_max=j_max,
        J_final=float(rewards[-1]),
        loss_min=float(np.nanmin(losses)),
        loss_final=float(losses[-1]),
        mu_mid=float(mid_rewards.mean()),
        range_mid=float(mid_rewards.max() - mid_rewards.min()),
        t_early=t_early,
        t_worse=t_worse,
    )


def _lower_median(values: list[float]) -> float:
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def median_over_seeds(summaries: list[GvaSummary]) -> GvaSummary:
    """Field-wise lower median; absent t_early/t_worse sort as +inf.

    An absent t_worse means the reward never fell below threshold again, the
    best outcome, so it occupies the top of the sort; the median is reported
    absent only when it lands on such a value.
    """
    if not summaries:
        raise ValueError("need at least one summary")
    out = {}
    for f in fields(GvaSummary):
        vals = [getattr(s, f.name) for s in summaries]
        if f.name in ("t_early", "t_worse"):
            med = _lower_median([math.inf if v is None else v for v in vals])
            out[f.name] = None if math.isinf(med) else med
        else:
            out[f.name] = _lower_median(vals)
    return GvaSummary(**out)


def summary_rows(summaries: dict[str, GvaSummary]) -> tuple[list[str], list[list[str]]]:
    """Header and formatted string rows, one row per labeled summary."""
    columns = ["variant"] + [f.name for f in fields(GvaSummary)]
    rows = []
    for label, s in summaries.items():
        row = [str(label)]
        for f in fields(GvaSummary):
            v = getattr(s, f.name)
            row.append("-" if v is None else f"{v:.6g}")
        rows.append(row)
    return columns, rows


def summary_table(summaries: dict[str, GvaSummary]) -> str:
    """Aligned plain-text table of summaries keyed by variant label."""
    columns, rows = summary_rows(summaries)
    widths = [max([len(columns[i])] + [len(r[i]) for r in rows])
              for i in range(len(columns))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


@dataclass
class CompareReport:
    oscillation_ratio: float
    deltas: dict


def compare(raw: GvaSummary, ema: GvaSummary) -> CompareReport:
    """EMA-vs-raw oscillation ratio and per-field deltas (ema minus raw)."""
    if raw.range_mid > 0.0:
        ratio = ema.range_mid / raw.range_mid
    else:
        ratio = 1.0 if ema.range_mid == 0.0 else math.inf
    deltas = {}
    for f in fields(GvaSummary):
        a, b = getattr(raw, f.name), getattr(ema, f.name)
        deltas[f.name] = None if (a is None or b is None) else b - a
    return CompareReport(oscillation_ratio=ratio, deltas=deltas)

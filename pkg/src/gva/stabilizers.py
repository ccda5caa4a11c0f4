"""Iterate-averaging filters applied to optimizer trajectories.

EmaFilter implements shadow <- (1 - gamma_t) * shadow + gamma_t * iterate with
optional burn-in (copy the raw iterate while t < burn_in), update period, and
an annealed rate gamma_k = max(k^-alpha, gamma_min) where k counts steps past
burn-in. The first update at or after burn-in end copies the current iterate
(gamma treated as 1 at k = 0), so a long burn-in never leaves a stale shadow.

Rates are stated in gamma form; the beta convention common in deep-learning
codebases is beta = 1 - gamma (gamma = 1e-4 is beta = 0.9999).

AverageFilter covers the classical schemes: uniform running mean
(gamma_t = 1/t), the 2/(t+1) weighting that is optimal for strongly convex
non-smooth stochastic problems, and suffix-alpha (mean of the most recent
ceil(alpha * t) iterates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AnnealedGamma:
    """gamma_k = min(1, max(k^-alpha, gamma_min)), with gamma_0 = 1."""

    alpha: float
    gamma_min: float = 1e-4

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not 0.0 < self.gamma_min <= 1.0:
            raise ValueError(f"gamma_min must be in (0, 1], got {self.gamma_min}")


def gamma_value(schedule, k: int) -> float:
    """Blend rate k steps past burn-in; k = 0 always returns 1 (copy)."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if k == 0:
        return 1.0
    if isinstance(schedule, AnnealedGamma):
        return min(1.0, max(k ** (-schedule.alpha), schedule.gamma_min))
    g = float(schedule)
    if not 0.0 <= g <= 1.0:
        raise ValueError(f"fixed gamma must be in [0, 1], got {g}")
    return g


class EmaFilter:
    """Exponential moving average of a parameter stream."""

    def __init__(self, gamma, burn_in: int = 0, update_period: int = 1):
        if isinstance(gamma, AnnealedGamma):
            self.gamma = gamma
        else:
            g = float(gamma)
            if not 0.0 <= g <= 1.0:
                raise ValueError(f"gamma must be in [0, 1], got {g}")
            self.gamma = g
        if burn_in < 0:
            raise ValueError(f"burn_in must be >= 0, got {burn_in}")
        if update_period < 1:
            raise ValueError(f"update_period must be >= 1, got {update_period}")
        self.burn_in = burn_in
        self.update_period = update_period
        self.shadow: np.ndarray | None = None
        self.last_t: int | None = None

    def update(self, t: int, iterate) -> np.ndarray:
        return ema_update(self, t, iterate)


def ema_update(filt: EmaFilter, t: int, iterate) -> np.ndarray:
    """Advance the shadow with iterate theta^(t); returns a copy of it."""
    arr = np.asarray(iterate, dtype=float)
    if filt.last_t is not None:
        if t <= filt.last_t:
            raise ValueError(f"t must increase strictly, got {t} after {filt.last_t}")
        if filt.shadow is not None and arr.shape != filt.shadow.shape:
            raise ValueError(
                f"iterate shape {arr.shape} != shadow shape {filt.shadow.shape}"
            )
    filt.last_t = t
    if filt.shadow is None or t < filt.burn_in:
        filt.shadow = arr.copy()
    elif (t - filt.burn_in) % filt.update_period == 0:
        g = gamma_value(filt.gamma, t - filt.burn_in)
        filt.shadow = (1.0 - g) * filt.shadow + g * arr
    return filt.shadow.copy()


class AverageFilter:
    """Uniform, 2/(t+1)-weighted, or suffix-alpha running average."""

    def __init__(self, variant: str, alpha: float | None = None):
        if variant not in ("uniform", "lacoste_julien", "suffix"):
            raise ValueError(f"unknown average variant {variant!r}")
        if variant == "suffix":
            if alpha is None or not 0.0 < alpha <= 1.0:
                raise ValueError(f"suffix needs alpha in (0, 1], got {alpha}")
        self.variant = variant
        self.alpha = alpha
        self.count = 0
        self.shadow: np.ndarray | None = None
        self.buffer: list[np.ndarray] = []
        self.last_t: int | None = None

    @classmethod
    def uniform(cls) -> "AverageFilter":
        return cls("uniform")

    @classmethod
    def lacoste_julien(cls) -> "AverageFilter":
        return cls("lacoste_julien")

    @classmethod
    def suffix(cls, alpha: float) -> "AverageFilter":
        return cls("suffix", alpha=alpha)

    def update(self, t: int, iterate) -> np.ndarray:
        return avg_update(self, t, iterate)


def avg_update(filt: AverageFilter, t: int, iterate) -> np.ndarray:
    """Observe the next iterate; returns a copy of the current average."""
    arr = np.asarray(iterate, dtype=float)
    if t < 1:
        raise ValueError(f"average filters index iterates from t=1, got {t}")
    if filt.last_t is not None:
        if t <= filt.last_t:
            raise ValueError(f"t must increase strictly, got {t} after {filt.last_t}")
        if filt.shadow is not None and arr.shape != filt.shadow.shape:
            raise ValueError(
                f"iterate shape {arr.shape} != shadow shape {filt.shadow.shape}"
            )
    filt.last_t = t
    filt.count += 1
    n = filt.count
    if filt.variant == "uniform":
        if filt.shadow is None:
            filt.shadow = arr.copy()
        else:
            filt.shadow = filt.shadow + (arr - filt.shadow) / n
    elif filt.variant == "lacoste_julien":
        g = 2.0 / (n + 1.0)
        if filt.shadow is None:
            filt.shadow = arr.copy()
        else:
            filt.shadow = (1.0 - g) * filt.shadow + g * arr
    else:
        filt.buffer.append(arr.copy())
        window = math.ceil(filt.alpha * n)
        del filt.buffer[: len(filt.buffer) - window]
        filt.shadow = np.mean(np.stack(filt.buffer), axis=0)
    return filt.shadow.copy()


def filter_checkpoint_stream(records, filt) -> list[np.ndarray]:
    """Apply a fresh filter to a saved stream, in stream order.

    EMA filters index the stream from t=0 (the first record plays the role of
    the initializer), averaging filters from t=1.
    """
    records = list(records)
    if not records:
        raise ValueError("cannot filter an empty stream")
    start = 0 if isinstance(filt, EmaFilter) else 1
    return [filt.update(t, rec) for t, rec in enumerate(records, start=start)]


@dataclass(frozen=True)
class EmaConfig:
    """Config-friendly description of an EmaFilter."""

    gamma: float | None = None
    alpha: float | None = None
    gamma_min: float = 1e-4
    burn_in: int = 0
    update_period: int = 1

    def __post_init__(self):
        if (self.gamma is None) == (self.alpha is None):
            raise ValueError("set exactly one of gamma (fixed) or alpha (annealed)")

    @property
    def schedule(self):
        if self.gamma is not None:
            return float(self.gamma)
        return AnnealedGamma(alpha=self.alpha, gamma_min=self.gamma_min)

    def build(self) -> EmaFilter:
        return EmaFilter(self.schedule, burn_in=self.burn_in, update_period=self.update_period)

"""Learning-rate schedules, gradient accumulation, and parameter updates.

Parameters travel as flat float64 vectors. Update rules are functional on the
parameter vector and stateful on their own buffers (momentum, Adam moments),
which keeps training loops explicit about what mutates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LrSchedule:
    """One of constant / inverse / inverse_sqrt / power_decay / warmup wrapper."""

    variant: str
    eta: float = 0.0
    alpha: float = 0.0
    warmup_steps: int = 0
    base: "LrSchedule | None" = None

    @classmethod
    def constant(cls, eta: float) -> "LrSchedule":
        return cls("constant", eta=_check_eta(eta))

    @classmethod
    def inverse(cls, eta: float) -> "LrSchedule":
        return cls("inverse", eta=_check_eta(eta))

    @classmethod
    def inverse_sqrt(cls, eta: float) -> "LrSchedule":
        return cls("inverse_sqrt", eta=_check_eta(eta))

    @classmethod
    def power_decay(cls, eta: float, alpha: float) -> "LrSchedule":
        if alpha < 0:
            raise ValueError(f"power_decay needs alpha >= 0, got {alpha}")
        return cls("power_decay", eta=_check_eta(eta), alpha=alpha)

    @classmethod
    def linear_warmup_then(cls, base: "LrSchedule", warmup_steps: int) -> "LrSchedule":
        if warmup_steps < 1:
            raise ValueError(f"warmup_steps must be >= 1, got {warmup_steps}")
        return cls("linear_warmup_then", warmup_steps=warmup_steps, base=base)


def _check_eta(eta: float) -> float:
    if eta < 0:
        raise ValueError(f"learning rate must be >= 0, got {eta}")
    return float(eta)


def lr_at(schedule: LrSchedule, t: int, T: int) -> float:
    """Scheduled rate at global step t of a T-step run."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if t < 0 or t > T:
        raise ValueError(f"step t={t} outside [0, {T}]")
    v = schedule.variant
    if v == "constant":
        return schedule.eta
    if v == "inverse":
        return schedule.eta / (1.0 + t)
    if v == "inverse_sqrt":
        return schedule.eta / np.sqrt(1.0 + t)
    if v == "power_decay":
        return schedule.eta * (1.0 - t / T) ** schedule.alpha
    if v == "linear_warmup_then":
        scale = min(1.0, t / schedule.warmup_steps)
        return scale * lr_at(schedule.base, t, T)
    raise ValueError(f"unknown schedule variant {v!r}")


@dataclass
class SgdState:
    """Plain or momentum SGD buffers."""

    beta1: float = 0.0
    momentum: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.beta1 < 1.0:
            raise ValueError(f"beta1 must be in [0, 1), got {self.beta1}")


@dataclass
class AdamWState:
    """Decoupled-weight-decay Adam buffers with bias correction."""

    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    weight_decay: float = 0.0
    t: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.beta1 < 1.0:
            raise ValueError(f"beta1 must be in [0, 1), got {self.beta1}")
        if not 0.0 <= self.beta2 < 1.0:
            raise ValueError(f"beta2 must be in [0, 1), got {self.beta2}")
        if self.eps_adam <= 0.0:
            raise ValueError(f"eps_adam must be > 0, got {self.eps_adam}")
        if self.weight_decay < 0.0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")


def _check_dims(params: np.ndarray, grad: np.ndarray) -> None:
    if params.shape != grad.shape:
        raise ValueError(f"params shape {params.shape} != grad shape {grad.shape}")


def sgd_step(state: SgdState, params: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    _check_dims(params, grad)
    if state.beta1 == 0.0:
        return params - lr * grad
    if state.momentum is None:
        state.momentum = np.zeros_like(params)
    _check_dims(params, state.momentum)
    state.momentum = state.beta1 * state.momentum + grad
    return params - lr * state.momentum


def adamw_step(state: AdamWState, params: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    _check_dims(params, grad)
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    _check_dims(params, state.m)
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    return params * (1.0 - lr * state.weight_decay) - lr * m_hat / (np.sqrt(v_hat) + state.eps_adam)


@dataclass
class GradAccumulator:
    """Sums gradients until flushed; flush returns their arithmetic mean."""

    target_multiple: int | None = None
    running_sum: np.ndarray | None = None
    count: int = 0

    def __post_init__(self):
        if self.target_multiple is not None and self.target_multiple < 1:
            raise ValueError(f"target multiple must be >= 1, got {self.target_multiple}")


def accumulate(acc: GradAccumulator, grad: np.ndarray) -> GradAccumulator:
    grad = np.asarray(grad, dtype=float)
    if acc.running_sum is None:
        acc.running_sum = grad.copy()
    else:
        _check_dims(acc.running_sum, grad)
        acc.running_sum = acc.running_sum + grad
    acc.count += 1
    return acc


def flush(acc: GradAccumulator) -> np.ndarray:
    if acc.count < 1:
        raise ValueError("flush on an empty accumulator")
    mean = acc.running_sum / acc.count
    acc.running_sum = None
    acc.count = 0
    return mean

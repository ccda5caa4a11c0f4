"""Linear-quadratic control environments and stability probes.

Discrete dynamics x_{t+1} = A x_t + B u_t + w_t with quadratic costs, a
fixed-point Riccati solver for the optimal gain, and two generator families:
a marginally stable pair (spectral radius slightly above 1, closed loop on
the unit circle) and a rotating spring that falls off a cliff when its first
coordinate drops below a threshold. Rollouts, an exact error-amplification
probe, and an empirical stability-margin check round out the testbed.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import CheckFailure, NumericError, ValidationError
from .numerics import (RngState, as_matrix, as_vector, check_symmetric_psd,
                       inverse, mat_exp, op_norm, random_rotation, split)

INIT_KINDS = ("gaussian", "circle", "circle_arc", "fixed")


@dataclass(frozen=True)
class InitSampler:
    """Initial-state distribution: Gaussian, unit circle, arc, or a point."""

    kind: str
    scale: float = 1.0
    lo_deg: float = 0.0
    hi_deg: float = 360.0
    point: tuple | None = None

    def __post_init__(self):
        if self.kind not in INIT_KINDS:
            raise ValueError(f"init kind must be one of {INIT_KINDS}, got {self.kind!r}")
        if self.kind == "fixed" and self.point is None:
            raise ValueError("fixed init requires a point")
        if self.kind == "circle_arc" and not self.lo_deg < self.hi_deg:
            raise ValueError("circle_arc requires lo_deg < hi_deg")

    def sample(self, rng: RngState, d: int) -> np.ndarray:
        if self.kind == "gaussian":
            return self.scale * rng.normal(d)
        if self.kind == "fixed":
            return as_vector(np.asarray(self.point, dtype=float), dim=d, name="point")
        if d != 2:
            raise ValueError(f"circle init requires d=2, got d={d}")
        if self.kind == "circle":
            ang = rng.uniform(0.0, 2.0 * math.pi)
        else:
            ang = math.radians(rng.uniform(self.lo_deg, self.hi_deg))
        return self.scale * np.array([math.cos(ang), math.sin(ang)])


@dataclass(frozen=True)
class CliffRule:
    """Terminate (no further reward) once coordinate 1 reaches kappa."""

    kappa: float

    def __post_init__(self):
        if self.kappa >= 0.0:
            raise ValueError(f"kappa must be < 0, got {self.kappa}")

    def violated(self, x: np.ndarray) -> bool:
        return bool(x[0] <= self.kappa)


@dataclass(frozen=True)
class LinearSystem:
    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    H: int
    init: InitSampler
    sigma_w: float = 0.0
    cliff: CliffRule | None = None

    def __post_init__(self):
        A = as_matrix(self.A, name="A")
        d = A.shape[0]
        if A.shape[1] != d:
            raise ValueError(f"A must be square, got {A.shape}")
        B = as_matrix(self.B, rows=d, name="B")
        du = B.shape[1]
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Q", check_symmetric_psd(
            as_matrix(self.Q, rows=d, cols=d, name="Q"), name="Q"))
        object.__setattr__(self, "R", check_symmetric_psd(
            as_matrix(self.R, rows=du, cols=du, name="R"), name="R"))
        if self.sigma_w < 0.0:
            raise ValueError(f"sigma_w must be >= 0, got {self.sigma_w}")
        if self.H < 1:
            raise ValueError(f"H must be >= 1, got {self.H}")

    @property
    def d_x(self) -> int:
        return self.A.shape[0]

    @property
    def d_u(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class LinearPolicy:
    K: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "K", as_matrix(self.K, name="K"))

    def act(self, x: np.ndarray) -> np.ndarray:
        return self.K @ x


@dataclass
class RolloutResult:
    states: np.ndarray
    actions: np.ndarray
    total_reward: float
    terminated_at: int | None = None
    diverged: bool = False


def dare_solve(A, B, Q, R, tol: float = 1e-12, max_iter: int = 10**6):
    """Fixed-point Riccati iteration from S0 = Q; returns (S, K).

    The gain is K = -(R + B'SB)^{-1} B'SA, so the closed loop is A + BK.
    """
    A = as_matrix(A, name="A")
    d = A.shape[0]
    if A.shape[1] != d:
        raise ValueError(f"A must be square, got {A.shape}")
    B = as_matrix(B, rows=d, name="B")
    Q = check_symmetric_psd(as_matrix(Q, rows=d, cols=d, name="Q"), name="Q")
    du = B.shape[1]
    R = check_symmetric_psd(as_matrix(R, rows=du, cols=du, name="R"), name="R")
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    S = Q.copy()
    for _ in range(max_iter):
        BtS = B.T @ S
        gain = inverse(R + BtS @ B) @ (BtS @ A)
        S_next = Q + A.T @ S @ A - A.T @ S @ B @ gain
        S_next = 0.5 * (S_next + S_next.T)  # keep symmetry against drift
        delta = float(np.max(np.abs(S_next - S)))
        S = S_next
        if delta < tol:
            BtS = B.T @ S
            K = -inverse(R + BtS @ B) @ (BtS @ A)
            return S, K
    raise NumericError(
        f"Riccati iteration did not converge in {max_iter} steps; "
        f"last residual {delta:.3e} > tol {tol:.3e}"
    )


def make_marginally_stable(rng: RngState, d: int = 2, alpha: float = 2.5,
                           H: int = 1000, sigma_w: float = 1e-3,
                           forced_angle: float | None = None) -> LinearSystem:
    """A = (1 + alpha/H) I, B = -(alpha/H) O for a random rotation O."""
    if alpha <= 0.0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if H < 1:
        raise ValueError(f"H must be >= 1, got {H}")
    eps = alpha / H
    O = random_rotation(rng, d, forced_angle=forced_angle)
    return LinearSystem(
        A=(1.0 + eps) * np.eye(d),
        B=-eps * O,
        Q=np.eye(d),
        R=np.eye(d),
        H=H,
        init=InitSampler("gaussian"),
        sigma_w=sigma_w,
    )


def make_spring_cliff(eta_time: float = 0.1, kappa: float = -0.05,
                      H: int = 1000, sigma_w: float = 0.0,
                      init: InitSampler | None = None) -> LinearSystem:
    """Rotation dynamics forced through the second coordinate, cliff on the first."""
    if eta_time <= 0.0:
        raise ValueError(f"eta_time must be > 0, got {eta_time}")
    A = mat_exp(eta_time * np.array([[0.0, 1.0], [-1.0, 0.0]]))
    return LinearSystem(
        A=A,
        B=np.array([[0.0], [1.0]]),
        Q=np.eye(2),
        R=np.eye(1),
        H=H,
        init=init if init is not None else InitSampler("circle"),
        sigma_w=sigma_w,
        cliff=CliffRule(kappa),
    )


def rollout(system: LinearSystem, policy, x0, rng: RngState | None = None) -> RolloutResult:
    """Execute the policy for up to H steps.

    Without a cliff the reward is -sum(x'Qx + u'Ru) over the H visited
    (state, action) pairs; with a cliff it is one point per surviving step,
    ending at the first state whose coordinate 1 is at or below kappa.
    Non-finite actions or states stop the episode with diverged=True and the
    finite prefix of the trajectory.
    """
    x = as_vector(x0, dim=system.d_x, name="x0")
    if system.sigma_w > 0.0 and rng is None:
        raise ValueError("rng is required when sigma_w > 0")
    reset = getattr(policy, "reset", None)
    if reset is not None:
        reset()  # stateful policies track the previous action per episode
    states = [x]
    actions = []
    total = 0.0
    terminated_at = None
    diverged = False
    for t in range(system.H):
        if system.cliff is not None and system.cliff.violated(x):
            terminated_at = t
            break
        u = np.atleast_1d(np.asarray(policy.act(x), dtype=float))
        if u.shape != (system.d_u,):
            raise ValueError(f"action shape {u.shape} != ({system.d_u},)")
        if not np.all(np.isfinite(u)):
            diverged = True
            break
        if system.cliff is not None:
            r = 1.0
        else:
            r = -float(x @ system.Q @ x + u @ system.R @ u)
        w = system.sigma_w * rng.normal(system.d_x) if system.sigma_w > 0.0 else 0.0
        x_next = system.A @ x + system.B @ u + w
        total += r
        actions.append(u)
        if not np.all(np.isfinite(x_next)):
            diverged = True
            break
        x = x_next
        states.append(x)
    return RolloutResult(
        states=np.asarray(states),
        actions=np.asarray(actions) if actions else np.zeros((0, system.d_u)),
        total_reward=total,
        terminated_at=terminated_at,
        diverged=diverged,
    )


def batch_rollouts(system: LinearSystem, policy, rng: RngState, n: int) -> list[RolloutResult]:
    """n independent rollouts from the system's init sampler, in seed order."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    results = []
    for stream in split(rng, n):
        x0 = system.init.sample(stream, system.d_x)
        results.append(rollout(system, policy, x0, stream))
    return results


@dataclass(frozen=True)
class ProbeRow:
    eps_prime: float
    delta: float
    gap: float


def error_amplification_probe(d: int, eps: float, c: float, eps_primes,
                              H: int) -> list[ProbeRow]:
    """Reward gap of the perturbed policy K* + eps' I on the identity system.

    A = I, B = c I, K* = -(eps/c) I, state-only cost. Both policies are
    rolled out noiselessly from a unit-norm start; the reported gap is the
    per-rollout gap scaled by d, the average over standard Gaussian starts:

        gap = d * sum_{h=1..H} ((1+delta)^{2(h-1)} - (1-eps)^{2(h-1)})

    with delta = c*eps' - eps.
    """
    if eps <= 0.0 or c <= 0.0:
        raise ValueError("eps and c must be > 0")
    if d < 1 or H < 1:
        raise ValueError("d and H must be >= 1")
    x0 = np.ones(d) / math.sqrt(d)
    system = LinearSystem(
        A=np.eye(d), B=c * np.eye(d), Q=np.eye(d), R=np.zeros((d, d)),
        H=H, init=InitSampler("fixed", point=tuple(x0)), sigma_w=0.0,
    )
    k_star = -(eps / c) * np.eye(d)
    base = rollout(system, LinearPolicy(k_star), x0)
    rows = []
    for ep in np.atleast_1d(np.asarray(eps_primes, dtype=float)):
        res = rollout(system, LinearPolicy(k_star + float(ep) * np.eye(d)), x0)
        if res.diverged or base.diverged:
            step = res.states.shape[0] - 1
            raise NumericError(f"state overflow at step {step} for eps'={ep}")
        gap = d * (base.total_reward - res.total_reward)
        rows.append(ProbeRow(eps_prime=float(ep), delta=c * float(ep) - eps, gap=gap))
    return rows


@dataclass
class StabilityReport:
    bound: float
    c_const: float
    radius: float
    x0: np.ndarray
    gaps: np.ndarray
    max_gap: float


def stability_margin_check(system: LinearSystem, k_star: np.ndarray,
                           k_hat: np.ndarray, eps: float, rng: RngState,
                           n_grid: int = 50) -> StabilityReport:
    """Reward gaps of perturbed gains vs the bound 100(CH^2 + H||R||) ||x0||^2 eps.

    C is measured as ||Q + K_hat' R K_hat||. Requires a non-expansive closed
    loop under k_star and ||k_star - k_hat|| <= eps / (H ||B||); raises
    CheckFailure if any sampled gap exceeds the bound.
    """
    k_star = as_matrix(k_star, rows=system.d_u, cols=system.d_x, name="k_star")
    k_hat = as_matrix(k_hat, rows=system.d_u, cols=system.d_x, name="k_hat")
    if eps <= 0.0:
        raise ValueError(f"eps must be > 0, got {eps}")
    closed = op_norm(system.A + system.B @ k_star)
    if closed > 1.0 + 1e-8:
        raise ValidationError(
            f"op_norm(A + B k_star) = {closed} violates the bound <= 1"
        )
    radius = eps / (system.H * op_norm(system.B))
    drift = op_norm(k_star - k_hat)
    if drift > radius * (1.0 + 1e-12):
        raise ValidationError(
            f"op_norm(k_star - k_hat) = {drift} violates the bound "
            f"eps/(H ||B||) = {radius}"
        )
    x0 = system.init.sample(rng, system.d_x)
    c_const = op_norm(system.Q + k_hat.T @ system.R @ k_hat)
    bound = 100.0 * (c_const * system.H**2 + system.H * op_norm(system.R)) \
        * float(x0 @ x0) * eps
    quiet = dataclasses.replace(system, sigma_w=0.0)
    j_star = rollout(quiet, LinearPolicy(k_star), x0).total_reward
    gains = [k_hat]
    for _ in range(max(0, n_grid - 1)):
        direction = rng.normal((system.d_u, system.d_x))
        norm = op_norm(direction)
        if norm == 0.0:
            continue
        gains.append(k_star + direction * (radius * rng.uniform(0.0, 1.0) / norm))
    gaps = np.array([
        j_star - rollout(quiet, LinearPolicy(k), x0).total_reward for k in gains
    ])
    max_gap = float(gaps.max())
    if max_gap > bound:
        raise CheckFailure(
            f"stability margin violated: max reward gap {max_gap} > bound {bound}"
        )
    return StabilityReport(bound=bound, c_const=c_const, radius=radius,
                           x0=x0, gaps=gaps, max_gap=max_gap)

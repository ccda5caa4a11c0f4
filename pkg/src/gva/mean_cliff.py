"""Noisy mean estimation with a cliff reward, plus continuous-time limits.

The discrete testbed runs SGD on the quadratic half-loss around an unknown
mean, theta^{t+1} = theta^t - eta (theta^t - mu + w), w ~ N(0, sigma^2 I),
optionally filtered by an exponential moving average. The reward

    J(theta) = -||theta - mu||^2   if ||theta - mu|| <= eps (inclusive)
             = -C                  otherwise

is flat-bottomed but cliff-edged, so iterate variance that is invisible in the
training loss shows up as a large expected reward penalty. Closed forms for
the no-filter MSE and two-sided bounds for the filtered MSE are provided along
with Monte Carlo estimators.

The continuous-time section integrates the driftless scaling limit
d theta = eta_s dB_s and the mean-reverting limit
d theta = -a (theta - mu) dt + dB_t, each coupled with the filter ODE
d shadow = gamma (theta - shadow) dt, and evaluates the matching analytic
moment formulas and covariance bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expi

from .errors import ValidationError
from .numerics import RngState, as_vector
from .stabilizers import EmaConfig, gamma_value

DEFAULT_JACKKNIFE_BLOCKS = 100


# ---------------------------------------------------------------------------
# losses and rewards


@dataclass(frozen=True)
class CliffSpec:
    """Cliff reward around mu: quadratic inside the eps-ball, -C outside."""

    mu: np.ndarray
    eps: float
    C: float

    def __post_init__(self):
        object.__setattr__(self, "mu", as_vector(self.mu, name="mu"))
        if not 0.0 < self.eps <= 1.0:
            raise ValueError(f"eps must be in (0, 1], got {self.eps}")
        if self.C <= self.eps**2:
            raise ValueError(f"C must exceed eps^2 = {self.eps ** 2}, got {self.C}")


def bc_loss(theta, mu) -> float:
    """Half squared distance to the mean."""
    theta = as_vector(theta, name="theta")
    mu = as_vector(mu, dim=theta.shape[0], name="mu")
    diff = theta - mu
    return 0.5 * float(diff @ diff)


def cliff_reward(theta, spec: CliffSpec) -> float:
    theta = as_vector(theta, dim=spec.mu.shape[0], name="theta")
    diff = theta - spec.mu
    sq = float(diff @ diff)
    if sq <= spec.eps**2:
        return -sq
    return -spec.C


# ---------------------------------------------------------------------------
# discrete SGD process


@dataclass(frozen=True)
class SgdMeanProcess:
    """Scalar-rate SGD toward mu with isotropic gradient noise."""

    d: int
    eta: float
    sigma: float
    theta0: np.ndarray
    T: int
    mu: np.ndarray | None = None

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must be in (0, 1), got {self.eta}")
        if self.sigma < 0.0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        object.__setattr__(self, "theta0", as_vector(self.theta0, dim=self.d, name="theta0"))
        mu = np.zeros(self.d) if self.mu is None else self.mu
        object.__setattr__(self, "mu", as_vector(mu, dim=self.d, name="mu"))

    @property
    def b(self) -> float:
        return float(np.linalg.norm(self.theta0 - self.mu))


def simulate_sgd_mean(proc: SgdMeanProcess, ema: EmaConfig, rng: RngState):
    """One trajectory; returns (thetas, shadows) of shape (T+1, d)."""
    filt = ema.build()
    thetas = np.empty((proc.T + 1, proc.d))
    shadows = np.empty((proc.T + 1, proc.d))
    theta = proc.theta0.copy()
    thetas[0] = theta
    shadows[0] = filt.update(0, theta)
    for t in range(1, proc.T + 1):
        w = proc.sigma * rng.normal(proc.d)
        theta = theta - proc.eta * (theta - proc.mu + w)
        thetas[t] = theta
        shadows[t] = filt.update(t, theta)
    return thetas, shadows


def _sgd_mean_batch(proc: SgdMeanProcess, ema: EmaConfig, trials: int, rng: RngState,
                    checkpoints: list[int]):
    """Vectorized trials; yields (t, theta_block, shadow_block) at checkpoints.

    Mirrors EmaFilter semantics exactly: copy while t < burn_in, hold between
    periods, blend with gamma_value(t - burn_in) otherwise.
    """
    schedule = ema.schedule
    burn_in, period = ema.burn_in, ema.update_period
    theta = np.tile(proc.theta0, (trials, 1))
    shadow = theta.copy()
    marks = set(checkpoints)
    out = []
    if 0 in marks:
        out.append((0, theta.copy(), shadow.copy()))
    for t in range(1, proc.T + 1):
        w = rng.normal((trials, proc.d))
        theta = theta - proc.eta * (theta - proc.mu + proc.sigma * w)
        if t < burn_in:
            shadow = theta.copy()
        elif (t - burn_in) % period == 0:
            g = gamma_value(schedule, t - burn_in)
            shadow = (1.0 - g) * shadow + g * theta
        if t in marks:
            out.append((t, theta.copy(), shadow.copy()))
    return out


# ---------------------------------------------------------------------------
# closed forms


def closed_form_no_ema_mse(eta: float, sigma: float, b: float, t: int) -> float:
    """Exact E[(theta^t - mu)^2] per coordinate for the unfiltered iterate."""
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta must be in (0, 1), got {eta}")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    decay = (1.0 - eta) ** (2 * t)
    return sigma * sigma * eta * (1.0 - decay) / (2.0 - eta) + b * b * decay


def ema_mse_bounds(eta: float, gamma: float, sigma: float, b: float, T: int):
    """Analytic (lower, upper) for E[(shadow^T - mu)^2], fixed-rate filter.

    Valid for 0 < eta, gamma < 1/2. Three upper regimes (gamma >= 2 eta,
    intermediate, eta >= 2 gamma) and two lower regimes (gamma >= eta,
    eta >= gamma); on overlaps the tightest applicable bound is returned.
    """
    if not 0.0 < eta < 0.5:
        raise ValueError(f"eta must be in (0, 1/2), got {eta}")
    if not 0.0 < gamma < 0.5:
        raise ValueError(f"gamma must be in (0, 1/2), got {gamma}")
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    s2, b2 = sigma * sigma, b * b
    dg = (1.0 - gamma) ** (2 * T)
    de = (1.0 - eta) ** (2 * T)
    uppers = []
    if gamma >= 2.0 * eta:
        uppers.append(4.0 * s2 * eta + 4.0 * b2 * de)
    if 0.5 * gamma <= eta <= 2.0 * gamma:
        uppers.append(16.0 * s2 * eta + 32.0 * b2 * (1.0 - eta / 4.0) ** (2 * T))
    if eta >= 2.0 * gamma:
        uppers.append(4.0 * s2 * gamma + 4.0 * b2 * (gamma / eta) ** 2 * dg)
    upper = 2.0 * b2 * dg + min(uppers)
    dg1 = (1.0 - gamma) ** (2 * (T - 1))
    de1 = (1.0 - eta) ** (2 * (T - 1))
    lowers = []
    if gamma >= eta:
        lowers.append(s2 * eta + b2 * de1)
    if eta >= gamma:
        lowers.append(s2 * gamma + b2 * (gamma / eta) ** 2 * dg1)
    lower = b2 * dg + 0.25 * max(lowers)
    return lower, upper


# ---------------------------------------------------------------------------
# Monte Carlo with jackknife errors


def _block_slices(n: int, n_blocks: int):
    edges = np.linspace(0, n, n_blocks + 1).astype(int)
    return [(edges[i], edges[i + 1]) for i in range(n_blocks)]


def _jackknife_se(values: np.ndarray, n_blocks: int) -> float:
    """Delete-one-block jackknife SE of the sample mean."""
    n = values.shape[0]
    slices = _block_slices(n, n_blocks)
    total = float(values.sum())
    loo = np.array([(total - values[a:b].sum()) / (n - (b - a)) for a, b in slices])
    center = loo.mean()
    m = len(slices)
    return math.sqrt((m - 1) / m * float(np.sum((loo - center) ** 2)))


def _mean_se(values: np.ndarray, n_blocks: int):
    return float(values.mean()), _jackknife_se(values, n_blocks)


def monte_carlo_mse(proc: SgdMeanProcess, ema: EmaConfig, trials: int,
                    rng: RngState, n_blocks: int = DEFAULT_JACKKNIFE_BLOCKS):
    """Terminal squared distance to mu: (raw, raw_se, filtered, filtered_se)."""
    if trials < 100:
        raise ValueError(f"trials must be >= 100, got {trials}")
    ((_, theta, shadow),) = _sgd_mean_batch(proc, ema, trials, rng, [proc.T])
    diff = theta - proc.mu
    raw = np.einsum("ij,ij->i", diff, diff)
    diff = shadow - proc.mu
    ema_sq = np.einsum("ij,ij->i", diff, diff)
    raw_m, raw_se = _mean_se(raw, n_blocks)
    ema_m, ema_se = _mean_se(ema_sq, n_blocks)
    return raw_m, raw_se, ema_m, ema_se


@dataclass
class CliffReport:
    """Terminal Monte Carlo aggregates for raw and filtered iterates."""

    trials: int
    raw_bc: float
    raw_bc_se: float
    raw_J: float
    raw_J_se: float
    raw_p_inside: float
    raw_p_inside_se: float
    ema_bc: float
    ema_bc_se: float
    ema_J: float
    ema_J_se: float
    ema_p_inside: float
    ema_p_inside_se: float
    gap_raw: float
    gap_ema: float
    separation: float
    rows: list[dict] = field(default_factory=list)


def _cliff_stats(theta: np.ndarray, spec: CliffSpec):
    diff = theta - spec.mu
    sq = np.einsum("ij,ij->i", diff, diff)
    inside = sq <= spec.eps**2
    J = np.where(inside, -sq, -spec.C)
    return 0.5 * sq, J, inside.astype(float)


def monte_carlo_cliff(proc: SgdMeanProcess, spec: CliffSpec, ema: EmaConfig,
                      trials: int, rng: RngState, checkpoints: list[int] | None = None,
                      n_blocks: int = DEFAULT_JACKKNIFE_BLOCKS) -> CliffReport:
    """Sample averages of loss, cliff reward, and ball-hit rate with SEs."""
    if trials < 100:
        raise ValueError(f"trials must be >= 100, got {trials}")
    if spec.mu.shape[0] != proc.d:
        raise ValueError("cliff spec dimension does not match the process")
    if checkpoints is None:
        k = max(1, proc.T // 10)
        checkpoints = sorted(set(list(range(k, proc.T + 1, k)) + [proc.T]))
    snaps = _sgd_mean_batch(proc, ema, trials, rng, checkpoints)
    rows = []
    terminal = None
    for t, theta, shadow in snaps:
        raw_bc, raw_J, raw_in = _cliff_stats(theta, spec)
        ema_bc, ema_J, ema_in = _cliff_stats(shadow, spec)
        stats = {}
        for name, vals in (
            ("raw_mse", 2.0 * raw_bc), ("ema_mse", 2.0 * ema_bc),
            ("raw_J", raw_J), ("ema_J", ema_J),
            ("p_inside_raw", raw_in), ("p_inside_ema", ema_in),
        ):
            stats[name], stats["se_" + name] = _mean_se(vals, n_blocks)
        rows.append({"t": t, **stats})
        if t == proc.T:
            terminal = (raw_bc, raw_J, raw_in, ema_bc, ema_J, ema_in)
    raw_bc, raw_J, raw_in, ema_bc, ema_J, ema_in = terminal
    raw_bc_m, raw_bc_se = _mean_se(raw_bc, n_blocks)
    raw_J_m, raw_J_se = _mean_se(raw_J, n_blocks)
    raw_in_m, raw_in_se = _mean_se(raw_in, n_blocks)
    ema_bc_m, ema_bc_se = _mean_se(ema_bc, n_blocks)
    ema_J_m, ema_J_se = _mean_se(ema_J, n_blocks)
    ema_in_m, ema_in_se = _mean_se(ema_in, n_blocks)
    gap_raw = -raw_J_m
    gap_ema = -ema_J_m
    if gap_ema > 0:
        separation = gap_raw / gap_ema
    else:
        separation = math.inf if gap_raw > 0 else 1.0
    return CliffReport(
        trials=trials,
        raw_bc=raw_bc_m, raw_bc_se=raw_bc_se,
        raw_J=raw_J_m, raw_J_se=raw_J_se,
        raw_p_inside=raw_in_m, raw_p_inside_se=raw_in_se,
        ema_bc=ema_bc_m, ema_bc_se=ema_bc_se,
        ema_J=ema_J_m, ema_J_se=ema_J_se,
        ema_p_inside=ema_in_m, ema_p_inside_se=ema_in_se,
        gap_raw=gap_raw, gap_ema=gap_ema, separation=separation,
        rows=rows,
    )


@dataclass
class GaussianCliffReport:
    e_bc_exact: float
    e_bc_mc: float
    gap_mc: float
    gap_se: float
    p_inside: float
    regime: str
    threshold: float | None
    ok: bool | None
    c3_hat: float | None


def gaussian_cliff_check(offset: float, variance: float, spec: CliffSpec,
                         trials: int, rng: RngState,
                         n_blocks: int = DEFAULT_JACKKNIFE_BLOCKS) -> GaussianCliffReport:
    """Cliff penalty of a Gaussian parameter cloud vs its training loss.

    High-loss regime (E[loss] >= 10 eps^2): expects penalty >= C/2.
    Low-loss regime (E[loss] <= eps^2/50): expects penalty <= 3 E[loss].
    In between, the report carries both sides without a verdict.
    """
    if trials < 100:
        raise ValueError(f"trials must be >= 100, got {trials}")
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    d = spec.mu.shape[0]
    theta = np.tile(spec.mu, (trials, 1))
    theta[:, 0] += offset
    if variance > 0:
        theta += math.sqrt(variance) * rng.normal((trials, d))
    bc, J, inside = _cliff_stats(theta, spec)
    e_bc_exact = 0.5 * (offset * offset + d * variance)
    e_bc_mc = float(bc.mean())
    gap, gap_se = _mean_se(-J, n_blocks)
    p_inside = float(inside.mean())
    p_out = 1.0 - p_inside
    c3_hat = None
    if 0.0 < p_out < 1.0 and e_bc_exact > 0:
        c3_hat = -math.log(p_out) * 2.0 * e_bc_exact / spec.eps**2
    eps2 = spec.eps**2
    if e_bc_exact >= 10.0 * eps2:
        regime, threshold = "high_loss", spec.C / 2.0
        ok = gap >= threshold
    elif e_bc_exact <= eps2 / 50.0:
        regime, threshold = "low_loss", 3.0 * e_bc_exact
        ok = gap <= threshold
    else:
        regime, threshold, ok = "intermediate", None, None
    return GaussianCliffReport(
        e_bc_exact=e_bc_exact, e_bc_mc=e_bc_mc, gap_mc=gap, gap_se=gap_se,
        p_inside=p_inside, regime=regime, threshold=threshold, ok=ok, c3_hat=c3_hat,
    )


# ---------------------------------------------------------------------------
# mean-reverting continuous-time limit


@dataclass(frozen=True)
class OuSpec:
    """Univariate mean-reverting diffusion with unit diffusion scale."""

    a: float
    theta0: float
    gamma: float
    t_end: float
    dt: float
    mu: float = 0.0

    def __post_init__(self):
        if self.a <= 0.0:
            raise ValueError(f"drift rate a must be > 0, got {self.a}")
        if self.gamma <= 0.0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.t_end <= 0.0 or self.dt <= 0.0:
            raise ValueError("t_end and dt must be > 0")
        # mean formula has a pole at gamma = a, the variance bound at gamma = 2a
        for pole in (self.a, 2.0 * self.a):
            if abs(self.gamma - pole) / self.a < 1e-6:
                raise ValueError(
                    f"gamma = {self.gamma} too close to the pole at {pole}"
                )


def ou_mean_raw(spec: OuSpec, t: float) -> float:
    return spec.mu + math.exp(-spec.a * t) * (spec.theta0 - spec.mu)


def ou_var_raw(spec: OuSpec, t: float) -> float:
    return (1.0 - math.exp(-2.0 * spec.a * t)) / (2.0 * spec.a)


def ou_ema_mean(spec: OuSpec, t: float) -> float:
    # solves d m/dt = gamma (mean_raw(t) - m) from m(0) = theta0
    a, g = spec.a, spec.gamma
    drift = (math.exp(-t * a) - math.exp(-g * t)) * (g / (g - a)) * (spec.theta0 - spec.mu)
    return spec.mu + math.exp(-g * t) * (spec.theta0 - spec.mu) + drift


def ou_ema_var_bound(spec: OuSpec, t: float) -> float:
    """Upper bound on var(shadow_t) for a deterministic start."""
    a, g = spec.a, spec.gamma
    return (1.0 - math.exp(-g * t)) / (2.0 * a) - g * (
        math.exp(-2.0 * a * t) - math.exp(-g * t)
    ) / (2.0 * a * (g - 2.0 * a))


@dataclass
class OuReport:
    times: np.ndarray
    mean_raw_mc: np.ndarray
    mean_raw_se: np.ndarray
    var_raw_mc: np.ndarray
    var_raw_se: np.ndarray
    mean_ema_mc: np.ndarray
    mean_ema_se: np.ndarray
    var_ema_mc: np.ndarray
    var_ema_se: np.ndarray
    mean_raw_exact: np.ndarray
    mean_ema_exact: np.ndarray
    var_raw_exact: np.ndarray
    var_ema_bound: np.ndarray
    terminal_raw: np.ndarray | None = None
    terminal_ema: np.ndarray | None = None


def _var_se(values: np.ndarray, n_blocks: int):
    """Jackknife SE of the (uncentered-corrected) sample variance."""
    n = values.shape[0]
    slices = _block_slices(n, n_blocks)
    s1 = float(values.sum())
    s2 = float((values * values).sum())
    loo = []
    for a, b in slices:
        m = n - (b - a)
        ls1 = s1 - float(values[a:b].sum())
        ls2 = s2 - float((values[a:b] * values[a:b]).sum())
        loo.append(ls2 / m - (ls1 / m) ** 2)
    loo = np.asarray(loo)
    center = loo.mean()
    k = len(slices)
    return float(values.var()), math.sqrt((k - 1) / k * float(np.sum((loo - center) ** 2)))


def _moment_rows(times, raws, emas, n_blocks):
    cols = {"mean_raw": [], "mean_raw_se": [], "var_raw": [], "var_raw_se": [],
            "mean_ema": [], "mean_ema_se": [], "var_ema": [], "var_ema_se": []}
    for raw, ema in zip(raws, emas):
        m, mse = _mean_se(raw, n_blocks)
        v, vse = _var_se(raw, n_blocks)
        cols["mean_raw"].append(m)
        cols["mean_raw_se"].append(mse)
        cols["var_raw"].append(v)
        cols["var_raw_se"].append(vse)
        m, mse = _mean_se(ema, n_blocks)
        v, vse = _var_se(ema, n_blocks)
        cols["mean_ema"].append(m)
        cols["mean_ema_se"].append(mse)
        cols["var_ema"].append(v)
        cols["var_ema_se"].append(vse)
    return {k: np.asarray(v) for k, v in cols.items()}


def _checkpoint_steps(n_steps: int, n_points: int) -> list[int]:
    pts = np.unique(np.linspace(1, n_steps, min(n_points, n_steps)).astype(int))
    return [int(p) for p in pts]


def simulate_ou_ema(spec: OuSpec, trials: int, rng: RngState,
                    n_checkpoints: int = 26, keep_terminal: bool = False,
                    n_blocks: int = DEFAULT_JACKKNIFE_BLOCKS) -> OuReport:
    """Explicit-Euler integration of the diffusion coupled with the filter."""
    if trials < 100:
        raise ValueError(f"trials must be >= 100, got {trials}")
    max_dt = min(1.0 / spec.a, 1.0 / spec.gamma) / 50.0
    if spec.dt > max_dt * (1.0 + 1e-12):
        raise ValidationError(
            f"step size too coarse: dt = {spec.dt} > min(1/a, 1/gamma)/50 = {max_dt}"
        )
    n_steps = int(round(spec.t_end / spec.dt))
    marks = set(_checkpoint_steps(n_steps, n_checkpoints))
    theta = np.full(trials, float(spec.theta0))
    shadow = theta.copy()
    sqdt = math.sqrt(spec.dt)
    times, raws, emas = [], [], []
    for k in range(1, n_steps + 1):
        xi = rng.normal(trials)
        theta_new = theta - spec.a * (theta - spec.mu) * spec.dt + sqdt * xi
        shadow = shadow + spec.gamma * (theta - shadow) * spec.dt
        theta = theta_new
        if k in marks:
            times.append(k * spec.dt)
            raws.append(theta.copy())
            emas.append(shadow.copy())
    times = np.asarray(times)
    cols = _moment_rows(times, raws, emas, n_blocks)
    return OuReport(
        times=times,
        mean_raw_mc=cols["mean_raw"], mean_raw_se=cols["mean_raw_se"],
        var_raw_mc=cols["var_raw"], var_raw_se=cols["var_raw_se"],
        mean_ema_mc=cols["mean_ema"], mean_ema_se=cols["mean_ema_se"],
        var_ema_mc=cols["var_ema"], var_ema_se=cols["var_ema_se"],
        mean_raw_exact=np.asarray([ou_mean_raw(spec, t) for t in times]),
        mean_ema_exact=np.asarray([ou_ema_mean(spec, t) for t in times]),
        var_raw_exact=np.asarray([ou_var_raw(spec, t) for t in times]),
        var_ema_bound=np.asarray([ou_ema_var_bound(spec, t) for t in times]),
        terminal_raw=raws[-1] if keep_terminal else None,
        terminal_ema=emas[-1] if keep_terminal else None,
    )


# ---------------------------------------------------------------------------
# driftless limit with a decaying rate schedule


DRIFTLESS_SCHEDULES = ("constant", "inverse_sqrt", "inverse", "linear_decay")


@dataclass(frozen=True)
class DriftlessSpec:
    """Time-changed Brownian motion theta_t = int_0^t eta_s dB_s."""

    schedule: str
    eta: float
    gamma: float
    t_end: float
    dt: float

    def __post_init__(self):
        if self.schedule not in DRIFTLESS_SCHEDULES:
            raise ValueError(
                f"schedule must be one of {DRIFTLESS_SCHEDULES}, got {self.schedule!r}"
            )
        if self.eta <= 0.0 or self.gamma <= 0.0:
            raise ValueError("eta and gamma must be > 0")
        if self.t_end <= 0.0 or self.dt <= 0.0:
            raise ValueError("t_end and dt must be > 0")


def driftless_rate(spec: DriftlessSpec, s) -> np.ndarray:
    """Instantaneous rate eta_s; linear decay is linear in the variance."""
    s = np.asarray(s, dtype=float)
    if spec.schedule == "constant":
        return np.full_like(s, spec.eta)
    if spec.schedule == "inverse_sqrt":
        return spec.eta / np.sqrt(1.0 + s)
    if spec.schedule == "inverse":
        return spec.eta / (1.0 + s)
    return spec.eta * np.sqrt(np.clip(1.0 - s / spec.t_end, 0.0, None))


def driftless_var(spec: DriftlessSpec, t: float) -> float:
    """H(t) = int_0^t eta_s^2 ds, the exact variance of theta_t."""
    e2 = spec.eta**2
    if spec.schedule == "constant":
        return e2 * t
    if spec.schedule == "inverse_sqrt":
        return e2 * math.log(1.0 + t)
    if spec.schedule == "inverse":
        return e2 * t / (1.0 + t)
    if t > spec.t_end * (1.0 + 1e-12):
        raise ValueError(f"linear decay is defined up to t_end = {spec.t_end}")
    return e2 * (t - t * t / (2.0 * spec.t_end))


def driftless_ema_var_bound(spec: DriftlessSpec, t: float) -> float:
    """Closed-form upper bound on var(shadow_t) for each schedule."""
    g, e2 = spec.gamma, spec.eta**2
    w = 1.0 - math.exp(-g * t)  # total filter weight on the path
    i1 = t - w / g  # int_0^t g e^{g(s-t)} s ds
    if spec.schedule == "constant":
        return e2 * i1
    if spec.schedule == "inverse_sqrt":
        # concavity of log moves the weighted average inside the log
        return e2 * w * math.log(1.0 + i1 / w)
    if spec.schedule == "inverse":
        # int g e^{g(s-t)} / (1+s) ds via the exponential integral
        tail = g * math.exp(-g * t) * math.exp(-g) * (expi(g * (1.0 + t)) - expi(g))
        return e2 * (w - tail)
    if t > spec.t_end * (1.0 + 1e-12):
        raise ValueError(f"linear decay is defined up to t_end = {spec.t_end}")
    i2 = t * t - (2.0 / g) * i1  # int_0^t g e^{g(s-t)} s^2 ds
    return e2 * (i1 - i2 / (2.0 * spec.t_end))


@dataclass
class DriftlessReport:
    times: np.ndarray
    var_raw_mc: np.ndarray
    var_raw_se: np.ndarray
    var_ema_mc: np.ndarray
    var_ema_se: np.ndarray
    var_raw_exact: np.ndarray
    var_ema_bound: np.ndarray


def simulate_driftless(spec: DriftlessSpec, trials: int, rng: RngState,
                       n_checkpoints: int = 26,
                       n_blocks: int = DEFAULT_JACKKNIFE_BLOCKS) -> DriftlessReport:
    if trials < 100:
        raise ValueError(f"trials must be >= 100, got {trials}")
    if spec.dt > (1.0 / spec.gamma) / 50.0 * (1.0 + 1e-12):
        raise ValidationError(
            f"step size too coarse: dt = {spec.dt} > (1/gamma)/50"
        )
    n_steps = int(round(spec.t_end / spec.dt))
    marks = set(_checkpoint_steps(n_steps, n_checkpoints))
    theta = np.zeros(trials)
    shadow = np.zeros(trials)
    sqdt = math.sqrt(spec.dt)
    times, raws, emas = [], [], []
    for k in range(1, n_steps + 1):
        s = (k - 1) * spec.dt
        rate = float(driftless_rate(spec, s))
        xi = rng.normal(trials)
        theta_new = theta + rate * sqdt * xi
        shadow = shadow + spec.gamma * (theta - shadow) * spec.dt
        theta = theta_new
        if k in marks:
            times.append(k * spec.dt)
            raws.append(theta.copy())
            emas.append(shadow.copy())
    times = np.asarray(times)
    var_raw, var_raw_se, var_ema, var_ema_se = [], [], [], []
    for raw, ema in zip(raws, emas):
        v, se = _var_se(raw, n_blocks)
        var_raw.append(v)
        var_raw_se.append(se)
        v, se = _var_se(ema, n_blocks)
        var_ema.append(v)
        var_ema_se.append(se)
    return DriftlessReport(
        times=times,
        var_raw_mc=np.asarray(var_raw), var_raw_se=np.asarray(var_raw_se),
        var_ema_mc=np.asarray(var_ema), var_ema_se=np.asarray(var_ema_se),
        var_raw_exact=np.asarray([driftless_var(spec, t) for t in times]),
        var_ema_bound=np.asarray([driftless_ema_var_bound(spec, t) for t in times]),
    )

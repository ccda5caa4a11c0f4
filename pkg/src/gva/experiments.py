"""End-to-end experiment runners behind the command-line interface.

Each runner takes a parsed ExperimentConfig, derives all randomness from its
seed through named split streams, produces deterministic file contents (CSV
tables, a summary JSON, SVG plots), and records self-checks comparing Monte
Carlo estimates against the analytic formulas and bounds the experiment is
meant to verify. Wall-clock timings are returned in memory only, never
written into the bundle, so identical configs yield identical bytes.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import behavior_cloning as bc
from . import linear_control as lc
from . import mean_cliff as mcliff
from . import metrics, optim, plots
from .bundle import ResultBundle, csv_text, json_text, write_bundle
from .config import ExperimentConfig, serialize_config
from .errors import ConfigError
from .numerics import RngState, split
from .stabilizers import EmaConfig, filter_checkpoint_stream

OUT_ROOT_ENV = "GVA_OUT_ROOT"


@dataclass
class CheckRecord:
    name: str
    lhs: float
    op: str
    rhs: float
    passed: bool

    def text(self) -> str:
        status = "ok" if self.passed else "FAILED"
        return f"[{status}] {self.name}: {self.lhs:.10g} {self.op} {self.rhs:.10g}"


def _check(checks: list, name: str, lhs: float, op: str, rhs: float) -> bool:
    ops = {
        "<=": lambda a, b: a <= b,
        ">=": lambda a, b: a >= b,
        "<": lambda a, b: a < b,
        ">": lambda a, b: a > b,
    }
    passed = bool(ops[op](lhs, rhs))
    checks.append(CheckRecord(name=name, lhs=float(lhs), op=op, rhs=float(rhs),
                              passed=passed))
    return passed


@dataclass
class RunResult:
    kind: str
    config: ExperimentConfig
    files: dict
    summary: dict
    checks: list[CheckRecord] = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def failures(self) -> list[CheckRecord]:
        return [c for c in self.checks if not c.passed]


def _finish(config: ExperimentConfig, files: dict, summary: dict,
            checks: list[CheckRecord], timings: dict) -> RunResult:
    summary = dict(summary)
    summary["kind"] = config.kind
    summary["seed"] = config.seed
    summary["checks"] = [dataclasses.asdict(c) for c in checks]
    files = dict(files)
    files["config.cfg"] = serialize_config(config)
    files["summary.json"] = json_text(summary)
    return RunResult(kind=config.kind, config=config, files=files,
                     summary=summary, checks=checks, timings=timings)


# ---------------------------------------------------------------------------
# theory verifications


def _dt_ema_horizon(gamma: float) -> int:
    """Smallest T with (1 - gamma)^(2T) <= gamma."""
    T = max(1, math.ceil(math.log(gamma) / (2.0 * math.log1p(-gamma))))
    if (1.0 - gamma) ** (2 * T) > gamma:
        raise ConfigError(f"no adequate horizon for gamma = {gamma}")
    return T


def run_verify_dt_ema(config: ExperimentConfig) -> RunResult:
    p = config.params
    checks: list[CheckRecord] = []
    rng = RngState(config.seed)
    sigma, b, trials = p["sigma"], p["b"], p["trials"]
    raw_etas = [0.05, 0.1, 0.3]
    raw_cells = [(eta, bb, T) for eta in raw_etas for bb in (0.0, 1.0)
                 for T in (50, 500)]
    streams = split(rng, len(raw_cells) + len(p["etas"]) * len(p["gammas"]))
    t0 = time.monotonic()
    raw_rows = []
    for i, (eta, bb, T) in enumerate(raw_cells):
        proc = mcliff.SgdMeanProcess(d=1, eta=eta, sigma=sigma,
                                     theta0=np.array([bb]), T=T)
        mse, se, _, _ = mcliff.monte_carlo_mse(proc, EmaConfig(gamma=1.0),
                                               trials, streams[i])
        closed = mcliff.closed_form_no_ema_mse(eta, sigma, bb, T)
        _check(checks, f"raw mse matches closed form (eta={eta}, b={bb}, T={T})",
               abs(mse - closed), "<=", 3.0 * se)
        raw_rows.append((eta, bb, T, mse, closed, se))
    t_raw = time.monotonic() - t0
    t0 = time.monotonic()
    bound_rows = []
    k = len(raw_cells)
    for eta in p["etas"]:
        for gamma in p["gammas"]:
            T = _dt_ema_horizon(gamma)
            proc = mcliff.SgdMeanProcess(d=1, eta=eta, sigma=sigma,
                                         theta0=np.array([b]), T=T)
            raw, raw_se, ema, ema_se = mcliff.monte_carlo_mse(
                proc, EmaConfig(gamma=gamma), trials, streams[k])
            k += 1
            lb, ub = mcliff.ema_mse_bounds(eta, gamma, sigma, b, T)
            closed = mcliff.closed_form_no_ema_mse(eta, sigma, b, T)
            tag = f"(eta={eta}, gamma={gamma}, T={T})"
            _check(checks, f"filtered mse above lower bound {tag}", lb, "<=", ema)
            _check(checks, f"filtered mse below upper bound {tag}", ema, "<=", ub)
            _check(checks, f"raw mse matches closed form {tag}",
                   abs(raw - closed), "<=", 3.0 * raw_se)
            bound_rows.append((eta, gamma, raw, closed, ema, lb, ub, ema_se))
    t_bounds = time.monotonic() - t0
    mse_cols = ["eta", "gamma", "mc_mse_raw", "closed_raw", "mc_mse_ema",
                "lb_ema", "ub_ema", "se"]
    files = {
        "mse.csv": csv_text(mse_cols, bound_rows),
        "raw_grid.csv": csv_text(
            ["eta", "b", "T", "mc_mse_raw", "closed_raw", "se"], raw_rows),
    }
    header, rows = mse_cols, [[str(c) for c in r] for r in bound_rows]
    files.update(plots.render_csv(header, rows, "mse-bounds"))
    summary = {
        "raw_grid_cells": len(raw_rows),
        "bound_grid_cells": len(bound_rows),
        "trials": trials,
    }
    timings = {"raw_grid_s": t_raw, "bounds_grid_s": t_bounds,
               "total_s": t_raw + t_bounds}
    return _finish(config, files, summary, checks, timings)


def run_verify_cliff(config: ExperimentConfig) -> RunResult:
    p = config.params
    checks: list[CheckRecord] = []
    rng = RngState(config.seed)
    t0 = time.monotonic()
    proc = mcliff.SgdMeanProcess(d=1, eta=p["eta"], sigma=p["sigma"],
                                 theta0=np.array([p["theta0"]]), T=p["T"])
    spec = mcliff.CliffSpec(mu=np.zeros(1), eps=p["eps"], C=p["C"])
    report = mcliff.monte_carlo_cliff(proc, spec, EmaConfig(gamma=p["gamma"]),
                                      p["trials"], rng)
    elapsed = time.monotonic() - t0
    _check(checks, "raw reward gap at least C/2",
           report.gap_raw, ">=", p["C"] / 2.0)
    _check(checks, "filtered reward gap at most 1", report.gap_ema, "<=", 1.0)
    _check(checks, "separation factor at least 20", report.separation, ">=", 20.0)
    _check(checks, "raw ball-hit rate above 0.1*gamma/eta",
           report.raw_p_inside, ">=", 0.1 * p["gamma"] / p["eta"])
    _check(checks, "raw ball-hit rate below 0.9", report.raw_p_inside, "<=", 0.9)
    cols = ["t", "raw_mse", "se_raw_mse", "ema_mse", "se_ema_mse",
            "raw_J", "se_raw_J", "ema_J", "se_ema_J",
            "p_inside_raw", "se_p_inside_raw", "p_inside_ema", "se_p_inside_ema"]
    files = {"cliff.csv": csv_text(cols, report.rows)}
    header = cols
    rows = [[str(r[c]) for c in cols] for r in report.rows]
    files.update(plots.render_csv(header, rows, "cliff-curves"))
    summary = {
        "gap_raw": report.gap_raw, "gap_raw_se": report.raw_J_se,
        "gap_ema": report.gap_ema, "gap_ema_se": report.ema_J_se,
        "separation": report.separation,
        "p_inside_raw": report.raw_p_inside,
        "p_inside_raw_se": report.raw_p_inside_se,
        "p_inside_ema": report.ema_p_inside,
        "bc_loss_raw": report.raw_bc, "bc_loss_ema": report.ema_bc,
        "trials": report.trials,
    }
    return _finish(config, files, summary, checks, {"total_s": elapsed})


def run_verify_ou(config: ExperimentConfig) -> RunResult:
    p = config.params
    checks: list[CheckRecord] = []
    rng = RngState(config.seed)
    main_rng, grid_rng = split(rng, 2)
    spec = mcliff.OuSpec(a=p["a"], theta0=p["theta0"], gamma=p["gamma"],
                         t_end=p["t_end"], dt=p["dt"], mu=p["mu"])
    t0 = time.monotonic()
    rep = mcliff.simulate_ou_ema(spec, p["trials"], main_rng)
    elapsed = time.monotonic() - t0
    i = -1  # terminal checkpoint
    _check(checks, "filtered mean matches the drift formula",
           abs(rep.mean_ema_mc[i] - rep.mean_ema_exact[i]), "<=",
           3.0 * rep.mean_ema_se[i])
    _check(checks, "iterate variance matches (1-e^{-2at})/(2a)",
           abs(rep.var_raw_mc[i] - rep.var_raw_exact[i]), "<=",
           3.0 * rep.var_raw_se[i])
    _check(checks, "filtered variance within the analytic bound",
           rep.var_ema_mc[i], "<=", rep.var_ema_bound[i] + 3.0 * rep.var_ema_se[i])
    cols = ["time", "mean_raw_mc", "se_mean_raw", "mean_raw_exact",
            "var_raw_mc", "se_var_raw", "var_raw_exact",
            "mean_ema_mc", "se_mean_ema", "mean_ema_exact",
            "var_ema_mc", "se_var_ema", "var_ema_bound"]
    rows = list(zip(rep.times, rep.mean_raw_mc, rep.mean_raw_se,
                    rep.mean_raw_exact, rep.var_raw_mc, rep.var_raw_se,
                    rep.var_raw_exact, rep.mean_ema_mc, rep.mean_ema_se,
                    rep.mean_ema_exact, rep.var_ema_mc, rep.var_ema_se,
                    rep.var_ema_bound))
    files = {"ou.csv": csv_text(cols, rows)}
    str_rows = [[str(c) for c in r] for r in rows]
    files.update(plots.render_csv(cols, str_rows, "variance-curves"))
    grid_rows = []
    for g, stream in zip(p["gamma_grid"], split(grid_rng, max(1, len(p["gamma_grid"])))):
        gspec = mcliff.OuSpec(a=p["a"], theta0=p["theta0"], gamma=float(g),
                              t_end=p["t_end"], dt=p["dt"], mu=p["mu"])
        grep = mcliff.simulate_ou_ema(gspec, p["grid_trials"], stream,
                                      keep_terminal=True)
        eps = p["cliff_eps"]
        inside_ema = float(np.mean(np.abs(grep.terminal_ema - p["mu"]) <= eps))
        inside_raw = float(np.mean(np.abs(grep.terminal_raw - p["mu"]) <= eps))
        grid_rows.append((float(g), grep.var_ema_mc[-1], grep.var_ema_bound[-1],
                          grep.var_raw_mc[-1], inside_ema, inside_raw))
    if grid_rows:
        files["gamma_grid.csv"] = csv_text(
            ["gamma", "var_ema_mc", "var_ema_bound", "var_raw_mc",
             "p_inside_ema", "p_inside_raw"], grid_rows)
    summary = {
        "terminal_time": float(rep.times[-1]),
        "mean_ema_mc": float(rep.mean_ema_mc[-1]),
        "mean_ema_exact": float(rep.mean_ema_exact[-1]),
        "var_raw_mc": float(rep.var_raw_mc[-1]),
        "var_raw_exact": float(rep.var_raw_exact[-1]),
        "var_ema_mc": float(rep.var_ema_mc[-1]),
        "var_ema_bound": float(rep.var_ema_bound[-1]),
        "trials": p["trials"],
        "gamma_grid": [list(r) for r in grid_rows],
    }
    return _finish(config, files, summary, checks, {"total_s": elapsed})


DRIFTLESS_VERIFIED = ("inverse_sqrt", "inverse", "linear_decay")


def run_verify_driftless(config: ExperimentConfig) -> RunResult:
    p = config.params
    checks: list[CheckRecord] = []
    rng = RngState(config.seed)
    rows = []
    timings = {}
    t_all = time.monotonic()
    for schedule, stream in zip(DRIFTLESS_VERIFIED,
                                split(rng, len(DRIFTLESS_VERIFIED))):
        spec = mcliff.DriftlessSpec(schedule=schedule, eta=p["eta"],
                                    gamma=p["gamma"], t_end=p["t_end"],
                                    dt=p["dt"])
        t0 = time.monotonic()
        rep = mcliff.simulate_driftless(spec, p["trials"], stream)
        timings[schedule + "_s"] = time.monotonic() - t0
        i = -1
        _check(checks, f"{schedule}: iterate variance matches the schedule law",
               abs(rep.var_raw_mc[i] - rep.var_raw_exact[i]), "<=",
               3.0 * rep.var_raw_se[i])
        _check(checks, f"{schedule}: filtered variance within the bound",
               rep.var_ema_mc[i], "<=",
               rep.var_ema_bound[i] + 3.0 * rep.var_ema_se[i])
        for j in range(len(rep.times)):
            rows.append((schedule, rep.times[j], rep.var_raw_mc[j],
                         rep.var_raw_se[j], rep.var_raw_exact[j],
                         rep.var_ema_mc[j], rep.var_ema_se[j],
                         rep.var_ema_bound[j]))
    timings["total_s"] = time.monotonic() - t_all
    cols = ["schedule", "time", "var_raw_mc", "se_var_raw", "var_raw_exact",
            "var_ema_mc", "se_var_ema", "var_ema_bound"]
    files = {"driftless.csv": csv_text(cols, rows)}
    for schedule in DRIFTLESS_VERIFIED:
        sub = [[str(c) for c in r] for r in rows if r[0] == schedule]
        rendered = plots.render_csv(cols, sub, "variance-curves")
        files[f"variance-{schedule}.svg"] = rendered["variance-curves.svg"]
    summary = {
        "schedules": list(DRIFTLESS_VERIFIED),
        "trials": p["trials"],
        "terminal": {
            schedule: {
                "var_raw_mc": next(r[2] for r in reversed(rows) if r[0] == schedule),
                "var_ema_mc": next(r[5] for r in reversed(rows) if r[0] == schedule),
                "var_ema_bound": next(r[7] for r in reversed(rows) if r[0] == schedule),
            }
            for schedule in DRIFTLESS_VERIFIED
        },
    }
    return _finish(config, files, summary, checks, timings)


def _amplification_closed(d: int, eps: float, delta: float, H: int) -> float:
    terms = [(1.0 + delta) ** (2 * (h - 1)) - (1.0 - eps) ** (2 * (h - 1))
             for h in range(1, H + 1)]
    return d * math.fsum(terms)


def run_verify_amplification(config: ExperimentConfig) -> RunResult:
    p = config.params
    checks: list[CheckRecord] = []
    t0 = time.monotonic()
    rows = lc.error_amplification_probe(p["d"], p["eps"], p["c"],
                                        p["eps_primes"], p["H"])
    elapsed = time.monotonic() - t0
    table = []
    by_delta = {}
    for row in rows:
        closed = _amplification_closed(p["d"], p["eps"], row.delta, p["H"])
        rel = abs(row.gap - closed) / abs(closed) if closed != 0.0 else abs(row.gap)
        _check(checks, f"gap matches geometric sum (delta={row.delta:.6g})",
               rel, "<=", 1e-10)
        if row.delta < 0.0:
            _check(checks, f"contracting perturbation cannot hurt "
                   f"(delta={row.delta:.6g})", row.gap, "<=", 0.0)
        table.append((row.eps_prime, row.delta, row.gap, closed, rel))
        by_delta[round(row.delta, 12)] = row.gap
    positive = sorted((d, g) for d, g in by_delta.items() if d > 0)
    for (d1, g1), (d2, g2) in zip(positive, positive[1:]):
        _check(checks, f"gap monotone in delta ({d1:.6g} -> {d2:.6g})",
               g1, "<=", g2)
    lo, hi = round(0.01, 12), round(0.02, 12)
    if lo in by_delta and hi in by_delta:
        growth = math.exp(0.005 * p["H"] * 0.9)
        _check(checks, "gap ratio shows exponential growth in delta*H",
               by_delta[hi] / by_delta[lo], ">=", growth)
    cols = ["eps_prime", "delta", "gap", "closed_gap", "rel_err"]
    files = {"amplification.csv": csv_text(cols, table)}
    summary = {
        "H": p["H"], "d": p["d"], "eps": p["eps"], "c": p["c"],
        "rows": [list(r) for r in table],
        "gap_ratio": (by_delta[hi] / by_delta[lo]
                      if lo in by_delta and hi in by_delta else None),
    }
    return _finish(config, files, summary, checks, {"total_s": elapsed})


# ---------------------------------------------------------------------------
# narrative studies


def run_mean_cliff(config: ExperimentConfig) -> RunResult:
    p = config.params
    rng = RngState(config.seed)
    t0 = time.monotonic()
    proc = mcliff.SgdMeanProcess(d=p["d"], eta=p["eta"], sigma=p["sigma"],
                                 theta0=np.full(p["d"], p["theta0"]), T=p["T"])
    spec = mcliff.CliffSpec(mu=np.zeros(p["d"]), eps=p["eps"], C=p["C"])
    ema = EmaConfig(gamma=p["gamma"], burn_in=p["burn_in"],
                    update_period=p["update_period"])
    step = max(1, p["T"] // max(1, p["n_checkpoints"]))
    marks = sorted(set(list(range(step, p["T"] + 1, step)) + [p["T"]]))
    report = mcliff.monte_carlo_cliff(proc, spec, ema, p["trials"], rng,
                                      checkpoints=marks)
    elapsed = time.monotonic() - t0
    cols = ["t", "raw_mse", "se_raw_mse", "ema_mse", "se_ema_mse",
            "raw_J", "se_raw_J", "ema_J", "se_ema_J",
            "p_inside_raw", "se_p_inside_raw", "p_inside_ema", "se_p_inside_ema"]
    files = {"cliff.csv": csv_text(cols, report.rows)}
    str_rows = [[str(r[c]) for c in cols] for r in report.rows]
    files.update(plots.render_csv(cols, str_rows, "cliff-curves"))
    summary = {
        "gap_raw": report.gap_raw, "gap_ema": report.gap_ema,
        "separation": report.separation,
        "p_inside_raw": report.raw_p_inside, "p_inside_ema": report.ema_p_inside,
        "bc_loss_raw": report.raw_bc, "bc_loss_ema": report.ema_bc,
        "trials": report.trials,
    }
    return _finish(config, files, summary, [], {"total_s": elapsed})


def run_bench_averaging(config: ExperimentConfig) -> RunResult:
    p = config.params
    rng = RngState(config.seed)
    t0 = time.monotonic()
    proc = mcliff.SgdMeanProcess(d=1, eta=p["eta"], sigma=p["sigma"],
                                 theta0=np.ones(1), T=p["T"])
    from .stabilizers import AverageFilter, EmaFilter

    def fresh_filters():
        return {
            "uniform": AverageFilter("uniform"),
            "lacoste_julien": AverageFilter("lacoste_julien"),
            "suffix": AverageFilter("suffix", alpha=p["suffix_alpha"]),
            "ema": EmaFilter(p["gamma"]),
        }

    schemes = list(fresh_filters())
    terminal = {name: [] for name in ["raw"] + schemes}
    curve_rows = []
    for trial, stream in enumerate(split(rng, p["trials"])):
        thetas, _ = mcliff.simulate_sgd_mean(proc, EmaConfig(gamma=1.0), stream)
        filters = fresh_filters()
        values = {}
        for t in range(proc.T + 1):
            x = thetas[t]
            values["raw"] = x
            if t >= 1:
                for name in ("uniform", "lacoste_julien", "suffix"):
                    values[name] = filters[name].update(t, x)
            values["ema"] = filters["ema"].update(t, x)
            if trial == 0 and t >= 1:
                curve_rows.append((t, float(values["raw"][0]),
                                   float(values["uniform"][0]),
                                   float(values["lacoste_julien"][0]),
                                   float(values["suffix"][0]),
                                   float(values["ema"][0])))
        for name in terminal:
            terminal[name].append(float(values[name][0] ** 2))
    elapsed = time.monotonic() - t0
    bench_rows = []
    for name in terminal:
        vals = np.asarray(terminal[name])
        se = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        bench_rows.append((name, float(vals.mean()), se))
    files = {
        "bench.csv": csv_text(["scheme", "terminal_mse", "se"], bench_rows),
        "curve.csv": csv_text(
            ["t", "raw", "uniform", "lacoste_julien", "suffix", "ema"],
            curve_rows),
    }
    str_rows = [[str(c) for c in r] for r in curve_rows]
    files.update(plots.render_csv(
        ["t", "raw", "uniform", "lacoste_julien", "suffix", "ema"],
        str_rows, "series"))
    summary = {"terminal_mse": {name: float(np.mean(terminal[name]))
                                for name in terminal},
               "trials": p["trials"], "T": p["T"]}
    return _finish(config, files, summary, [], {"total_s": elapsed})


# ---------------------------------------------------------------------------
# imitation studies


def _summary_dict(s: metrics.GvaSummary) -> dict:
    return dataclasses.asdict(s)


def _imitation_outputs(config: ExperimentConfig, seed_results: list,
                       extra_summary: dict, elapsed: float) -> RunResult:
    """Shared table/summary assembly for the imitation experiments.

    seed_results holds per-training-seed dicts with keys: records (list of
    BcCheckpoint), ema_evals (list of EvalResult aligned with records),
    ema_val_losses (list of float), raw_summary, ema_summary.
    """
    curve_rows = []
    mean_rows = []
    for s, res in enumerate(seed_results):
        for rec, ev_ema, val_ema in zip(res["records"], res["ema_evals"],
                                        res["ema_val_losses"]):
            ev_raw = rec.eval_raw
            for k in range(len(ev_raw.rewards)):
                curve_rows.append((s, rec.step, k,
                                   float(ev_raw.rewards[k]),
                                   float(ev_ema.rewards[k])))
            mean_rows.append((s, rec.step, ev_raw.mean_reward,
                              ev_ema.mean_reward, rec.val_loss, val_ema,
                              rec.train_loss))
    raw_summaries = [res["raw_summary"] for res in seed_results]
    ema_summaries = [res["ema_summary"] for res in seed_results]
    median_raw = metrics.median_over_seeds(raw_summaries)
    median_ema = metrics.median_over_seeds(ema_summaries)
    comp = metrics.compare(median_raw, median_ema)
    files = {
        "curves.csv": csv_text(
            ["train_seed", "step", "eval_seed", "reward_raw", "reward_ema"],
            curve_rows),
        "means.csv": csv_text(
            ["train_seed", "step", "mean_raw", "mean_ema",
             "val_loss_raw", "val_loss_ema", "train_loss"], mean_rows),
        "summary_table.txt": metrics.summary_table(
            {"raw": median_raw, "ema": median_ema}),
    }
    header = ["train_seed", "step", "eval_seed", "reward_raw", "reward_ema"]
    str_rows = [[str(c) for c in r] for r in curve_rows]
    files.update(plots.render_csv(header, str_rows, "training-curves"))
    summary = {
        "per_seed_raw": [_summary_dict(s) for s in raw_summaries],
        "per_seed_ema": [_summary_dict(s) for s in ema_summaries],
        "median_raw": _summary_dict(median_raw),
        "median_ema": _summary_dict(median_ema),
        "oscillation_ratio": comp.oscillation_ratio,
        "deltas": comp.deltas,
        **extra_summary,
    }
    return _finish(config, files, summary, [], {"total_s": elapsed})


def run_lqr_marginal(config: ExperimentConfig) -> RunResult:
    p = config.params
    rng = RngState(config.seed)
    sys_rng, seeds_root = split(rng, 2)
    t0 = time.monotonic()
    system = lc.make_marginally_stable(sys_rng, d=2, alpha=p["alpha"],
                                       H=p["H"], sigma_w=p["sigma_w"])
    _, k_star = lc.dare_solve(system.A, system.B, system.Q, system.R)
    expert = lc.LinearPolicy(k_star)
    hidden = [] if p["imitator"] == "linear" else [p["hidden"]]
    lr = optim.LrSchedule.linear_warmup_then(
        optim.LrSchedule.power_decay(p["lr"], 1.0), p["warmup"])
    train_cfg = bc.TrainConfig(
        epochs=p["epochs"], batch_size=p["batch"], optimizer="adamw",
        lr=lr, weight_decay=p["weight_decay"],
        ema=EmaConfig(alpha=p["ema_alpha"], gamma_min=p["ema_gamma_min"]),
        eval_every=p["eval_every"], eval_seeds=p["eval_seeds"],
    )
    seed_results = []
    for seed_rng in split(seeds_root, p["seeds"]):
        data_rng, init_rng, train_rng = split(seed_rng, 3)
        dataset = bc.collect_expert_data(system, expert, p["N"], data_rng)
        policy = bc.init_mlp(init_rng, system.d_x, system.d_u, hidden)
        records = bc.train_bc(dataset, policy, train_cfg, system, train_rng)
        raw_curve = metrics.TrainingCurve(bc.curve_records(records, "raw"))
        ema_curve = metrics.TrainingCurve(bc.curve_records(records, "ema"))
        seed_results.append({
            "records": records,
            "ema_evals": [rec.eval_ema for rec in records],
            "ema_val_losses": [rec.val_loss_ema for rec in records],
            "raw_summary": metrics.summarize(raw_curve),
            "ema_summary": metrics.summarize(ema_curve),
        })
    elapsed = time.monotonic() - t0
    extra = {
        "imitator": p["imitator"],
        "k_star": k_star.tolist(),
        "closed_loop_norm": float(np.linalg.norm(system.A + system.B @ k_star, 2)),
    }
    return _imitation_outputs(config, seed_results, extra, elapsed)


def run_lqr_cliff(config: ExperimentConfig) -> RunResult:
    p = config.params
    rng = RngState(config.seed)
    _, seeds_root = split(rng, 2)
    t0 = time.monotonic()
    system = lc.make_spring_cliff(
        eta_time=p["eta_time"], kappa=p["kappa"], H=p["H"],
        sigma_w=p["sigma_w"],
        init=lc.InitSampler("circle_arc", lo_deg=p["init_lo_deg"],
                            hi_deg=p["init_hi_deg"]))
    _, k_star = lc.dare_solve(system.A, system.B, system.Q, system.R)
    expert = lc.LinearPolicy(k_star)
    train_cfg = bc.TrainConfig(
        epochs=p["epochs"], batch_size=p["batch"], optimizer="sgd",
        lr=optim.LrSchedule.constant(p["lr"]), ema=None,
        eval_every=p["eval_every"], eval_seeds=p["eval_seeds"],
        retain_params=True,
    )
    posthoc = EmaConfig(alpha=p["ema_alpha"], gamma_min=p["ema_gamma_min"],
                        burn_in=p["ema_burn_in"])
    seed_results = []
    for seed_rng in split(seeds_root, p["seeds"]):
        data_rng, init_rng, train_rng, eval_rng = split(seed_rng, 4)
        dataset = bc.collect_expert_data(system, expert, p["N"], data_rng)
        policy = bc.init_mlp(init_rng, system.d_x, system.d_u, [])
        records = bc.train_bc(dataset, policy, train_cfg, system, train_rng,
                              eval_rng=eval_rng)
        shadows = filter_checkpoint_stream(
            [rec.params_raw for rec in records], posthoc.build())
        scratch = bc.MlpPolicy(system.d_x, system.d_u, [])
        Xv, prev_Uv, Uv = bc.pooled_pairs(dataset, dataset.val_idx)
        ema_evals, ema_vals, ema_records = [], [], []
        for rec, shadow in zip(records, shadows):
            scratch.set_vector(shadow)
            ev = bc.eval_checkpoint(system, scratch, p["eval_seeds"], eval_rng)
            val = bc.bc_batch_loss(scratch, Xv, prev_Uv, Uv)
            ema_evals.append(ev)
            ema_vals.append(val)
            ema_records.append(metrics.CheckpointRecord(
                step=rec.step, mean_reward=ev.mean_reward,
                rewards=ev.rewards[~ev.diverged], val_loss=val,
                n_diverged=int(ev.diverged.sum())))
        raw_curve = metrics.TrainingCurve(bc.curve_records(records, "raw"))
        ema_curve = metrics.TrainingCurve(ema_records)
        seed_results.append({
            "records": records,
            "ema_evals": ema_evals,
            "ema_val_losses": ema_vals,
            "raw_summary": metrics.summarize(raw_curve),
            "ema_summary": metrics.summarize(ema_curve),
        })
    elapsed = time.monotonic() - t0
    extra = {
        "k_star": k_star.tolist(),
        "expert_reward_target": float(p["H"]),
        "posthoc_filter": {"alpha": p["ema_alpha"],
                           "gamma_min": p["ema_gamma_min"],
                           "burn_in": p["ema_burn_in"]},
    }
    return _imitation_outputs(config, seed_results, extra, elapsed)


RUNNERS = {
    "verify-dt-ema": run_verify_dt_ema,
    "verify-cliff": run_verify_cliff,
    "verify-ou": run_verify_ou,
    "verify-driftless": run_verify_driftless,
    "verify-amplification": run_verify_amplification,
    "mean-cliff": run_mean_cliff,
    "lqr-marginal": run_lqr_marginal,
    "lqr-cliff": run_lqr_cliff,
    "bench-averaging": run_bench_averaging,
}


def run_experiment(config: ExperimentConfig) -> RunResult:
    if config.kind not in RUNNERS:
        raise ConfigError(f"unknown experiment kind {config.kind!r}")
    return RUNNERS[config.kind](config)


def resolve_out_dir(config: ExperimentConfig, out_root: str | None = None) -> Path:
    import os
    root = config.out or out_root or os.environ.get(OUT_ROOT_ENV) or "results"
    return Path(root) / f"{config.kind}-seed{config.seed}"


def run_and_write(config: ExperimentConfig,
                  out_root: str | None = None) -> tuple[RunResult, ResultBundle]:
    result = run_experiment(config)
    bundle = write_bundle(resolve_out_dir(config, out_root), result.files)
    return result, bundle

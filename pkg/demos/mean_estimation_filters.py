"""Mean estimation with SGD noise, with and without an averaging filter.

Three short studies on the scalar mean-estimation process
theta_{t+1} = theta_t - eta * (theta_t - mu + sigma * z_t):

  1. terminal MSE of the raw iterate against its closed form,
  2. terminal MSE of the EMA iterate bracketed by analytic bounds,
  3. a cliff-shaped reward where raw checkpoints oscillate across the
     edge while the EMA stream stays inside.

Run with: python demos/mean_estimation_filters.py
"""

from __future__ import annotations

import numpy as np

from gva.mean_cliff import (
    CliffSpec,
    EmaConfig,
    RngState,
    SgdMeanProcess,
    closed_form_no_ema_mse,
    ema_mse_bounds,
    monte_carlo_cliff,
    monte_carlo_mse,
)

TRIALS = 20_000


def raw_mse_table() -> None:
    print("raw iterate: Monte Carlo terminal MSE vs closed form")
    print(f"{'eta':>5} {'b':>3} {'T':>5} {'mc':>10} {'3*se':>9} {'exact':>10}")
    rng = RngState(7)
    for eta in (0.05, 0.1, 0.3):
        for b in (0.0, 1.0):
            T = 200
            proc = SgdMeanProcess(d=1, eta=eta, sigma=1.0,
                                  theta0=np.array([b]), T=T)
            mc, se, _, _ = monte_carlo_mse(proc, EmaConfig(gamma=0.1),
                                           trials=TRIALS, rng=rng)
            exact = closed_form_no_ema_mse(eta=eta, sigma=1.0, b=b, t=T)
            print(f"{eta:5.2f} {b:3.0f} {T:5d} {mc:10.5f} {3 * se:9.5f} "
                  f"{exact:10.5f}")
    print()


def ema_bounds_table() -> None:
    print("EMA iterate: Monte Carlo terminal MSE inside analytic bounds")
    print(f"{'eta':>5} {'gamma':>6} {'T':>5} {'lower':>9} {'mc':>9} "
          f"{'upper':>9}")
    rng = RngState(11)
    for eta in (0.3, 0.1):
        for gamma in (0.05, 0.2):
            # horizon long enough that the initial condition has washed out
            T = 1
            while (1.0 - gamma) ** (2 * T) > gamma:
                T *= 2
            proc = SgdMeanProcess(d=1, eta=eta, sigma=1.0,
                                  theta0=np.array([0.0]), T=T)
            _, _, mc, se = monte_carlo_mse(proc, EmaConfig(gamma=gamma),
                                           trials=TRIALS, rng=rng)
            lo, hi = ema_mse_bounds(eta=eta, gamma=gamma, sigma=1.0,
                                    b=0.0, T=T)
            print(f"{eta:5.2f} {gamma:6.2f} {T:5d} {lo:9.5f} {mc:9.5f} "
                  f"{hi:9.5f}")
    print()


def cliff_separation() -> None:
    print("cliff reward: raw checkpoints dither across the edge, EMA does not")
    proc = SgdMeanProcess(d=1, eta=0.3, sigma=1.0,
                          theta0=np.array([0.0]), T=3000)
    spec = CliffSpec(mu=np.array([0.0]), eps=0.5, C=100.0)
    report = monte_carlo_cliff(proc, spec, EmaConfig(gamma=0.005),
                               trials=4000, rng=RngState(3))
    print(f"  raw  reward swing between checkpoints: {report.gap_raw:8.3f}")
    print(f"  EMA  reward swing between checkpoints: {report.gap_ema:8.3f}")
    print(f"  separation (raw / EMA):                {report.separation:8.1f}")
    print(f"  raw fraction inside the safe region:   "
          f"{report.raw_p_inside:8.3f}")
    print(f"  EMA fraction inside the safe region:   "
          f"{report.ema_p_inside:8.3f}")


def main() -> None:
    raw_mse_table()
    ema_bounds_table()
    cliff_separation()


if __name__ == "__main__":
    main()

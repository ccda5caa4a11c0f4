"""Iterate-averaging stabilizers, stochastic optimizers, and testbeds.

The package studies how minibatch gradient noise turns into large swings in
closed-loop rollout reward even while the training loss looks converged, and
how exponential-moving-average (and related) parameter filters remove those
swings. It ships analytic predictions for simple processes (cliff-shaped
mean estimation, Ornstein-Uhlenbeck and driftless continuous-time limits),
linear-quadratic control testbeds for behavior cloning, and a CLI harness
that checks Monte Carlo runs against the closed forms.
"""

from .behavior_cloning import (BcCheckpoint, Dataset, EvalResult, MlpPolicy,
                               TrainConfig, bc_batch_loss, collect_expert_data,
                               curve_records, dataset_from_csv, dataset_to_csv,
                               eval_checkpoint, init_mlp, mlp_forward,
                               mlp_grad, pooled_pairs, train_bc)
from .bundle import (ResultBundle, csv_text, json_text, read_csv,
                     read_manifest, verify_bundle, write_bundle)
from .config import (ExperimentConfig, parse_config, parse_config_file,
                     preset_text, serialize_config)
from .errors import (CheckFailure, ConfigError, DataError, GvaError,
                     NumericError, ValidationError)
from .experiments import RunResult, run_and_write, run_experiment
from .linear_control import (CliffRule, InitSampler, LinearPolicy,
                             LinearSystem, RolloutResult, batch_rollouts,
                             dare_solve, error_amplification_probe,
                             make_marginally_stable, make_spring_cliff,
                             rollout, stability_margin_check)
from .mean_cliff import (CliffReport, CliffSpec, DriftlessSpec, OuSpec,
                         SgdMeanProcess, closed_form_no_ema_mse,
                         driftless_ema_var_bound, driftless_var,
                         ema_mse_bounds, gaussian_cliff_check,
                         monte_carlo_cliff, monte_carlo_mse, ou_ema_mean,
                         ou_ema_var_bound, ou_mean_raw, ou_var_raw,
                         simulate_driftless, simulate_ou_ema,
                         simulate_sgd_mean)
from .metrics import (CheckpointRecord, CompareReport, GvaSummary,
                      TrainingCurve, compare, median_over_seeds, summarize,
                      summary_table)
from .numerics import RngState, mat_exp, op_norm, split
from .optim import (AdamWState, GradAccumulator, LrSchedule, SgdState,
                    accumulate, adamw_step, flush, lr_at, sgd_step)
from .stabilizers import (AnnealedGamma, AverageFilter, EmaConfig, EmaFilter,
                          avg_update, ema_update, filter_checkpoint_stream,
                          gamma_value)

__version__ = "0.1.0"

__all__ = [
    "AdamWState", "AnnealedGamma", "AverageFilter", "BcCheckpoint",
    "CheckFailure", "CheckpointRecord", "CliffReport", "CliffRule",
    "CliffSpec", "CompareReport", "ConfigError", "DataError", "Dataset",
    "DriftlessSpec", "EmaConfig", "EmaFilter", "EvalResult",
    "ExperimentConfig", "GradAccumulator", "GvaError", "GvaSummary",
    "InitSampler", "LinearPolicy", "LinearSystem", "LrSchedule", "MlpPolicy",
    "NumericError", "OuSpec", "ResultBundle", "RolloutResult", "RngState",
    "RunResult", "SgdMeanProcess", "SgdState", "TrainConfig", "TrainingCurve",
    "ValidationError", "accumulate", "adamw_step", "avg_update",
    "batch_rollouts", "bc_batch_loss", "closed_form_no_ema_mse",
    "collect_expert_data", "compare", "csv_text", "curve_records",
    "dare_solve", "dataset_from_csv", "dataset_to_csv",
    "driftless_ema_var_bound", "driftless_var", "ema_mse_bounds",
    "ema_update", "error_amplification_probe", "eval_checkpoint",
    "filter_checkpoint_stream", "flush", "gamma_value",
    "gaussian_cliff_check", "init_mlp", "json_text", "lr_at", "mat_exp",
    "make_marginally_stable", "make_spring_cliff", "median_over_seeds",
    "mlp_forward", "mlp_grad", "monte_carlo_cliff", "monte_carlo_mse",
    "op_norm", "ou_ema_mean", "ou_ema_var_bound", "ou_mean_raw", "ou_var_raw",
    "parse_config", "parse_config_file", "pooled_pairs", "preset_text",
    "read_csv", "read_manifest", "rollout", "run_and_write",
    "run_experiment", "serialize_config", "sgd_step", "simulate_driftless",
    "simulate_ou_ema", "simulate_sgd_mean", "split", "stability_margin_check",
    "summarize", "summary_table", "train_bc", "verify_bundle", "write_bundle",
]

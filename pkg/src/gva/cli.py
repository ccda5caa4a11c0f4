"""Command-line entry point.

Subcommands:
  gva run <config>            run one experiment from a config file or preset
  gva plot <csv> --spec NAME  render a result CSV to SVG charts
  gva report <bundle>...      summarize one or more result bundles
  gva verify <suite>          run a verification suite (or "all")

Outputs land under the config's `out` value, else $GVA_OUT_ROOT, else
./results. Exit codes: 0 all checks passed, 1 a recorded check failed,
2 configuration problem, 3 numeric or data problem.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import metrics, plots
from .bundle import read_csv, verify_bundle
from .config import SCHEMAS, ExperimentConfig, parse_config, preset_text
from .errors import (CheckFailure, ConfigError, DataError, NumericError,
                     ValidationError)
from .experiments import RunResult, run_and_write

VERIFY_SUITES = ("dt-ema", "cliff", "ou", "driftless", "amplification")


def _load_config(source: str) -> ExperimentConfig:
    path = Path(source)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    else:
        text = preset_text(source)
    return parse_config(text)


def _print_result(result: RunResult, bundle_path: Path) -> None:
    for check in result.checks:
        print(check.text())
    n_fail = len(result.failures)
    if result.checks:
        print(f"{len(result.checks) - n_fail}/{len(result.checks)} checks passed")
    print(f"wrote {bundle_path}")


def cmd_run(args) -> int:
    config = _load_config(args.config)
    if args.seed is not None:
        config = ExperimentConfig(kind=config.kind, seed=args.seed,
                                  out=config.out, params=config.params)
    result, bundle = run_and_write(config, out_root=args.out)
    _print_result(result, bundle.path)
    return 1 if result.failures else 0


def cmd_verify(args) -> int:
    if args.suite == "all":
        suites = list(VERIFY_SUITES)
    else:
        name = args.suite.removeprefix("verify-")
        if name not in VERIFY_SUITES:
            raise ConfigError(
                f"unknown suite {args.suite!r}; available: "
                f"{', '.join(VERIFY_SUITES)}, all")
        suites = [name]
    failed = 0
    for name in suites:
        config = _load_config(f"verify-{name}")
        if args.seed is not None:
            config = ExperimentConfig(kind=config.kind, seed=args.seed,
                                      out=config.out, params=config.params)
        print(f"== verify-{name} ==")
        result, bundle = run_and_write(config, out_root=args.out)
        _print_result(result, bundle.path)
        failed += len(result.failures)
    return 1 if failed else 0


def cmd_plot(args) -> int:
    header, rows = read_csv(args.csv)
    rendered = plots.render_csv(header, rows, args.spec)
    out_dir = Path(args.out) if args.out else Path(args.csv).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, svg in rendered.items():
        target = out_dir / name
        target.write_text(svg, encoding="utf-8")
        print(f"wrote {target}")
    return 0


def _summary_from_dict(d: dict) -> metrics.GvaSummary:
    from dataclasses import fields
    return metrics.GvaSummary(**{f.name: d[f.name]
                                 for f in fields(metrics.GvaSummary)})


def cmd_report(args) -> int:
    summaries = []
    for b in args.bundles:
        verify_bundle(b)
        path = Path(b) / "summary.json"
        if not path.is_file():
            raise DataError(f"no summary.json in {b}")
        summaries.append(json.loads(path.read_text(encoding="utf-8")))
    kinds = {s.get("kind") for s in summaries}
    if len(kinds) != 1:
        raise ConfigError(
            f"bundles mix experiment kinds: {', '.join(sorted(map(str, kinds)))}")
    kind = kinds.pop()
    print(f"report for {len(summaries)} {kind} bundle(s)")
    if "per_seed_raw" in summaries[0]:
        raw = [_summary_from_dict(d) for s in summaries for d in s["per_seed_raw"]]
        ema = [_summary_from_dict(d) for s in summaries for d in s["per_seed_ema"]]
        med_raw = metrics.median_over_seeds(raw)
        med_ema = metrics.median_over_seeds(ema)
        comp = metrics.compare(med_raw, med_ema)
        print(metrics.summary_table({"raw": med_raw, "ema": med_ema}), end="")
        print(f"oscillation ratio (ema/raw range_mid): "
              f"{comp.oscillation_ratio:.6g}")
        print(f"seeds pooled: {len(raw)}")
    else:
        for b, s in zip(args.bundles, summaries):
            checks = s.get("checks", [])
            n_fail = sum(1 for c in checks if not c["passed"])
            print(f"{b}: {len(checks) - n_fail}/{len(checks)} checks passed")
            for c in checks:
                status = "ok" if c["passed"] else "FAILED"
                print(f"  [{status}] {c['name']}: "
                      f"{c['lhs']:.10g} {c['op']} {c['rhs']:.10g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gva",
        description="iterate-averaging stabilizers and their testbeds")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config or preset")
    p_run.add_argument("config", help="path to a .cfg file, or a preset name "
                       f"(kinds: {', '.join(sorted(SCHEMAS))})")
    p_run.add_argument("--out", default=None, help="output root directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    p_run.set_defaults(func=cmd_run)

    p_plot = sub.add_parser("plot", help="render a result CSV to SVG")
    p_plot.add_argument("csv", help="path to a CSV produced by gva run")
    p_plot.add_argument("--spec", required=True,
                        help=f"chart family: {', '.join(sorted(plots.PLOT_SPECS))}")
    p_plot.add_argument("--out", default=None,
                        help="directory for the SVGs (default: next to the CSV)")
    p_plot.set_defaults(func=cmd_plot)

    p_rep = sub.add_parser("report", help="summarize result bundles")
    p_rep.add_argument("bundles", nargs="+", help="bundle directories")
    p_rep.set_defaults(func=cmd_report)

    p_ver = sub.add_parser("verify", help="run a verification suite")
    p_ver.add_argument("suite",
                       help=f"one of: {', '.join(VERIFY_SUITES)}, all")
    p_ver.add_argument("--out", default=None, help="output root directory")
    p_ver.add_argument("--seed", type=int, default=None,
                       help="override the preset seed")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CheckFailure as e:
        print(f"check failed: {e}", file=sys.stderr)
        return 1
    except (ConfigError, ValidationError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (NumericError, DataError) as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

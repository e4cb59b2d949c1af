"""Command-line interface: simulation benchmarks, real-data screening, report
regeneration, and an installation selftest.

All subcommands are deterministic given (config, seed): outputs are byte
identical regardless of the worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .data import SimConfig
from .harness import emit_report, load_report, run_benchmark
from .ingest import align, parse_clinical, parse_profile, run_real_study
from .measures import (MeasureKind, MeasureOptions, MethodCompatibilityError,
                       check_compatibility)

_THREADS_ENV = "SURESCREEN_THREADS"

_ALL_METHODS = [k.value for k in MeasureKind]
_MULTIVARIATE_METHODS = [k.value for k in MeasureKind if not k.univariate_only]


def _default_threads() -> int:
    env = os.environ.get(_THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _parse_methods(spec: str) -> list:
    return [MeasureKind.parse(tok) for tok in spec.split(",") if tok.strip()]


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object")
    return doc


def _measure_options(cfgfile: dict, args) -> MeasureOptions:
    kw = {}
    for key in ("sc_transform", "wd_solver", "wd_preprocess", "wd_epsilon_scale",
                "wd_tol", "wd_max_iter", "wd_support_limit"):
        if key in cfgfile:
            kw[key] = cfgfile[key]
    if getattr(args, "wd_solver", None):
        kw["wd_solver"] = args.wd_solver
    if getattr(args, "wd_preprocess", None):
        kw["wd_preprocess"] = args.wd_preprocess
    return MeasureOptions(**kw)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker processes (default: ${_THREADS_ENV} or cpu count)")
    p.add_argument("--wd-solver", choices=["auto", "exact", "sinkhorn"], default=None,
                   help="transport solver for the Wasserstein screen")
    p.add_argument("--wd-preprocess", choices=["standardize", "rank"], default=None,
                   help="per-block preprocessing for the Wasserstein screen")
    p.add_argument("--cutoff-override", type=int, default=None,
                   help="screening cutoff s (default [n/log n])")


def cmd_simulate(args) -> int:
    cfgfile = _load_config_file(args.config)
    study = args.study or cfgfile.get("study")
    if not study:
        print("error: --study (or a config file with 'study') is required", file=sys.stderr)
        return 2
    overrides = {}
    for key in ("n", "p", "q", "d", "ar_coefficient", "beta_low", "beta_high",
                "marginal", "power_a", "pareto_shape", "pareto_mode",
                "replicates", "base_seed", "noise_sd", "share_platform_ids"):
        if key in cfgfile:
            overrides[key] = cfgfile[key]
    if args.n is not None:
        overrides["n"] = args.n
    if args.p is not None:
        overrides["p"] = args.p
    if args.replicates is not None:
        overrides["replicates"] = args.replicates
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    try:
        cfg = SimConfig.for_study(study, **overrides)
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.methods:
        spec = args.methods
    elif "methods" in cfgfile:
        spec = ",".join(cfgfile["methods"])
    else:
        spec = ",".join(_ALL_METHODS if cfg.d == 1 and cfg.q == 1 else _MULTIVARIATE_METHODS)
    try:
        methods = _parse_methods(spec)
        for kind in methods:
            check_compatibility(kind, cfg.d, cfg.q)
        opts = _measure_options(cfgfile, args)
    except (ValueError, MethodCompatibilityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(args.out or cfgfile.get("out") or f"out_{study.lower()}")
    threads = args.threads if args.threads is not None else cfgfile.get("threads", _default_threads())

    total = cfg.replicates
    last = {"t": 0.0}

    def progress(rep):
        now = time.perf_counter()
        if now - last["t"] > 10 or rep + 1 == total:
            last["t"] = now
            print(f"  replicate {rep + 1}/{total}", file=sys.stderr)

    report = run_benchmark(cfg, methods, opts, threads=threads, progress=progress,
                           cutoff_override=args.cutoff_override)
    files = emit_report(report, out_dir)
    (out_dir / "timing.txt").write_text(f"wall_time_seconds {report.wall_time:.3f}\n"
                                        f"threads {threads}\n", encoding="utf-8")
    for f in files:
        print(f)
    return 0


def cmd_screen(args) -> int:
    cfgfile = _load_config_file(args.config)
    profile_specs = list(args.profile or []) + list(cfgfile.get("profiles", []))
    clinical_path = args.clinical or cfgfile.get("clinical")
    if not profile_specs or not clinical_path:
        print("error: at least one --profile and a --clinical file are required",
              file=sys.stderr)
        return 2
    spec = args.methods or ",".join(cfgfile.get("methods", ["DC-SIS", "PC-Screen", "WD-Screen"]))
    try:
        methods = _parse_methods(spec)
        opts = _measure_options(cfgfile, args)
        profiles = []
        for item in profile_specs:
            if "=" in item:
                name, path = item.split("=", 1)
                profiles.append(parse_profile(path, name=name))
            else:
                profiles.append(parse_profile(item))
        clinical = parse_clinical(clinical_path, tmb_column=args.tmb_column)
        dataset = align(profiles, clinical, impute=args.impute)
        for kind in methods:
            check_compatibility(kind, dataset.X.d, dataset.Y.q)
    except (ValueError, MethodCompatibilityError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out or cfgfile.get("out") or "out_screen")
    threads = args.threads if args.threads is not None else cfgfile.get("threads", _default_threads())
    print(f"aligned dataset: {dataset.X.d} platforms x {dataset.X.n} samples x "
          f"{dataset.X.p} genes", file=sys.stderr)
    result = run_real_study(dataset, methods, opts, out_dir=out_dir,
                            threads=threads, k=args.cutoff_override)
    print(f"intersection ({len(result['intersection'])} genes): "
          + ", ".join(result["intersection"]))
    return 0


def cmd_report(args) -> int:
    try:
        doc = load_report(args.report)
        out_dir = args.out or str(Path(args.report).parent)
        files = emit_report(doc, out_dir)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot regenerate report: {exc}", file=sys.stderr)
        return 2
    for f in files:
        print(f)
    return 0


def cmd_selftest(args) -> int:
    from .oracles import run_selftest

    ok = run_selftest(verbose=True)
    print("selftest: " + ("all checks passed" if ok else "FAILURES detected"))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="surescreen",
        description="Dependence-measure feature screening: simulation benchmarks, "
                    "multi-platform real-data screening, and report tooling.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a simulation study benchmark")
    p.add_argument("--study", choices=["S1", "S2", "S3", "S4"])
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="base seed")
    p.add_argument("--methods", help="comma-separated method list")
    p.add_argument("--n", type=int, default=None, help="subjects per replicate")
    p.add_argument("--p", type=int, default=None, help="features per replicate")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("screen", help="screen a real multi-platform dataset")
    p.add_argument("--profile", action="append",
                   help="profile TSV, optionally NAME=PATH (repeatable)")
    p.add_argument("--clinical", help="clinical sample TSV")
    p.add_argument("--tmb-column", default="TMB_NONSYNONYMOUS",
                   help="clinical column holding the response")
    p.add_argument("--impute", choices=["drop", "median"], default="drop",
                   help="missing-value handling during alignment")
    p.add_argument("--methods", help="comma-separated method list")
    _add_common(p)
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("report", help="regenerate CSV/SVG outputs from report.json")
    p.add_argument("report", help="path to report.json")
    p.add_argument("--out", help="output directory (default: alongside the report)")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("selftest", help="validate the installation against "
                                        "brute-force references")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

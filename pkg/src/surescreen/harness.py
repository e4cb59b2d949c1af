"""Benchmark harness: runs (study x method x replicates), aggregates the
screening criteria, and emits tables plus simple boxplot figures.

Within a replicate every method scores the identical generated instance
(paired comparison).  Replicates run in parallel across processes; the
reduction is an index-ordered fold, so reports are byte-stable for a fixed
configuration regardless of worker count.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .data import SimConfig
from .measures import MeasureKind, MeasureOptions, check_compatibility, score_all
from .screening import CriteriaTable, ScreeningResult, aggregate, evaluate
from .simgen import gen_study

__all__ = ["BenchmarkReport", "run_benchmark", "five_number", "emit_report", "load_report"]


@dataclass(frozen=True)
class MethodSummary:
    criteria: CriteriaTable
    model_sizes: np.ndarray          # raw S per replicate
    true_ranks: np.ndarray           # (replicates, n_true) rank per true feature
    model_size_summary: tuple        # five-number summary of S
    rank_summaries: dict             # feature -> five-number tuple


@dataclass(frozen=True)
class BenchmarkReport:
    config: SimConfig
    methods: dict                    # method name -> MethodSummary
    true_features: tuple
    wall_time: float


def five_number(xs) -> tuple:
    """(min, q1, median, q3, max) with linear-interpolation quartiles."""
    a = np.asarray(xs, dtype=np.float64)
    if a.size == 0:
        raise ValueError("five_number needs at least one value")
    q = np.percentile(a, [0, 25, 50, 75, 100], method="linear")
    return tuple(float(v) for v in q)


def _replicate_task(args):
    cfg, rep, kinds, opts, s_override = args
    with threadpool_limits(limits=1):
        inst = gen_study(cfg, rep)
        out = {}
        for kind in kinds:
            table = score_all(inst.X, inst.Y, kind, opts, threads=1)
            res = evaluate(table, inst.true_set, cfg.n, s=s_override)
            out[kind.value] = (res.true_ranks, res.min_model_size, res.flags)
    return rep, out, inst.true_set.features


def run_benchmark(
    cfg: SimConfig,
    methods: Sequence[MeasureKind],
    opts: MeasureOptions | None = None,
    threads: int = 1,
    progress=None,
    cutoff_override: int | None = None,
) -> BenchmarkReport:
    """Score every replicate with every method and aggregate the criteria.

    Raises a configuration error before any work if a method cannot handle
    the study's block dimensions.
    """
    opts = opts or MeasureOptions()
    kinds = list(methods)
    seen = set()
    for k in kinds:
        if k.value in seen:
            raise ValueError(f"duplicate method {k.value}")
        seen.add(k.value)
        check_compatibility(k, cfg.d, cfg.q)

    t0 = time.perf_counter()
    tasks = [(cfg, rep, kinds, opts, cutoff_override) for rep in range(cfg.replicates)]
    rows: list = [None] * cfg.replicates
    true_feats = None
    if threads <= 1 or cfg.replicates == 1:
        for t in tasks:
            rep, out, feats = _replicate_task(t)
            rows[rep] = out
            true_feats = feats
            if progress:
                progress(rep)
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            for rep, out, feats in pool.map(_replicate_task, tasks):
                rows[rep] = out
                true_feats = feats
                if progress:
                    progress(rep)

    summaries = {}
    for kind in kinds:
        ranks = np.stack([rows[r][kind.value][0] for r in range(cfg.replicates)])
        sizes = np.array([rows[r][kind.value][1] for r in range(cfg.replicates)])
        flags = np.stack([rows[r][kind.value][2] for r in range(cfg.replicates)])
        crit = CriteriaTable(
            true_features=true_feats,
            p_s=flags.mean(axis=0),
            p_a=float(flags.all(axis=1).mean()),
            replicates=cfg.replicates,
        )
        rank_summ = {f: five_number(ranks[:, i]) for i, f in enumerate(true_feats)}
        summaries[kind.value] = MethodSummary(
            criteria=crit,
            model_sizes=sizes,
            true_ranks=ranks,
            model_size_summary=five_number(sizes),
            rank_summaries=rank_summ,
        )
    return BenchmarkReport(
        config=cfg,
        methods=summaries,
        true_features=true_feats if true_feats is not None else (),
        wall_time=time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    return format(float(v), "g")


def _report_dict(r: BenchmarkReport) -> dict:
    return {
        "config": asdict(r.config),
        "true_features": list(r.true_features),
        "methods": {
            name: {
                "p_s": {str(f): float(ps) for f, ps in
                        zip(m.criteria.true_features, m.criteria.p_s)},
                "p_a": m.criteria.p_a,
                "replicates": m.criteria.replicates,
                "model_sizes": [int(s) for s in m.model_sizes],
                "model_size_summary": list(m.model_size_summary),
                "true_ranks": [[int(x) for x in row] for row in m.true_ranks],
                "rank_summaries": {str(f): list(s) for f, s in m.rank_summaries.items()},
            }
            for name, m in r.methods.items()
        },
    }


def load_report(path: Path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _write_criteria_csv(doc: dict, path: Path) -> None:
    feats = doc["true_features"]
    header = "method," + ",".join(f"Ps_{f}" for f in feats) + ",Pa"
    lines = [header]
    for name, m in doc["methods"].items():
        vals = [m["p_s"][str(f)] for f in feats] + [m["p_a"]]
        lines.append(name + "," + ",".join(_fmt(v) for v in vals))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_model_size_csv(doc: dict, path: Path) -> None:
    lines = ["method,replicate,S"]
    for name, m in doc["methods"].items():
        for rep, s in enumerate(m["model_sizes"]):
            lines.append(f"{name},{rep},{s}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_ranks_csv(doc: dict, path: Path) -> None:
    feats = doc["true_features"]
    lines = ["method,replicate," + ",".join(f"rank_{f}" for f in feats)]
    for name, m in doc["methods"].items():
        for rep, row in enumerate(m["true_ranks"]):
            lines.append(f"{name},{rep}," + ",".join(str(x) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _svg_boxplot(groups: dict, title: str, ylabel: str) -> str:
    """Minimal static boxplot: one box per group from its five-number summary."""
    width, height = 120 + 90 * max(len(groups), 1), 420
    top, bottom, left = 40, 60, 70
    plot_h = height - top - bottom
    vals = [v for s in groups.values() for v in s]
    lo, hi = (min(vals), max(vals)) if vals else (0.0, 1.0)
    if hi <= lo:
        hi = lo + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def ypix(v):
        return top + plot_h * (1.0 - (v - lo) / (hi - lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<text x="{width/2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="16" y="{top + plot_h/2:.0f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {top + plot_h/2:.0f})">{ylabel}</text>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top+plot_h}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = lo + frac * (hi - lo)
        y = ypix(v)
        parts.append(f'<line x1="{left-4}" y1="{y:.1f}" x2="{left}" y2="{y:.1f}" stroke="black"/>')
        parts.append(f'<text x="{left-8}" y="{y+4:.1f}" text-anchor="end" font-size="10">{v:.3g}</text>')
    for idx, (name, summ) in enumerate(groups.items()):
        cx = left + 50 + 90 * idx
        mn, q1, med, q3, mx = summ
        bw = 28
        parts += [
            f'<line x1="{cx}" y1="{ypix(mn):.1f}" x2="{cx}" y2="{ypix(q1):.1f}" stroke="black"/>',
            f'<line x1="{cx}" y1="{ypix(q3):.1f}" x2="{cx}" y2="{ypix(mx):.1f}" stroke="black"/>',
            f'<line x1="{cx-10}" y1="{ypix(mn):.1f}" x2="{cx+10}" y2="{ypix(mn):.1f}" stroke="black"/>',
            f'<line x1="{cx-10}" y1="{ypix(mx):.1f}" x2="{cx+10}" y2="{ypix(mx):.1f}" stroke="black"/>',
            f'<rect x="{cx-bw/2}" y="{ypix(q3):.1f}" width="{bw}" '
            f'height="{max(ypix(q1)-ypix(q3), 0.5):.1f}" fill="none" stroke="black"/>',
            f'<line x1="{cx-bw/2}" y1="{ypix(med):.1f}" x2="{cx+bw/2}" y2="{ypix(med):.1f}" '
            f'stroke="black" stroke-width="2"/>',
            f'<text x="{cx}" y="{height-36}" text-anchor="middle" font-size="10" '
            f'transform="rotate(-35 {cx} {height-36})">{name}</text>',
        ]
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(report: "BenchmarkReport | dict", out_dir) -> list:
    """Write criteria.csv, model_size.csv, ranks.csv, report.json and the
    boxplot SVGs.  Output bytes depend only on the report contents."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = report if isinstance(report, dict) else _report_dict(report)
    written = []

    path = out / "report.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(path)

    for name, writer in (
        ("criteria.csv", _write_criteria_csv),
        ("model_size.csv", _write_model_size_csv),
        ("ranks.csv", _write_ranks_csv),
    ):
        path = out / name
        writer(doc, path)
        written.append(path)

    s_groups = {name: tuple(m["model_size_summary"]) for name, m in doc["methods"].items()}
    path = out / "boxplot_S.svg"
    path.write_text(_svg_boxplot(s_groups, "Minimum model size S", "S"), encoding="utf-8")
    written.append(path)

    rank_groups = {}
    for name, m in doc["methods"].items():
        for f, summ in m["rank_summaries"].items():
            rank_groups[f"{name}:{f}"] = tuple(summ)
    path = out / "boxplot_ranks.svg"
    path.write_text(_svg_boxplot(rank_groups, "Ranks of true features", "rank"),
                    encoding="utf-8")
    written.append(path)
    return written

"""Tab-separated genomic profile ingestion and platform alignment.

Parses cBioPortal-style profile files (CNA, mRNA, methylation, ...) and the
clinical sample table, aligns the platforms on common genes and samples, and
assembles the predictor array plus the TMB response used by the real-data
screening workflow.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import PredictorArray, ResponseBlock
from .measures import MeasureKind, MeasureOptions, check_compatibility, score_all
from .screening import cutoff, intersect_selections, rank_features, top_k

__all__ = [
    "GeneMatrix",
    "ClinicalTable",
    "MultiOmicsDataset",
    "ProfileFormatError",
    "AlignmentError",
    "parse_profile",
    "write_profile",
    "parse_clinical",
    "align",
    "run_real_study",
]


class ProfileFormatError(ValueError):
    """Malformed profile or clinical file; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class AlignmentError(ValueError):
    """Platform alignment produced an empty gene or sample set."""


@dataclass(frozen=True)
class GeneMatrix:
    """One platform: genes (rows) x samples (columns) with a missing-mask."""

    genes: tuple
    samples: tuple
    values: np.ndarray   # (genes, samples) float64, NaN where missing
    name: str = ""

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)


@dataclass(frozen=True)
class ClinicalTable:
    """sample id -> nonsynonymous TMB."""

    tmb: dict
    dropped: int = 0  # rows with unparsable TMB


@dataclass(frozen=True)
class MultiOmicsDataset:
    X: PredictorArray
    Y: ResponseBlock
    genes: tuple
    samples: tuple
    platforms: tuple


def _parse_float(cell: str) -> float:
    cell = cell.strip()
    if cell == "" or cell.upper() in ("NA", "NAN", "NULL"):
        return math.nan
    return float(cell)


def parse_profile(path, name: str | None = None) -> GeneMatrix:
    """Parse a tab-separated profile file.

    Leading lines starting with '#' are comments.  The header row must
    contain ``Hugo_Symbol`` and may contain ``Entrez_Gene_Id``; the remaining
    columns are sample ids.  ``NA``/empty cells become missing values.
    """
    path = Path(path)
    genes: list = []
    rows: list = []
    header = None
    meta_cols = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if header is None and line.startswith("#"):
                continue
            if not line.strip():
                continue
            cells = line.split("\t")
            if header is None:
                if "Hugo_Symbol" not in cells:
                    raise ProfileFormatError("missing 'Hugo_Symbol' column in header", lineno)
                sym_idx = cells.index("Hugo_Symbol")
                if sym_idx != 0:
                    raise ProfileFormatError("'Hugo_Symbol' must be the first column", lineno)
                meta_cols = 2 if len(cells) > 1 and cells[1] == "Entrez_Gene_Id" else 1
                header = cells
                samples = cells[meta_cols:]
                if not samples:
                    raise ProfileFormatError("no sample columns in header", lineno)
                if len(set(samples)) != len(samples):
                    dupes = sorted({s for s in samples if samples.count(s) > 1})
                    raise ProfileFormatError(f"duplicate sample columns: {dupes}", lineno)
                continue
            if len(cells) != len(header):
                raise ProfileFormatError(
                    f"expected {len(header)} fields, got {len(cells)}", lineno)
            sym = cells[0].strip()
            if not sym:
                raise ProfileFormatError("empty gene symbol", lineno)
            try:
                vals = [_parse_float(c) for c in cells[meta_cols:]]
            except ValueError as exc:
                raise ProfileFormatError(str(exc), lineno) from None
            genes.append(sym)
            rows.append(vals)
    if header is None:
        raise ProfileFormatError("no header row found")
    values = np.array(rows, dtype=np.float64).reshape(len(genes), len(samples))
    return GeneMatrix(tuple(genes), tuple(samples), values, name or path.stem)


def _fmt_cell(v: float) -> str:
    if math.isnan(v):
        return "NA"
    return repr(float(v))


def write_profile(gm: GeneMatrix, path) -> None:
    """Serialize a GeneMatrix back to TSV with canonical number formatting
    (floats round-trip exactly)."""
    lines = ["Hugo_Symbol\t" + "\t".join(gm.samples)]
    for g, row in zip(gm.genes, gm.values):
        lines.append(g + "\t" + "\t".join(_fmt_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_clinical(path, tmb_column: str = "TMB_NONSYNONYMOUS") -> ClinicalTable:
    """Parse a cBioPortal clinical-sample file: '#'-prefixed metadata lines,
    then a header containing SAMPLE_ID and the TMB column."""
    path = Path(path)
    header = None
    tmb: dict = {}
    dropped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if header is None and line.startswith("#"):
                continue
            if not line.strip():
                continue
            cells = line.split("\t")
            if header is None:
                header = cells
                if "SAMPLE_ID" not in header:
                    raise ProfileFormatError("missing 'SAMPLE_ID' column", lineno)
                if tmb_column not in header:
                    raise ProfileFormatError(
                        f"TMB column {tmb_column!r} not found; available: "
                        + ", ".join(header), lineno)
                sid_idx = header.index("SAMPLE_ID")
                tmb_idx = header.index(tmb_column)
                continue
            if len(cells) != len(header):
                raise ProfileFormatError(
                    f"expected {len(header)} fields, got {len(cells)}", lineno)
            sid = cells[sid_idx].strip()
            if not sid:
                continue
            if sid in tmb:
                raise ProfileFormatError(f"duplicate sample id {sid!r}", lineno)
            try:
                val = _parse_float(cells[tmb_idx])
            except ValueError:
                val = math.nan
            if math.isnan(val):
                dropped += 1
                continue
            tmb[sid] = val
    if header is None:
        raise ProfileFormatError("no header row found")
    if dropped:
        warnings.warn(f"{dropped} clinical rows dropped (unparsable TMB)")
    return ClinicalTable(tmb, dropped)


def _drop_duplicate_genes(gm: GeneMatrix) -> tuple:
    """All copies of a within-platform duplicated symbol are removed."""
    seen: dict = {}
    for g in gm.genes:
        seen[g] = seen.get(g, 0) + 1
    keep = [i for i, g in enumerate(gm.genes) if seen[g] == 1]
    return tuple(gm.genes[i] for i in keep), gm.values[keep]


def align(profiles: Sequence[GeneMatrix], clinical: ClinicalTable,
          impute: str = "drop") -> MultiOmicsDataset:
    """Assemble the aligned multi-platform dataset.

    Stages: drop within-platform duplicate symbols entirely; keep genes
    present in every platform; keep samples present in every platform and in
    the clinical table; handle missing values (``drop`` the gene or impute
    the gene ``median``); order genes and samples lexicographically.
    """
    if not profiles:
        raise ValueError("align needs at least one profile")
    if impute not in ("drop", "median"):
        raise ValueError("impute must be 'drop' or 'median'")
    stages = []
    cleaned = []
    for gm in profiles:
        genes, values = _drop_duplicate_genes(gm)
        cleaned.append((genes, values, gm.samples, gm.name))
        stages.append(f"{gm.name or 'platform'}: {len(gm.genes)} -> {len(genes)} after dedup")

    common_genes = set(cleaned[0][0])
    for genes, _, _, _ in cleaned[1:]:
        common_genes &= set(genes)
    common_samples = set(cleaned[0][2])
    for _, _, samples, _ in cleaned[1:]:
        common_samples &= set(samples)
    common_samples &= set(clinical.tmb)
    stages.append(f"common genes: {len(common_genes)}; common samples: {len(common_samples)}")
    if not common_genes or not common_samples:
        raise AlignmentError("empty intersection; " + "; ".join(stages))

    genes_sorted = sorted(common_genes)
    samples_sorted = sorted(common_samples)
    blocks = []
    for genes, values, samples, _ in cleaned:
        gidx = {g: i for i, g in enumerate(genes)}
        sidx = {s: i for i, s in enumerate(samples)}
        rsel = [gidx[g] for g in genes_sorted]
        csel = [sidx[s] for s in samples_sorted]
        blocks.append(values[np.ix_(rsel, csel)])

    stacked = np.stack(blocks)  # (d, genes, samples)
    missing_any = np.isnan(stacked).any(axis=(0, 2))
    if impute == "drop":
        keep = ~missing_any
        genes_final = [g for g, k in zip(genes_sorted, keep) if k]
        stacked = stacked[:, keep, :]
    else:
        genes_final = genes_sorted
        for dpl in range(stacked.shape[0]):
            for gi in np.flatnonzero(np.isnan(stacked[dpl]).any(axis=1)):
                row = stacked[dpl, gi]
                med = np.nanmedian(row)
                if math.isnan(med):
                    med = 0.0
                row[np.isnan(row)] = med
    if not genes_final:
        raise AlignmentError("no genes left after missing-value handling; " + "; ".join(stages))

    X = PredictorArray(np.transpose(stacked, (0, 2, 1)))  # (d, samples, genes)
    y = np.array([clinical.tmb[s] for s in samples_sorted])
    return MultiOmicsDataset(
        X=X,
        Y=ResponseBlock(y[:, None]),
        genes=tuple(genes_final),
        samples=tuple(samples_sorted),
        platforms=tuple(name for _, _, _, name in cleaned),
    )


def run_real_study(
    dataset: MultiOmicsDataset,
    methods: Sequence[MeasureKind],
    opts: MeasureOptions | None = None,
    out_dir=None,
    threads: int = 1,
    k: int | None = None,
) -> dict:
    """Per-method gene rankings, top-[n/log n] selections, and their
    intersection; optionally written as CSV + JSON."""
    for kind in methods:
        check_compatibility(kind, dataset.X.d, dataset.Y.q)
    n = dataset.X.n
    k = cutoff(n) if k is None else k
    genes = list(dataset.genes)
    selections = {}
    tables = {}
    for kind in methods:
        table = score_all(dataset.X, dataset.Y, kind, opts, threads=threads)
        tables[kind.value] = table
        selections[kind.value] = top_k(table, k, genes)
    common = intersect_selections(list(selections.values()))
    result = {
        "n": n,
        "p": dataset.X.p,
        "platforms": list(dataset.platforms),
        "cutoff": k,
        "methods": list(selections),
        "selections": selections,
        "intersection": common,
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, table in tables.items():
            ranking = rank_features(table)
            lines = ["gene,utility,rank"]
            for r, j in enumerate(ranking, start=1):
                lines.append(f"{genes[j - 1]},{format(table.utilities[j - 1], 'g')},{r}")
            safe = name.replace("/", "-")
            (out / f"selection_{safe}.csv").write_text("\n".join(lines) + "\n",
                                                       encoding="utf-8")
        (out / "intersection.csv").write_text(
            "\n".join(["gene"] + common) + "\n", encoding="utf-8")
        (out / "real_study.json").write_text(
            json.dumps(result, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return result

"""Aggregation of paragraph reports into model-level summaries, plus
human-vs-automatic agreement statistics (Pearson r, exact-match rate)."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .core import ParagraphReport


class AnalysisError(Exception):
    pass


class ZeroVariance(AnalysisError):
    """A constant series carries no correlation signal; silently
    returning 0 would hide a broken export."""


class LengthMismatch(AnalysisError):
    pass


class EmptyInput(AnalysisError):
    pass


class InsufficientOverlap(AnalysisError):
    pass


@dataclass(frozen=True)
class PairedSeries:
    ids: tuple[str, ...]
    human: tuple[float, ...]
    auto: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (len(self.ids) == len(self.human) == len(self.auto)):
            raise LengthMismatch("ids, human, and auto must have equal length")
        if len(self.ids) < 2:
            raise ValueError("a paired series needs at least 2 points")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("series ids must be unique")


@dataclass(frozen=True)
class ModelSummary:
    model_tag: str
    mean_fs: float
    mean_dfs: float
    mean_num_bios: float
    mean_num_entities: float
    mean_citation_recall: Optional[float]
    n_paragraphs: int
    n_unscorable: int = 0


def pearson_r(series: PairedSeries) -> float:
    """Sample Pearson correlation between the human and automatic
    series.

    Raises:
        ZeroVariance: either series is constant.
    """
    n = len(series.ids)
    mean_h = math.fsum(series.human) / n
    mean_a = math.fsum(series.auto) / n
    dh = [h - mean_h for h in series.human]
    da = [a - mean_a for a in series.auto]
    var_h = math.fsum(d * d for d in dh)
    var_a = math.fsum(d * d for d in da)
    if var_h == 0.0 or var_a == 0.0:
        raise ZeroVariance("cannot correlate a constant series")
    cov = math.fsum(x * y for x, y in zip(dh, da))
    return cov / math.sqrt(var_h * var_a)


def agreement_rate(a: Sequence, b: Sequence) -> Fraction:
    """Fraction of positions where two label sequences agree exactly.

    Raises:
        LengthMismatch: the sequences differ in length or are empty.
    """
    if len(a) != len(b) or len(a) == 0:
        raise LengthMismatch(f"need equal non-empty label lists, got {len(a)} and {len(b)}")
    matches = sum(1 for x, y in zip(a, b) if x == y)
    return Fraction(matches, len(a))


def aggregate(reports: Sequence[ParagraphReport], model_tag: str, n_unscorable: int = 0) -> ModelSummary:
    """Arithmetic means over scorable paragraphs. Citation recall
    averages only the paragraphs that have it.

    Raises:
        EmptyInput: no reports.
    """
    if not reports:
        raise EmptyInput("no reports to aggregate")
    n = len(reports)
    recalls = [r.citation_recall for r in reports if r.citation_recall is not None]
    return ModelSummary(
        model_tag=model_tag,
        mean_fs=math.fsum(float(r.fs) for r in reports) / n,
        mean_dfs=math.fsum(float(r.dfs) for r in reports) / n,
        mean_num_bios=math.fsum(r.num_bios for r in reports) / n,
        mean_num_entities=math.fsum(r.num_entities for r in reports) / n,
        mean_citation_recall=(
            math.fsum(float(x) for x in recalls) / len(recalls) if recalls else None
        ),
        n_paragraphs=n,
        n_unscorable=n_unscorable,
    )


@dataclass(frozen=True)
class CorrelationReport:
    """Pearson r of D-FS and bio counts between a human export and
    automatic reports, per model and pooled."""

    per_model: dict[str, tuple[float, float]]  # tag -> (r_dfs, r_num_bios)
    pooled_dfs: float
    pooled_num_bios: float
    n_overlap: int


def compare_human_auto(
    human_rows: Sequence[Mapping],
    auto_rows: Sequence[Mapping],
) -> CorrelationReport:
    """Align human and automatic rows on paragraph_id and correlate
    their dfs_pct and num_bios columns.

    Rows need paragraph_id, dfs_pct, and num_bios; the human rows may
    carry a model_tag for the per-model breakdown.

    Raises:
        InsufficientOverlap: fewer than 2 shared paragraph ids.
    """
    auto_by_id = {row["paragraph_id"]: row for row in auto_rows}
    paired = [
        (row, auto_by_id[row["paragraph_id"]])
        for row in human_rows
        if row["paragraph_id"] in auto_by_id
        and row.get("dfs_pct") is not None
        and auto_by_id[row["paragraph_id"]].get("dfs_pct") is not None
    ]
    if len(paired) < 2:
        raise InsufficientOverlap(f"only {len(paired)} overlapping paragraphs")

    def series(rows: Sequence[tuple[Mapping, Mapping]], key: str) -> PairedSeries:
        return PairedSeries(
            ids=tuple(h["paragraph_id"] for h, _ in rows),
            human=tuple(float(h[key]) for h, _ in rows),
            auto=tuple(float(a[key]) for _, a in rows),
        )

    def correlate(rows: Sequence[tuple[Mapping, Mapping]], key: str) -> float:
        try:
            return pearson_r(series(rows, key))
        except ZeroVariance as exc:
            raise ZeroVariance(f"{key} over {len(rows)} paragraphs: {exc}") from None

    per_model: dict[str, tuple[float, float]] = {}
    tags = sorted({h.get("model_tag", "") for h, _ in paired if h.get("model_tag")})
    for tag in tags:
        rows = [(h, a) for h, a in paired if h.get("model_tag") == tag]
        if len(rows) < 2:
            continue
        per_model[tag] = (
            correlate(rows, "dfs_pct"),
            correlate(rows, "num_bios"),
        )
    return CorrelationReport(
        per_model=per_model,
        pooled_dfs=correlate(paired, "dfs_pct"),
        pooled_num_bios=correlate(paired, "num_bios"),
        n_overlap=len(paired),
    )


# --------------------------------------------------------------------------
# Table rendering and exports
# --------------------------------------------------------------------------


def _cell(left: Optional[float], right: Optional[float]) -> str:
    def fmt(v: Optional[float]) -> str:
        return "-" if v is None else f"{v:.1f}"

    if right is None:
        return fmt(left)
    return f"{fmt(left)} / {fmt(right)}"


def render_summary_table(
    summaries: Sequence[ModelSummary],
    paired: Optional[Mapping[str, ModelSummary]] = None,
) -> str:
    """Fixed-width text table of per-model means as one-decimal
    percentages. When ``paired`` holds a second run per model tag, each
    cell renders "left / right" (e.g. with / without ambiguous demos)."""
    headers = ["model", "FS", "D-FS", "#bios", "#ent.", "cit.rec.", "n"]
    rows = []
    for s in summaries:
        other = paired.get(s.model_tag) if paired else None

        def pct(v: Optional[float]) -> Optional[float]:
            return None if v is None else 100.0 * v

        rows.append(
            [
                s.model_tag,
                _cell(pct(s.mean_fs), pct(other.mean_fs) if other else None),
                _cell(pct(s.mean_dfs), pct(other.mean_dfs) if other else None),
                _cell(s.mean_num_bios, other.mean_num_bios if other else None),
                _cell(s.mean_num_entities, other.mean_num_entities if other else None),
                _cell(
                    pct(s.mean_citation_recall),
                    pct(other.mean_citation_recall) if other else None,
                ),
                str(s.n_paragraphs),
            ]
        )
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) if rows else len(headers[i]) for i in range(len(headers))]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines) + "\n"


def summary_to_json(summaries: Sequence[ModelSummary]) -> str:
    payload = [
        {
            "model_tag": s.model_tag,
            "mean_fs": s.mean_fs,
            "mean_dfs": s.mean_dfs,
            "mean_num_bios": s.mean_num_bios,
            "mean_num_entities": s.mean_num_entities,
            "mean_citation_recall": s.mean_citation_recall,
            "n_paragraphs": s.n_paragraphs,
            "n_unscorable": s.n_unscorable,
        }
        for s in summaries
    ]
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def summary_to_csv(summaries: Sequence[ModelSummary]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        [
            "model_tag",
            "mean_fs",
            "mean_dfs",
            "mean_num_bios",
            "mean_num_entities",
            "mean_citation_recall",
            "n_paragraphs",
            "n_unscorable",
        ]
    )
    for s in summaries:
        writer.writerow(
            [
                s.model_tag,
                f"{s.mean_fs:.6f}",
                f"{s.mean_dfs:.6f}",
                f"{s.mean_num_bios:.6f}",
                f"{s.mean_num_entities:.6f}",
                "" if s.mean_citation_recall is None else f"{s.mean_citation_recall:.6f}",
                s.n_paragraphs,
                s.n_unscorable,
            ]
        )
    return buffer.getvalue()

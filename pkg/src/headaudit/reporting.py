"""Corpus-level reporting: aggregates, distributions, files, sample sizing.

Reports serialize to one JSON record per line so large runs stream; the
table renderers produce CSV with a header row, ready for a spreadsheet or
a plotting script. All averages and percentages are rounded half-up to
two decimals.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from statistics import NormalDist

from .fetcher import ScanTarget
from .scoring import (
    CATEGORY_ORDER,
    Category,
    DISPLAY_NAMES,
    GRADE_BANDS,
    ScanReport,
    TestResult,
)

GRADES: tuple[str, ...] = tuple(band[0] for band in GRADE_BANDS)

UNCATEGORIZED = "Unknown"


def _round2(value: float) -> float:
    return float(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class CategoryAggregate:
    """Score statistics for one site category."""

    category: str
    count: int
    avg_score: float
    max_score: int
    min_score: int


@dataclass
class GradeDistribution:
    """Grade counts and shares, overall and per site category."""

    total: int
    counts: dict[str, int]
    percentages: dict[str, float]
    by_category: dict[str, dict[str, int]] = field(default_factory=dict)


@dataclass
class HeaderCategoryMatrix:
    """Average modifier of each security check per site category."""

    checks: list[str]
    categories: list[str]
    cells: dict[tuple[str, str], float]  # (check id, category label) -> avg


def _label(report: ScanReport) -> str:
    return report.target.category or UNCATEGORIZED


def aggregate_by_category(reports: list[ScanReport]) -> list[CategoryAggregate]:
    """One row per site category: count, average, max, min of final scores.

    Sorted by count descending, then label, so the busiest categories
    lead the table regardless of input order.
    """
    buckets: dict[str, list[int]] = {}
    for report in reports:
        buckets.setdefault(_label(report), []).append(report.final_score)
    rows = [
        CategoryAggregate(
            category=label,
            count=len(scores),
            avg_score=_round2(sum(scores) / len(scores)),
            max_score=max(scores),
            min_score=min(scores),
        )
        for label, scores in buckets.items()
    ]
    rows.sort(key=lambda row: (-row.count, row.category))
    return rows


def grade_distribution(reports: list[ScanReport]) -> GradeDistribution:
    """Count reports per grade; percentages of the total, to 2 decimals."""
    counts = {grade: 0 for grade in GRADES}
    by_category: dict[str, dict[str, int]] = {}
    for report in reports:
        counts[report.grade] += 1
        per = by_category.setdefault(_label(report), {grade: 0 for grade in GRADES})
        per[report.grade] += 1
    total = len(reports)
    percentages = {
        grade: _round2(100.0 * n / total) if total else 0.0 for grade, n in counts.items()
    }
    return GradeDistribution(
        total=total, counts=counts, percentages=percentages, by_category=by_category
    )


def header_matrix(reports: list[ScanReport]) -> HeaderCategoryMatrix:
    """Average per-check modifier for each site category; empty cells absent."""
    sums: dict[tuple[str, str], int] = {}
    counts: dict[tuple[str, str], int] = {}
    labels: set[str] = set()
    for report in reports:
        label = _label(report)
        labels.add(label)
        for result in report.results:
            key = (result.category.value, label)
            sums[key] = sums.get(key, 0) + result.modifier
            counts[key] = counts.get(key, 0) + 1
    cells = {key: _round2(sums[key] / counts[key]) for key in sums}
    return HeaderCategoryMatrix(
        checks=[c.value for c in CATEGORY_ORDER],
        categories=sorted(labels),
        cells=cells,
    )


# z-values the literature quotes for the common confidence levels; other
# levels fall back to the exact normal quantile.
_Z_TABLE = {0.90: 1.645, 0.95: 1.960, 0.99: 2.576}


def _z_for(confidence: float) -> float:
    for level, z in _Z_TABLE.items():
        if math.isclose(confidence, level, abs_tol=1e-9):
            return z
    return NormalDist().inv_cdf((1.0 + confidence) / 2.0)


def sample_size(population: int | None, confidence: float = 0.95, margin: float = 0.10) -> int:
    """Cochran sample size at p=0.5 with finite-population correction.

    ``population=None`` means unbounded (no correction). The result is
    rounded up to a whole respondent.
    """
    if not 0.0 < margin < 1.0:
        raise ValueError(f"margin must be in (0, 1): {margin}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must be in (0, 1): {confidence}")
    if population is not None and population < 1:
        raise ValueError(f"population must be positive: {population}")

    z = _z_for(confidence)
    n0 = z * z * 0.25 / (margin * margin)
    if population is None:
        return math.ceil(round(n0, 9))
    corrected = n0 / (1.0 + (n0 - 1.0) / population)
    return math.ceil(round(corrected, 9))


def report_to_record(report: ScanReport) -> dict:
    return {
        "domain": report.target.domain,
        "rank": report.target.rank,
        "category": report.target.category,
        "final_url": report.final_url,
        "unreachable": report.unreachable,
        "body_truncated": report.body_truncated,
        "baseline": report.baseline,
        "score": report.final_score,
        "grade": report.grade,
        "results": [
            {
                "category": r.category.value,
                "outcome": r.outcome,
                "modifier": r.modifier,
                "reason": r.reason,
            }
            for r in report.results
        ],
    }


def report_from_record(record: dict) -> ScanReport:
    return ScanReport(
        target=ScanTarget(
            domain=record["domain"],
            rank=record.get("rank"),
            category=record.get("category"),
        ),
        results=[
            TestResult(
                category=Category(r["category"]),
                outcome=r["outcome"],
                modifier=r["modifier"],
                reason=r["reason"],
            )
            for r in record["results"]
        ],
        baseline=record["baseline"],
        final_score=record["score"],
        grade=record["grade"],
        unreachable=record["unreachable"],
        final_url=record.get("final_url"),
        body_truncated=record.get("body_truncated", False),
    )


def dump_records(reports: list[ScanReport]) -> str:
    """One sorted-key JSON record per line: stable bytes for stable input."""
    lines = [json.dumps(report_to_record(r), sort_keys=True) for r in reports]
    return "".join(line + "\n" for line in lines)


def load_records(text: str) -> list[ScanReport]:
    return [report_from_record(json.loads(line)) for line in text.splitlines() if line.strip()]


def write_reports(path, reports: list[ScanReport]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_records(reports))


def read_reports(path) -> list[ScanReport]:
    with open(path, encoding="utf-8") as fh:
        return load_records(fh.read())


def _csv(rows: list[list]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerows(rows)
    return out.getvalue()


def render_category_table(rows: list[CategoryAggregate]) -> str:
    data = [["category", "count", "avg_score", "max_score", "min_score"]]
    data += [
        [row.category, row.count, f"{row.avg_score:.2f}", row.max_score, row.min_score]
        for row in rows
    ]
    return _csv(data)


def render_grade_table(dist: GradeDistribution) -> str:
    data = [["grade", "count", "percentage"]]
    data += [[grade, dist.counts[grade], f"{dist.percentages[grade]:.2f}"] for grade in GRADES]
    data.append(["total", dist.total, "100.00" if dist.total else "0.00"])
    return _csv(data)


def render_matrix_table(matrix: HeaderCategoryMatrix) -> str:
    data = [["check"] + matrix.categories]
    for check in matrix.checks:
        row: list = [check]
        for label in matrix.categories:
            value = matrix.cells.get((check, label))
            row.append("" if value is None else f"{value:.2f}")
        data.append(row)
    return _csv(data)


def render_report_table(report: ScanReport, detail: bool = False) -> str:
    """Human overview of one scan: twelve rows plus the verdict line."""
    width = max(len(DISPLAY_NAMES[c]) for c in CATEGORY_ORDER)
    lines = [f"{report.target.domain}  score {report.final_score}  grade {report.grade}"]
    if report.unreachable:
        lines.append("  (unreachable)")
    elif report.final_url:
        lines.append(f"  landed on {report.final_url}")
    for result in report.results:
        name = DISPLAY_NAMES[result.category].ljust(width)
        lines.append(f"  {name}  {result.modifier:+4d}  {result.outcome}")
        if detail:
            lines.append(f"  {' ' * width}        {result.reason}")
    return "\n".join(lines) + "\n"

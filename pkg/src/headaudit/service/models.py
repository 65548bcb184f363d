"""Request and response models for the audit service.

The report model mirrors the on-disk record shape field for field, so a
service response line and a stored JSONL record are interchangeable.
"""

from __future__ import annotations

from pydantic import BaseModel, Field, field_validator

from ..batch import BatchConfig, RunManifest, default_fetch_config
from ..fetcher import (
    DEFAULT_BODY_CAP,
    DEFAULT_MAX_REDIRECTS,
    DEFAULT_TIMEOUT,
    FetchConfig,
    ScanTarget,
)
from ..reporting import (
    CategoryAggregate,
    GradeDistribution,
    HeaderCategoryMatrix,
    report_from_record,
    report_to_record,
)
from ..scoring import ScanReport


class FetchSettings(BaseModel):
    """Per-request fetch knobs; None user_agent keeps the server default."""

    timeout: float = Field(default=DEFAULT_TIMEOUT, gt=0)
    max_redirects: int = Field(default=DEFAULT_MAX_REDIRECTS, ge=1)
    user_agent: str | None = None
    body_cap: int = Field(default=DEFAULT_BODY_CAP, ge=1)
    http_port: int = Field(default=80, ge=1, le=65535)
    https_port: int = Field(default=443, ge=1, le=65535)
    verify_tls: bool = True
    connect_host: str | None = None
    probe_cors: bool = True
    probe_contribute: bool = True

    def to_config(self) -> FetchConfig:
        values = self.model_dump()
        if values.get("user_agent") is None:
            values.pop("user_agent")
        return default_fetch_config(**values)


def _check_domain(value: str) -> str:
    ScanTarget(domain=value)  # raises ValueError on bad input -> 422
    return value


class TargetIn(BaseModel):
    domain: str
    rank: int | None = Field(default=None, ge=1)
    category: str | None = None

    _domain_ok = field_validator("domain")(_check_domain)

    def to_target(self) -> ScanTarget:
        return ScanTarget(domain=self.domain, rank=self.rank, category=self.category)


class ScanRequest(TargetIn):
    strict_contribute: bool = False
    fetch: FetchSettings = Field(default_factory=FetchSettings)


class TestResultOut(BaseModel):
    category: str
    outcome: str
    modifier: int
    reason: str


class ScanReportOut(BaseModel):
    domain: str
    rank: int | None = None
    category: str | None = None
    final_url: str | None = None
    unreachable: bool = False
    body_truncated: bool = False
    baseline: int
    score: int
    grade: str
    results: list[TestResultOut]

    @classmethod
    def from_report(cls, report: ScanReport) -> "ScanReportOut":
        return cls.model_validate(report_to_record(report))

    def to_report(self) -> ScanReport:
        return report_from_record(self.model_dump())


class BatchRequest(BaseModel):
    targets: list[TargetIn]
    concurrency: int = Field(default=8, ge=1, le=64)
    strict_contribute: bool = False
    retry_transient: bool = True
    fetch: FetchSettings = Field(default_factory=FetchSettings)

    def to_config(self) -> BatchConfig:
        return BatchConfig(
            fetch=self.fetch.to_config(),
            concurrency=self.concurrency,
            strict_contribute=self.strict_contribute,
            retry_transient=self.retry_transient,
        )


class RunTotals(BaseModel):
    requested: int
    succeeded: int
    unreachable: int


class ManifestOut(BaseModel):
    started: str
    finished: str
    totals: RunTotals
    config: dict

    @classmethod
    def from_manifest(cls, manifest: RunManifest) -> "ManifestOut":
        return cls.model_validate(manifest.to_record())


class BatchResponse(BaseModel):
    reports: list[ScanReportOut]
    manifest: ManifestOut


class ReportsIn(BaseModel):
    """Stored report records posted back for aggregation."""

    reports: list[ScanReportOut]

    def to_reports(self) -> list[ScanReport]:
        return [r.to_report() for r in self.reports]


class CategoryRow(BaseModel):
    category: str
    count: int
    avg_score: float
    max_score: int
    min_score: int

    @classmethod
    def from_aggregate(cls, agg: CategoryAggregate) -> "CategoryRow":
        return cls(
            category=agg.category,
            count=agg.count,
            avg_score=agg.avg_score,
            max_score=agg.max_score,
            min_score=agg.min_score,
        )


class CategoryAggregateOut(BaseModel):
    rows: list[CategoryRow]


class GradeDistributionOut(BaseModel):
    total: int
    counts: dict[str, int]
    percentages: dict[str, float]
    by_category: dict[str, dict[str, int]]

    @classmethod
    def from_distribution(cls, dist: GradeDistribution) -> "GradeDistributionOut":
        return cls(
            total=dist.total,
            counts=dist.counts,
            percentages=dist.percentages,
            by_category=dist.by_category,
        )


class MatrixCell(BaseModel):
    check: str
    category: str
    avg_modifier: float


class MatrixOut(BaseModel):
    checks: list[str]
    categories: list[str]
    cells: list[MatrixCell]

    @classmethod
    def from_matrix(cls, matrix: HeaderCategoryMatrix) -> "MatrixOut":
        cells = [
            MatrixCell(check=check, category=category, avg_modifier=avg)
            for (check, category), avg in sorted(matrix.cells.items())
        ]
        return cls(checks=matrix.checks, categories=matrix.categories, cells=cells)


class SampleSizeRequest(BaseModel):
    population: int | None = Field(default=None, ge=1)
    confidence: float = Field(default=0.95, gt=0, lt=1)
    margin: float = Field(default=0.10, gt=0, lt=1)


class SampleSizeResponse(SampleSizeRequest):
    sample_size: int

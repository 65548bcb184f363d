"""FastAPI application exposing scans, batches, and aggregation.

Endpoints are plain ``def`` so the blocking network work runs on the
framework's worker threads; the core package is thread-safe by design.
"""

from __future__ import annotations

from fastapi import FastAPI

from .. import __version__
from ..batch import run_batch
from ..reporting import (
    aggregate_by_category,
    grade_distribution,
    header_matrix,
    sample_size,
)
from ..scanner import scan_target
from .models import (
    BatchRequest,
    BatchResponse,
    CategoryAggregateOut,
    CategoryRow,
    GradeDistributionOut,
    ManifestOut,
    MatrixOut,
    ReportsIn,
    SampleSizeRequest,
    SampleSizeResponse,
    ScanReportOut,
    ScanRequest,
)


def create_app() -> FastAPI:
    app = FastAPI(
        title="headaudit",
        version=__version__,
        description="Security-header auditing: scan sites, score twelve "
        "surfaces, aggregate the results.",
    )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/scan", response_model=ScanReportOut)
    def scan(request: ScanRequest) -> ScanReportOut:
        report = scan_target(
            request.to_target(),
            config=request.fetch.to_config(),
            strict_contribute=request.strict_contribute,
        )
        return ScanReportOut.from_report(report)

    @app.post("/batch", response_model=BatchResponse)
    def batch(request: BatchRequest) -> BatchResponse:
        targets = [t.to_target() for t in request.targets]
        reports, manifest = run_batch(targets, request.to_config())
        return BatchResponse(
            reports=[ScanReportOut.from_report(r) for r in reports],
            manifest=ManifestOut.from_manifest(manifest),
        )

    @app.post("/aggregate/category", response_model=CategoryAggregateOut)
    def aggregate_category(payload: ReportsIn) -> CategoryAggregateOut:
        rows = aggregate_by_category(payload.to_reports())
        return CategoryAggregateOut(rows=[CategoryRow.from_aggregate(r) for r in rows])

    @app.post("/aggregate/grade", response_model=GradeDistributionOut)
    def aggregate_grade(payload: ReportsIn) -> GradeDistributionOut:
        return GradeDistributionOut.from_distribution(grade_distribution(payload.to_reports()))

    @app.post("/aggregate/header", response_model=MatrixOut)
    def aggregate_header(payload: ReportsIn) -> MatrixOut:
        return MatrixOut.from_matrix(header_matrix(payload.to_reports()))

    @app.post("/sample-size", response_model=SampleSizeResponse)
    def sample(request: SampleSizeRequest) -> SampleSizeResponse:
        n = sample_size(request.population, request.confidence, request.margin)
        return SampleSizeResponse(sample_size=n, **request.model_dump())

    return app

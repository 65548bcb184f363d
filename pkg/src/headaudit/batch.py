"""Batch scanning: ranked-list ingestion, bounded parallelism, run artifacts.

Politeness rules: at most ``concurrency`` scans in flight overall and at
most one in-flight request per distinct host. A transient network failure
earns one retry; anything else is recorded and the run moves on.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .fetcher import (
    FAILURE_CONNECT_TIMEOUT,
    FAILURE_NETWORK,
    FAILURE_READ_TIMEOUT,
    FAILURE_REFUSED,
    DEFAULT_USER_AGENT,
    FetchConfig,
    Hop,
    HttpExchange,
    RedirectChain,
    ScanTarget,
    fetch,
)
from .reporting import read_reports, write_reports
from .scanner import evaluate_exchange
from .scoring import ScanReport

log = logging.getLogger(__name__)

DEFAULT_CONCURRENCY = 8
USER_AGENT_ENV = "HEADAUDIT_USER_AGENT"

REPORTS_FILENAME = "reports.jsonl"
MANIFEST_FILENAME = "manifest.json"

# Failure kinds worth one more attempt; DNS, TLS, and redirect loops are
# treated as properties of the target, not of the moment.
_TRANSIENT_FAILURES = {
    FAILURE_CONNECT_TIMEOUT,
    FAILURE_READ_TIMEOUT,
    FAILURE_REFUSED,
    FAILURE_NETWORK,
}


def default_fetch_config(**overrides) -> FetchConfig:
    """FetchConfig with the environment's user-agent override applied."""
    if "user_agent" not in overrides:
        env_ua = os.environ.get(USER_AGENT_ENV)
        if env_ua:
            overrides["user_agent"] = env_ua
    return FetchConfig(**overrides)


@dataclass
class BatchConfig:
    fetch: FetchConfig = field(default_factory=default_fetch_config)
    concurrency: int = DEFAULT_CONCURRENCY
    strict_contribute: bool = False
    retry_transient: bool = True

    def __post_init__(self):
        if self.concurrency < 1:
            raise ValueError("concurrency must be at least 1")


@dataclass
class RunManifest:
    """Accounting for one batch run. succeeded + unreachable == requested."""

    started: str
    finished: str
    requested: int
    succeeded: int
    unreachable: int
    config: dict

    def to_record(self) -> dict:
        return {
            "started": self.started,
            "finished": self.finished,
            "totals": {
                "requested": self.requested,
                "succeeded": self.succeeded,
                "unreachable": self.unreachable,
            },
            "config": self.config,
        }

    @classmethod
    def from_record(cls, record: dict) -> "RunManifest":
        totals = record["totals"]
        return cls(
            started=record["started"],
            finished=record["finished"],
            requested=totals["requested"],
            succeeded=totals["succeeded"],
            unreachable=totals["unreachable"],
            config=record.get("config", {}),
        )


def load_category_map(path) -> dict[str, str]:
    """Side-file of ``domain,category`` lines for lists without labels."""
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8-sig") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            if len(row) >= 2 and row[0].strip():
                mapping[row[0].strip().lower()] = row[1].strip()
    return mapping


def load_targets(
    path,
    limit: int | None = None,
    category_map: dict[str, str] | None = None,
) -> list[ScanTarget]:
    """Parse ``rank,domain[,category]`` lines into targets.

    Duplicate domains keep their first (best) rank; malformed lines are
    skipped with a warning rather than killing the run. ``limit`` keeps
    the top K of the parsed list.
    """
    targets: list[ScanTarget] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8-sig") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].strip() or row[0].strip().startswith("#"):
                continue
            if len(row) < 2:
                log.warning("%s:%d: expected rank,domain[,category]; skipped", path, lineno)
                continue
            rank_text, domain = row[0].strip(), row[1].strip().lower()
            category = row[2].strip() if len(row) > 2 and row[2].strip() else None
            try:
                rank = int(rank_text)
            except ValueError:
                log.warning("%s:%d: bad rank %r; skipped", path, lineno, rank_text)
                continue
            if domain in seen:
                log.warning("%s:%d: duplicate domain %r; keeping first occurrence", path, lineno, domain)
                continue
            if category is None and category_map:
                category = category_map.get(domain)
            try:
                target = ScanTarget(domain=domain, rank=rank, category=category)
            except ValueError as exc:
                log.warning("%s:%d: %s; skipped", path, lineno, exc)
                continue
            seen.add(domain)
            targets.append(target)
            if limit is not None and len(targets) >= limit:
                break
    return targets


def _failed_exchange(target: ScanTarget) -> HttpExchange:
    url = f"http://{target.domain}/"
    chain = RedirectChain(
        hops=[Hop(url=url, scheme="http", host=target.domain, status=None, location=None)],
        failure=FAILURE_NETWORK,
    )
    return HttpExchange(target=target, chain=chain, unreachable=True)


def _scan_one(target: ScanTarget, config: BatchConfig, host_lock: threading.Lock) -> ScanReport:
    with host_lock:
        try:
            exchange = fetch(target, config.fetch)
            if (
                config.retry_transient
                and exchange.unreachable
                and exchange.chain.failure in _TRANSIENT_FAILURES
            ):
                exchange = fetch(target, config.fetch)
        except Exception:
            log.exception("scan of %s failed unexpectedly", target.domain)
            exchange = _failed_exchange(target)
    return evaluate_exchange(exchange, strict_contribute=config.strict_contribute)


def run_batch(targets: list[ScanTarget], config: BatchConfig | None = None) -> tuple[list[ScanReport], RunManifest]:
    """Scan every target; reports come back in rank order regardless of
    completion order, and one bad target never sinks the run."""
    config = config or BatchConfig()
    if all(t.rank is not None for t in targets):
        targets = sorted(targets, key=lambda t: (t.rank, t.domain))

    started = datetime.now(timezone.utc).isoformat()
    reports: list[ScanReport | None] = [None] * len(targets)

    locks: dict[str, threading.Lock] = {}
    for target in targets:
        locks.setdefault(target.domain.lower(), threading.Lock())

    if targets:
        with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
            futures = {
                pool.submit(_scan_one, target, config, locks[target.domain.lower()]): index
                for index, target in enumerate(targets)
            }
            for future, index in futures.items():
                reports[index] = future.result()

    finished = datetime.now(timezone.utc).isoformat()
    done: list[ScanReport] = [r for r in reports if r is not None]
    unreachable = sum(1 for r in done if r.unreachable)
    manifest = RunManifest(
        started=started,
        finished=finished,
        requested=len(targets),
        succeeded=len(targets) - unreachable,
        unreachable=unreachable,
        config={
            "concurrency": config.concurrency,
            "strict_contribute": config.strict_contribute,
            "retry_transient": config.retry_transient,
            **config.fetch.snapshot(),
        },
    )
    return done, manifest


def write_run(out_dir, reports: list[ScanReport], manifest: RunManifest) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_reports(out / REPORTS_FILENAME, reports)
    with open(out / MANIFEST_FILENAME, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest.to_record(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_run(out_dir) -> tuple[list[ScanReport], RunManifest]:
    out = Path(out_dir)
    reports = read_reports(out / REPORTS_FILENAME)
    with open(out / MANIFEST_FILENAME, encoding="utf-8") as fh:
        manifest = RunManifest.from_record(json.load(fh))
    return reports, manifest

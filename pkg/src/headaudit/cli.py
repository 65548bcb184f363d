"""Command-line front end.

Every subcommand is a thin client of the HTTP service: by default the
service app is mounted in-process (no sockets involved), while
``--server`` points the same calls at a remote instance started with
``headaudit serve``. File reading and writing stays local either way.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from pathlib import Path

import httpx

from . import __version__
from .batch import (
    MANIFEST_FILENAME,
    REPORTS_FILENAME,
    RunManifest,
    USER_AGENT_ENV,
    load_category_map,
    load_targets,
)
from .fetcher import (
    DEFAULT_BODY_CAP,
    DEFAULT_MAX_REDIRECTS,
    DEFAULT_TIMEOUT,
    DEFAULT_USER_AGENT,
)
from .reporting import (
    CategoryAggregate,
    GradeDistribution,
    HeaderCategoryMatrix,
    load_records,
    render_category_table,
    render_grade_table,
    render_matrix_table,
    render_report_table,
    report_to_record,
)

_GRADE_COLORS = {"A": "32", "B": "33", "C": "33", "D": "31", "F": "31"}


def _colorize_grade(text: str, grade: str) -> str:
    if not sys.stdout.isatty():
        return text
    color = _GRADE_COLORS.get(grade[:1], "0")
    return text.replace(f"grade {grade}", f"grade \x1b[1;{color}m{grade}\x1b[0m")


async def _request_async(server: str | None, method: str, path: str, payload: dict | None) -> dict:
    if server:
        client = httpx.AsyncClient(base_url=server, timeout=600.0)
    else:
        from .service.app import create_app

        transport = httpx.ASGITransport(app=create_app())
        client = httpx.AsyncClient(transport=transport, base_url="http://headaudit.local", timeout=None)
    async with client:
        response = await client.request(method, path, json=payload)
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise SystemExit(f"error: service answered {response.status_code}: {detail}")
    return response.json()


def _call(args, method: str, path: str, payload: dict | None = None) -> dict:
    server = getattr(args, "server", None)
    try:
        return asyncio.run(_request_async(server, method, path, payload))
    except httpx.HTTPError as exc:
        raise SystemExit(f"error: cannot reach service at {server}: {exc}")


def _fetch_settings(args) -> dict:
    settings = {
        "timeout": args.timeout,
        "max_redirects": args.max_redirects,
        "body_cap": args.body_cap,
        "http_port": args.http_port,
        "https_port": args.https_port,
        "verify_tls": not args.insecure,
        "connect_host": args.connect_host,
        "probe_cors": not args.no_cors_probe,
        "probe_contribute": not args.no_contribute_probe,
    }
    user_agent = args.user_agent or os.environ.get(USER_AGENT_ENV)
    if user_agent:
        settings["user_agent"] = user_agent
    return settings


def _print_report(record: dict, fmt: str) -> None:
    if fmt == "records":
        print(json.dumps(record, sort_keys=True))
        return
    from .reporting import report_from_record

    report = report_from_record(record)
    text = render_report_table(report, detail=(fmt == "detail"))
    first, rest = text.split("\n", 1)
    print(_colorize_grade(first, report.grade))
    print(rest, end="")


def _cmd_scan(args) -> int:
    payload = {
        "domain": args.domain,
        "rank": args.rank,
        "category": args.category,
        "strict_contribute": args.strict,
        "fetch": _fetch_settings(args),
    }
    record = _call(args, "POST", "/scan", payload)
    _print_report(record, args.format)
    if args.strict and record["unreachable"]:
        return 1
    return 0


def _cmd_batch(args) -> int:
    for path in (args.input, args.categories):
        if path and not Path(path).exists():
            raise SystemExit(f"error: {path} not found")
    category_map = load_category_map(args.categories) if args.categories else None
    targets = load_targets(args.input, limit=args.limit, category_map=category_map)
    if not targets:
        print("no targets parsed from input", file=sys.stderr)
    payload = {
        "targets": [
            {"domain": t.domain, "rank": t.rank, "category": t.category} for t in targets
        ],
        "concurrency": args.concurrency,
        "strict_contribute": args.strict,
        "fetch": _fetch_settings(args),
    }
    body = _call(args, "POST", "/batch", payload)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / REPORTS_FILENAME, "w", encoding="utf-8", newline="\n") as fh:
        for record in body["reports"]:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    with open(out / MANIFEST_FILENAME, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(body["manifest"], fh, indent=2, sort_keys=True)
        fh.write("\n")

    totals = body["manifest"]["totals"]
    print(
        f"scanned {totals['requested']} targets: {totals['succeeded']} ok, "
        f"{totals['unreachable']} unreachable -> {out}"
    )
    if args.strict and totals["unreachable"] > 0:
        return 1
    return 0


def _cmd_aggregate(args) -> int:
    reports_path = Path(args.reports_dir) / REPORTS_FILENAME
    if not reports_path.exists():
        raise SystemExit(f"error: {reports_path} not found")
    with open(reports_path, encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    body = _call(args, "POST", f"/aggregate/{args.by}", {"reports": records})

    if args.by == "category":
        rows = [CategoryAggregate(**row) for row in body["rows"]]
        print(render_category_table(rows), end="")
    elif args.by == "grade":
        dist = GradeDistribution(
            total=body["total"],
            counts=body["counts"],
            percentages=body["percentages"],
            by_category=body["by_category"],
        )
        print(render_grade_table(dist), end="")
    else:
        matrix = HeaderCategoryMatrix(
            checks=body["checks"],
            categories=body["categories"],
            cells={(c["check"], c["category"]): c["avg_modifier"] for c in body["cells"]},
        )
        print(render_matrix_table(matrix), end="")
    return 0


def _cmd_sample_size(args) -> int:
    payload = {
        "population": args.population,
        "confidence": args.confidence,
        "margin": args.margin,
    }
    body = _call(args, "POST", "/sample-size", payload)
    print(body["sample_size"])
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def _add_fetch_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("fetch options")
    group.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="per-request timeout in seconds (default %(default)s)")
    group.add_argument("--max-redirects", type=int, default=DEFAULT_MAX_REDIRECTS, help="redirect chain cap in hops (default %(default)s)")
    group.add_argument("--user-agent", help=f"User-Agent to send (default: built-in browser string; ${USER_AGENT_ENV} overrides)")
    group.add_argument("--body-cap", type=int, default=DEFAULT_BODY_CAP, help="max body bytes fetched (default %(default)s)")
    group.add_argument("--http-port", type=int, default=80, help=argparse.SUPPRESS)
    group.add_argument("--https-port", type=int, default=443, help=argparse.SUPPRESS)
    group.add_argument("--connect-host", help=argparse.SUPPRESS)
    group.add_argument("--insecure", action="store_true", help="skip TLS certificate verification")
    group.add_argument("--no-cors-probe", action="store_true", help="skip the cross-origin probe request")
    group.add_argument("--no-contribute-probe", action="store_true", help="skip the /contribute.json probe")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="headaudit",
        description="Audit HTTP security headers: scan, score, and aggregate.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", help="scan one domain and print its scorecard")
    scan.add_argument("domain")
    scan.add_argument("--rank", type=int)
    scan.add_argument("--category")
    scan.add_argument("--strict", action="store_true", help="exit 1 when the target is unreachable; penalize missing contribute.json")
    scan.add_argument("--format", choices=["table", "detail", "records"], default="detail")
    scan.add_argument("--server", help="use a running service instead of in-process")
    _add_fetch_flags(scan)
    scan.set_defaults(func=_cmd_scan)

    batch = sub.add_parser("batch", help="scan a ranked target list")
    batch.add_argument("--input", required=True, help="CSV of rank,domain[,category]")
    batch.add_argument("--out", required=True, help="output directory for reports and manifest")
    batch.add_argument("--limit", type=int, help="scan only the top K targets")
    batch.add_argument("--concurrency", type=int, default=8)
    batch.add_argument("--categories", help="side CSV of domain,category labels")
    batch.add_argument("--strict", action="store_true", help="exit 1 when any target is unreachable; penalize missing contribute.json")
    batch.add_argument("--server", help="use a running service instead of in-process")
    _add_fetch_flags(batch)
    batch.set_defaults(func=_cmd_batch)

    aggregate = sub.add_parser("aggregate", help="summarize a batch output directory")
    aggregate.add_argument("--in", dest="reports_dir", required=True, help="batch output directory")
    aggregate.add_argument("--by", choices=["category", "grade", "header"], required=True)
    aggregate.add_argument("--server", help="use a running service instead of in-process")
    aggregate.set_defaults(func=_cmd_aggregate)

    sample = sub.add_parser("sample-size", help="survey sample size for a population")
    sample.add_argument("--population", type=int, help="population size (omit for unbounded)")
    sample.add_argument("--confidence", type=float, default=0.95)
    sample.add_argument("--margin", type=float, default=0.10)
    sample.add_argument("--server", help="use a running service instead of in-process")
    sample.set_defaults(func=_cmd_sample_size)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8300)
    serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

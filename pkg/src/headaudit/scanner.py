"""One-target pipeline: fetch the site, extract evidence, score it.

``evaluate_exchange`` is pure (exchange in, report out) so recorded
exchanges can be re-scored without touching the network; ``scan_target``
adds the fetch in front.
"""

from __future__ import annotations

from .fetcher import FetchConfig, HttpExchange, ScanTarget, fetch
from .header_parsers import (
    build_cors_evidence,
    parse_csp,
    parse_hpkp,
    parse_hsts,
    parse_set_cookie,
)
from .html_analyzer import SriInventory, inventory_subresources
from .scoring import (
    CATEGORY_ORDER,
    Category,
    ScanReport,
    SimpleEvidence,
    assign_grade,
    compute_score,
    evaluate_cookies,
    evaluate_cors,
    evaluate_csp,
    evaluate_hsts,
    evaluate_redirection,
    evaluate_simple,
    evaluate_sri,
)


def evaluate_exchange(exchange: HttpExchange, strict_contribute: bool = False) -> ScanReport:
    """Score one recorded exchange across all twelve surfaces."""
    headers = exchange.headers

    # When a header appears more than once only the first counts.
    raw_csp = headers.get("Content-Security-Policy")
    csp = parse_csp(raw_csp) if raw_csp is not None else None

    raw_hsts = headers.get("Strict-Transport-Security")
    hsts = parse_hsts(raw_hsts) if raw_hsts is not None else None

    raw_hpkp = headers.get("Public-Key-Pins")
    hpkp = parse_hpkp(raw_hpkp) if raw_hpkp is not None else None

    cookies = [parse_set_cookie(line) for line in exchange.set_cookie_lines]

    probe = exchange.cors_probe
    cors = build_cors_evidence(
        acao=headers.get("Access-Control-Allow-Origin"),
        allow_credentials=headers.get("Access-Control-Allow-Credentials"),
        probe_acao=probe.get("Access-Control-Allow-Origin") if probe else None,
        probe_allow_credentials=probe.get("Access-Control-Allow-Credentials") if probe else None,
    )

    if exchange.final_url:
        inventory = inventory_subresources(
            exchange.body, exchange.final_url, truncated=exchange.body_truncated
        )
    else:
        inventory = SriInventory()

    csp_result = evaluate_csp(csp)
    simple = evaluate_simple(
        SimpleEvidence(
            hpkp=hpkp,
            referrer=headers.get("Referrer-Policy"),
            xcto=headers.get("X-Content-Type-Options"),
            xfo=headers.get("X-Frame-Options"),
            xxss=headers.get("X-XSS-Protection"),
            csp=csp,
            csp_modifier=csp_result.modifier,
            contribute=exchange.contribute_probe,
            contribute_strict=strict_contribute,
        )
    )
    hpkp_result, referrer_result, xcto_result, xfo_result, xxss_result, contribute_result = simple

    by_category = {
        Category.CSP: csp_result,
        Category.COOKIES: evaluate_cookies(cookies),
        Category.CORS: evaluate_cors(cors),
        Category.HPKP: hpkp_result,
        Category.REDIRECTION: evaluate_redirection(exchange.chain, exchange.https_chain),
        Category.REFERRER: referrer_result,
        Category.HSTS: evaluate_hsts(hsts, exchange.reached_https),
        Category.SRI: evaluate_sri(inventory),
        Category.XCTO: xcto_result,
        Category.XFO: xfo_result,
        Category.XXSS: xxss_result,
        Category.CONTRIBUTE: contribute_result,
    }
    results = [by_category[c] for c in CATEGORY_ORDER]

    baseline, final = compute_score(results)
    return ScanReport(
        target=exchange.target,
        results=results,
        baseline=baseline,
        final_score=final,
        grade=assign_grade(final),
        unreachable=exchange.unreachable,
        final_url=exchange.final_url,
        body_truncated=exchange.body_truncated,
    )


def scan_target(
    target: ScanTarget,
    config: FetchConfig | None = None,
    strict_contribute: bool = False,
) -> ScanReport:
    """Fetch and score one target. Network trouble becomes an unreachable report."""
    exchange = fetch(target, config)
    return evaluate_exchange(exchange, strict_contribute=strict_contribute)

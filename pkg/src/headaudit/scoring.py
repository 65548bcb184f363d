"""Scoring: twelve security surfaces, one bounded modifier each.

Every site starts from 100. Penalties always apply; bonuses only count
when the penalty-adjusted baseline is already at least 90, so extra
credit never rescues a weak configuration. The final score is clamped to
0..135 and every modifier is a multiple of five, which keeps the whole
scale on 28 discrete values.

Within one surface the worst applicable violation wins; findings on the
same surface never stack.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from urllib.parse import urlsplit

from .fetcher import RedirectChain, ScanTarget
from .header_parsers import (
    CookieRecord,
    CorsEvidence,
    CspPolicy,
    HpkpEvidence,
    HstsDirective,
    classify_referrer_policy,
    classify_xss_protection,
    parse_simple,
)
from .html_analyzer import SriInventory

# Below this max-age (180 days) an HSTS policy is considered too short.
HSTS_MIN_AGE = 15_552_000

SCORE_FLOOR = 0
SCORE_CEILING = 135
BONUS_GATE = 90


class Category(str, Enum):
    """The twelve audited surfaces, in canonical report order."""

    CSP = "content-security-policy"
    COOKIES = "cookies"
    CORS = "cross-origin-resource-sharing"
    HPKP = "http-public-key-pinning"
    REDIRECTION = "redirection"
    REFERRER = "referrer-policy"
    HSTS = "strict-transport-security"
    SRI = "subresource-integrity"
    XCTO = "x-content-type-options"
    XFO = "x-frame-options"
    XXSS = "x-xss-protection"
    CONTRIBUTE = "contribute-json"


CATEGORY_ORDER: tuple[Category, ...] = (
    Category.CSP,
    Category.COOKIES,
    Category.CORS,
    Category.HPKP,
    Category.REDIRECTION,
    Category.REFERRER,
    Category.HSTS,
    Category.SRI,
    Category.XCTO,
    Category.XFO,
    Category.XXSS,
    Category.CONTRIBUTE,
)

# Inclusive modifier range each surface may produce.
MODIFIER_BOUNDS: dict[Category, tuple[int, int]] = {
    Category.CSP: (-25, 10),
    Category.COOKIES: (-40, 5),
    Category.CORS: (-50, 0),
    Category.HPKP: (-5, 0),
    Category.REDIRECTION: (-20, 0),
    Category.REFERRER: (-5, 5),
    Category.HSTS: (-20, 5),
    Category.SRI: (-50, 5),
    Category.XCTO: (-5, 0),
    Category.XFO: (-20, 5),
    Category.XXSS: (-10, 0),
    Category.CONTRIBUTE: (-10, 0),
}

DISPLAY_NAMES: dict[Category, str] = {
    Category.CSP: "Content Security Policy",
    Category.COOKIES: "Cookies",
    Category.CORS: "Cross-origin Resource Sharing",
    Category.HPKP: "HTTP Public Key Pinning",
    Category.REDIRECTION: "Redirection",
    Category.REFERRER: "Referrer Policy",
    Category.HSTS: "Strict Transport Security",
    Category.SRI: "Subresource Integrity",
    Category.XCTO: "X-Content-Type-Options",
    Category.XFO: "X-Frame-Options",
    Category.XXSS: "X-XSS-Protection",
    Category.CONTRIBUTE: "Contribute JSON",
}

# Grade bands over the final clamped score: (grade, low, high) inclusive.
GRADE_BANDS: tuple[tuple[str, int, int], ...] = (
    ("A+", 100, 135),
    ("A", 90, 95),
    ("A-", 85, 85),
    ("B+", 80, 80),
    ("B", 70, 75),
    ("B-", 65, 65),
    ("C+", 60, 60),
    ("C", 50, 55),
    ("C-", 45, 45),
    ("D+", 40, 40),
    ("D", 30, 35),
    ("D-", 25, 25),
    ("F", 0, 20),
)


@dataclass(frozen=True)
class TestResult:
    """Outcome of one surface: a stable outcome id, the modifier, and prose."""

    category: Category
    outcome: str
    modifier: int
    reason: str

    def __post_init__(self):
        low, high = MODIFIER_BOUNDS[self.category]
        if not low <= self.modifier <= high:
            raise ValueError(
                f"{self.category.value} modifier {self.modifier} outside [{low}, {high}]"
            )
        if self.modifier % 5 != 0:
            raise ValueError(f"modifier must be a multiple of 5: {self.modifier}")


@dataclass
class ScanReport:
    """Scored result for one target."""

    target: ScanTarget
    results: list[TestResult]
    baseline: int
    final_score: int
    grade: str
    unreachable: bool = False
    final_url: str | None = None
    body_truncated: bool = False

    def modifier_for(self, category: Category) -> int:
        for result in self.results:
            if result.category is category:
                return result.modifier
        raise KeyError(category)


def compute_score(results: list[TestResult]) -> tuple[int, int]:
    """Fold the twelve results into (baseline, final).

    Requires exactly one result per surface. Baseline is 100 plus all
    penalties; bonuses apply only when the baseline reaches the gate, and
    the final score is clamped to the scale.
    """
    seen = {r.category for r in results}
    if len(results) != len(CATEGORY_ORDER) or seen != set(CATEGORY_ORDER):
        missing = sorted(c.value for c in set(CATEGORY_ORDER) - seen)
        raise ValueError(f"need exactly one result per category; missing/dup: {missing or 'duplicates'}")

    penalties = sum(r.modifier for r in results if r.modifier < 0)
    bonuses = sum(r.modifier for r in results if r.modifier > 0)
    baseline = 100 + penalties
    final = baseline + bonuses if baseline >= BONUS_GATE else baseline
    return baseline, max(SCORE_FLOOR, min(SCORE_CEILING, final))


def assign_grade(score: int) -> str:
    """Map a final score to its letter grade."""
    if not SCORE_FLOOR <= score <= SCORE_CEILING or score % 5 != 0:
        raise ValueError(f"score must be a multiple of 5 in [0, 135]: {score}")
    for grade, low, high in GRADE_BANDS:
        if low <= score <= high:
            return grade
    raise AssertionError("grade bands must partition the scale")  # pragma: no cover


def _result(category: Category, outcome: str, modifier: int, reason: str) -> TestResult:
    return TestResult(category=category, outcome=outcome, modifier=modifier, reason=reason)


def evaluate_csp(policy: CspPolicy | None) -> TestResult:
    if policy is None:
        return _result(Category.CSP, "csp-not-implemented", -25, "Content-Security-Policy header not found")
    if not policy.parse_ok:
        return _result(Category.CSP, "csp-invalid", -25, "Content-Security-Policy header could not be parsed")
    if policy.has_unsafe_inline:
        return _result(
            Category.CSP, "csp-unsafe-inline", -20,
            "policy allows 'unsafe-inline' script, defeating XSS protection",
        )
    if policy.has_wildcard_script_or_default:
        return _result(
            Category.CSP, "csp-wildcard-script", -20,
            "script execution is unconstrained (wildcard source or no script/default directive)",
        )
    if policy.has_unsafe_eval:
        return _result(Category.CSP, "csp-unsafe-eval", -10, "policy allows 'unsafe-eval'")
    if policy.default_src_none:
        return _result(
            Category.CSP, "csp-default-none", 10,
            "default-src 'none' with explicit allowances only",
        )
    return _result(Category.CSP, "csp-implemented", 5, "policy constrains script execution without unsafe sources")


def evaluate_cookies(cookies: list[CookieRecord]) -> TestResult:
    if not cookies:
        return _result(Category.COOKIES, "cookies-not-found", 0, "no cookies set on the scanned pages")
    if any(c.is_session and not c.secure for c in cookies):
        return _result(
            Category.COOKIES, "cookies-session-without-secure", -40,
            "a session cookie is sent over insecure transport (missing Secure)",
        )
    if any(c.is_session and not c.http_only for c in cookies):
        return _result(
            Category.COOKIES, "cookies-session-without-httponly", -30,
            "a session cookie is readable from script (missing HttpOnly)",
        )
    if any(not c.secure for c in cookies):
        return _result(
            Category.COOKIES, "cookies-without-secure", -20,
            "a cookie lacks the Secure attribute",
        )
    if all(c.secure and c.http_only and c.same_site for c in cookies):
        return _result(
            Category.COOKIES, "cookies-hardened", 5,
            "all cookies carry Secure, HttpOnly, and SameSite",
        )
    return _result(
        Category.COOKIES, "cookies-secure-baseline", 0,
        "cookies are Secure but not uniformly HttpOnly and SameSite",
    )


def evaluate_cors(evidence: CorsEvidence | None) -> TestResult:
    if evidence is None or (evidence.acao is None and not evidence.reflects_arbitrary_origin):
        return _result(Category.CORS, "cors-not-implemented", 0, "no cross-origin sharing headers observed")
    if evidence.reflects_arbitrary_origin and evidence.allow_credentials:
        return _result(
            Category.CORS, "cors-reflects-origin-with-credentials", -50,
            "arbitrary origins are echoed back with credentials allowed",
        )
    if evidence.reflects_arbitrary_origin:
        return _result(
            Category.CORS, "cors-reflects-origin", -25,
            "arbitrary origins are echoed back in Access-Control-Allow-Origin",
        )
    if (evidence.acao or "").strip() == "*":
        return _result(
            Category.CORS, "cors-public", 0,
            "content is public to all origins without credentials",
        )
    return _result(Category.CORS, "cors-restricted", 0, "cross-origin access restricted to fixed origins")


def evaluate_hpkp(evidence: HpkpEvidence | None) -> TestResult:
    if evidence is None or not evidence.present:
        return _result(Category.HPKP, "hpkp-not-implemented", 0, "Public-Key-Pins header not found (fine; it is deprecated)")
    if evidence.parse_ok and evidence.pin_count >= 2 and evidence.max_age is not None:
        return _result(Category.HPKP, "hpkp-implemented", 0, "valid pin set with a backup pin and max-age")
    return _result(
        Category.HPKP, "hpkp-invalid", -5,
        "Public-Key-Pins present but unparseable, missing max-age, or lacking a backup pin",
    )


def evaluate_redirection(chain: RedirectChain, https_chain: RedirectChain | None = None) -> TestResult:
    if chain.landed:
        if chain.terminal.scheme == "https":
            if len(chain.hops) > 1 and chain.hops[1].host != chain.hops[0].host:
                return _result(
                    Category.REDIRECTION, "redirection-off-host", -5,
                    "initial redirect leaves the host before upgrading to HTTPS, "
                    "so HSTS for this host can never be set",
                )
            return _result(Category.REDIRECTION, "redirection-to-https", 0, "HTTP redirects to HTTPS on the same host")
        if https_chain is not None and https_chain.reached_https():
            return _result(
                Category.REDIRECTION, "redirection-missing", -20,
                "site serves HTTPS but plain HTTP never redirects to it",
            )
        return _result(
            Category.REDIRECTION, "redirection-missing", -20,
            "site is served over plain HTTP only",
        )
    if https_chain is not None and https_chain.reached_https():
        return _result(
            Category.REDIRECTION, "redirection-https-only", 0,
            "plain HTTP is not served; HTTPS answers directly",
        )
    return _result(
        Category.REDIRECTION, "unscorable", -20,
        f"target unreachable ({chain.failure or 'no response'})",
    )


def evaluate_referrer(raw: str | None) -> TestResult:
    if raw is None:
        return _result(Category.REFERRER, "referrer-not-implemented", 0, "Referrer-Policy header not found")
    classification = classify_referrer_policy(raw)
    if classification == "restrictive":
        return _result(Category.REFERRER, "referrer-restrictive", 5, f"restrictive policy {raw!r}")
    if classification == "neutral":
        return _result(Category.REFERRER, "referrer-neutral", 0, f"neutral policy {raw!r}")
    return _result(Category.REFERRER, "referrer-leaky", -5, f"policy {raw!r} leaks referrer data or is invalid")


def evaluate_hsts(directive: HstsDirective | None, reached_https: bool) -> TestResult:
    if not reached_https:
        return _result(
            Category.HSTS, "hsts-no-https", -20,
            "strict transport security is impossible without a working HTTPS endpoint",
        )
    if directive is None:
        return _result(Category.HSTS, "hsts-not-implemented", -20, "Strict-Transport-Security header not found")
    if not directive.parse_ok:
        return _result(Category.HSTS, "hsts-invalid", -20, "Strict-Transport-Security header could not be parsed")
    if directive.max_age < HSTS_MIN_AGE:
        return _result(
            Category.HSTS, "hsts-short-max-age", -10,
            f"max-age {directive.max_age} is below the {HSTS_MIN_AGE} second (180 day) floor",
        )
    if directive.include_subdomains and directive.preload:
        return _result(
            Category.HSTS, "hsts-preload-ready", 5,
            "long max-age with includeSubDomains and preload",
        )
    return _result(Category.HSTS, "hsts-implemented", 0, "max-age meets the 180 day floor")


def evaluate_sri(inventory: SriInventory) -> TestResult:
    external = inventory.external_scripts()
    if not external:
        return _result(
            Category.SRI, "sri-not-needed", 0,
            "no external scripts on the landing page",
        )

    def scheme_of(resource) -> str:
        return urlsplit(resource.url).scheme

    if any(scheme_of(r) == "http" and not r.has_integrity for r in external):
        return _result(
            Category.SRI, "sri-insecure-scheme-without-integrity", -50,
            "external script loaded over plain HTTP without an integrity hash",
        )
    if any(scheme_of(r) == "http" for r in external):
        return _result(
            Category.SRI, "sri-insecure-scheme", -20,
            "external script loaded over plain HTTP (integrity present but transport is tamperable)",
        )
    if all(r.has_integrity for r in external):
        return _result(
            Category.SRI, "sri-implemented", 5,
            "every external script is HTTPS with an integrity hash",
        )
    return _result(
        Category.SRI, "sri-missing", -5,
        "external HTTPS scripts lack integrity hashes",
    )


def evaluate_xcto(raw: str | None) -> TestResult:
    if raw is None:
        return _result(Category.XCTO, "xcto-not-implemented", -5, "X-Content-Type-Options header not found")
    if parse_simple("x-content-type-options", raw).classification == "valid":
        return _result(Category.XCTO, "xcto-nosniff", 0, "MIME sniffing disabled")
    return _result(Category.XCTO, "xcto-invalid", -5, f"unrecognized X-Content-Type-Options value {raw!r}")


_PERMISSIVE_ANCESTOR_TOKENS = {"*", "http:", "https:", "http://*", "https://*"}


def evaluate_xfo(raw: str | None, csp: CspPolicy | None = None) -> TestResult:
    if csp is not None and csp.parse_ok and "frame-ancestors" in csp.directives:
        sources = {s.lower() for s in csp.directives["frame-ancestors"]}
        if not sources & _PERMISSIVE_ANCESTOR_TOKENS:
            return _result(
                Category.XFO, "xfo-frame-ancestors", 5,
                "framing restricted by CSP frame-ancestors",
            )
    if raw is None:
        return _result(Category.XFO, "xfo-not-implemented", -20, "X-Frame-Options header not found")
    if parse_simple("x-frame-options", raw).classification == "valid":
        return _result(Category.XFO, "xfo-implemented", 0, f"framing controlled by {raw!r}")
    return _result(Category.XFO, "xfo-invalid", -20, f"unrecognized X-Frame-Options value {raw!r}")


def evaluate_xxss(raw: str | None, csp_modifier: int = 0) -> TestResult:
    if raw is None:
        if csp_modifier >= 5:
            return _result(
                Category.XXSS, "xxss-not-needed-due-to-csp", 0,
                "header absent but a strong Content Security Policy covers XSS filtering",
            )
        return _result(Category.XXSS, "xxss-not-implemented", -10, "X-XSS-Protection header not found")
    classification = classify_xss_protection(raw)
    if classification == "enabled":
        return _result(Category.XXSS, "xxss-enabled", 0, "browser XSS filter enabled")
    if classification == "disabled":
        return _result(Category.XXSS, "xxss-disabled", -10, "browser XSS filter explicitly disabled")
    return _result(Category.XXSS, "xxss-invalid", -10, f"unrecognized X-XSS-Protection value {raw!r}")


@dataclass
class SimpleEvidence:
    """Inputs for the six single-header surfaces, bundled.

    ``csp`` and ``csp_modifier`` feed the cross-surface rules: a CSP
    frame-ancestors directive can stand in for X-Frame-Options, and a
    strong CSP excuses a missing X-XSS-Protection header.
    """

    hpkp: HpkpEvidence | None = None
    referrer: str | None = None
    xcto: str | None = None
    xfo: str | None = None
    xxss: str | None = None
    csp: CspPolicy | None = None
    csp_modifier: int = 0
    contribute: tuple[int, bytes] | None = None
    contribute_strict: bool = False


def evaluate_simple(evidence: SimpleEvidence) -> list[TestResult]:
    """Evaluate the six simple surfaces in a fixed order."""
    return [
        evaluate_hpkp(evidence.hpkp),
        evaluate_referrer(evidence.referrer),
        evaluate_xcto(evidence.xcto),
        evaluate_xfo(evidence.xfo, evidence.csp),
        evaluate_xxss(evidence.xxss, evidence.csp_modifier),
        evaluate_contribute(evidence.contribute, evidence.contribute_strict),
    ]


def evaluate_contribute(probe: tuple[int, bytes] | None, strict: bool = False) -> TestResult:
    absent_modifier = -10 if strict else 0
    if probe is None:
        return _result(
            Category.CONTRIBUTE, "contribute-json-not-found", absent_modifier,
            "/contribute.json not served",
        )
    status, body = probe
    if status != 200:
        return _result(
            Category.CONTRIBUTE, "contribute-json-not-found", absent_modifier,
            f"/contribute.json answered {status}",
        )
    try:
        data = json.loads(body.decode("utf-8", errors="replace"))
    except ValueError:
        data = None
    if (
        isinstance(data, dict)
        and isinstance(data.get("name"), str) and data["name"].strip()
        and isinstance(data.get("description"), str) and data["description"].strip()
    ):
        return _result(Category.CONTRIBUTE, "contribute-json-implemented", 0, "valid contribution manifest")
    return _result(
        Category.CONTRIBUTE, "contribute-json-invalid", -10,
        "/contribute.json served but is not a valid manifest",
    )

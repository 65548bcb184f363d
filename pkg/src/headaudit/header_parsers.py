"""Parsers that turn raw header values into evidence for the scoring rubric.

Every parser here is total: any byte soup a server sends back yields a
value, never an exception. Malformed input surfaces as ``parse_ok=False``
(or an "invalid" classification) so the scorer can penalize it instead of
the scan falling over. Directive and attribute names are matched
case-insensitively throughout.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

# Origin sent on the second request when probing for reflected
# Access-Control-Allow-Origin values. The .invalid TLD guarantees no
# legitimate site lists it on purpose.
PROBE_ORIGIN = "https://headaudit-probe.invalid"

_RESTRICTIVE_REFERRER = {
    "no-referrer",
    "same-origin",
    "strict-origin",
    "strict-origin-when-cross-origin",
}
_NEUTRAL_REFERRER = {
    "origin",
    "origin-when-cross-origin",
    "no-referrer-when-downgrade",
}
_LEAKY_REFERRER = {
    "unsafe-url",
}

_MAX_AGE_RE = re.compile(r'max-age\s*=\s*"?(\d+)"?\s*$', re.IGNORECASE)


@dataclass
class CspPolicy:
    """A parsed Content-Security-Policy header.

    ``directives`` maps lowercased directive names to their source lists in
    order of appearance; a repeated directive keeps its first occurrence,
    mirroring how browsers apply CSP. The boolean flags are derived from the
    effective script policy: ``script-src`` when present, else
    ``default-src``, else nothing constrains scripts at all and the
    wildcard flag is set.
    """

    directives: dict[str, list[str]] = field(default_factory=dict)
    has_unsafe_inline: bool = False
    has_unsafe_eval: bool = False
    has_wildcard_script_or_default: bool = False
    default_src_none: bool = False
    parse_ok: bool = False

    def effective_script_sources(self) -> list[str] | None:
        if "script-src" in self.directives:
            return self.directives["script-src"]
        if "default-src" in self.directives:
            return self.directives["default-src"]
        return None


def parse_csp(raw: str) -> CspPolicy:
    """Parse a CSP header value; ``parse_ok=False`` when nothing parses.

    Directives split on ``;``, tokens on whitespace. Only the structure
    needed by the rubric is extracted; full source-expression validation is
    out of scope.
    """
    directives: dict[str, list[str]] = {}
    for part in (raw or "").split(";"):
        tokens = part.split()
        if not tokens:
            continue
        name = tokens[0].lower()
        if name not in directives:
            directives[name] = tokens[1:]

    policy = CspPolicy(directives=directives, parse_ok=bool(directives))
    if not policy.parse_ok:
        return policy

    effective = policy.effective_script_sources()
    if effective is None:
        # Neither script-src nor default-src: scripts are unconstrained,
        # which the rubric treats the same as an explicit wildcard.
        policy.has_wildcard_script_or_default = True
    else:
        lowered = [t.lower() for t in effective]
        policy.has_unsafe_inline = "'unsafe-inline'" in lowered
        policy.has_unsafe_eval = "'unsafe-eval'" in lowered
        policy.has_wildcard_script_or_default = "*" in lowered

    default = policy.directives.get("default-src")
    if default is not None:
        lowered = [t.lower() for t in default]
        # Bare "default-src" (no sources) means 'none' in CSP.
        policy.default_src_none = lowered in ([], ["'none'"])
    return policy


def serialize_csp(policy: CspPolicy) -> str:
    parts = []
    for name, sources in policy.directives.items():
        parts.append(name if not sources else name + " " + " ".join(sources))
    return "; ".join(parts)


@dataclass
class HstsDirective:
    """Parsed Strict-Transport-Security header.

    ``parse_ok=False`` leaves the remaining fields at their defaults; the
    mandatory max-age directive missing or repeated both count as a parse
    failure.
    """

    max_age: int = 0
    include_subdomains: bool = False
    preload: bool = False
    parse_ok: bool = False


def parse_hsts(raw: str) -> HstsDirective:
    max_ages: list[int] = []
    include_subdomains = False
    preload = False
    for part in (raw or "").split(";"):
        token = part.strip()
        if not token:
            continue
        m = _MAX_AGE_RE.match(token)
        if m:
            max_ages.append(int(m.group(1)))
        elif token.lower() == "includesubdomains":
            include_subdomains = True
        elif token.lower() == "preload":
            preload = True
        # unknown directives are ignored per RFC tolerance

    if len(max_ages) != 1:
        return HstsDirective()
    return HstsDirective(
        max_age=max_ages[0],
        include_subdomains=include_subdomains,
        preload=preload,
        parse_ok=True,
    )


def serialize_hsts(h: HstsDirective) -> str:
    if not h.parse_ok:
        return ""
    parts = [f"max-age={h.max_age}"]
    if h.include_subdomains:
        parts.append("includeSubDomains")
    if h.preload:
        parts.append("preload")
    return "; ".join(parts)


@dataclass
class CookieRecord:
    """One Set-Cookie line reduced to the attributes the rubric inspects.

    ``is_session`` is true when the line carries neither Expires nor
    Max-Age, which is the cookie class the rubric treats most strictly.
    """

    name: str
    secure: bool = False
    http_only: bool = False
    same_site: str | None = None  # "Strict" | "Lax" | "None"
    is_session: bool = True


def parse_set_cookie(raw: str) -> CookieRecord:
    segments = (raw or "").split(";")
    first = segments[0]
    name = first.split("=", 1)[0].strip() if "=" in first else first.strip()

    record = CookieRecord(name=name)
    for segment in segments[1:]:
        if "=" in segment:
            key, value = segment.split("=", 1)
            key = key.strip().lower()
            value = value.strip()
        else:
            key, value = segment.strip().lower(), None

        if key == "secure":
            record.secure = True
        elif key == "httponly":
            record.http_only = True
        elif key == "samesite" and value is not None:
            candidate = value.capitalize()
            if candidate in ("Strict", "Lax", "None"):
                record.same_site = candidate
        elif key in ("expires", "max-age"):
            record.is_session = False
    return record


def serialize_set_cookie(c: CookieRecord) -> str:
    parts = [f"{c.name}="]
    if not c.is_session:
        parts.append("Max-Age=3600")
    if c.secure:
        parts.append("Secure")
    if c.http_only:
        parts.append("HttpOnly")
    if c.same_site is not None:
        parts.append(f"SameSite={c.same_site}")
    return "; ".join(parts)


@dataclass
class CorsEvidence:
    """Access-Control-Allow-Origin posture of the scanned site.

    ``reflects_arbitrary_origin`` is the result of a second request sent
    with ``Origin: https://headaudit-probe.invalid``: a server that
    echoes that origin back will echo an attacker's just as happily.
    """

    acao: str | None = None
    allow_credentials: bool = False
    reflects_arbitrary_origin: bool = False


def build_cors_evidence(
    acao: str | None,
    allow_credentials: str | None,
    probe_acao: str | None,
    probe_allow_credentials: str | None,
) -> CorsEvidence:
    """Combine the plain response and the Origin-probe response.

    Many servers emit Access-Control-Allow-Origin only when the request
    carries an Origin header, so the probe response fills in for the plain
    one when the latter lacks the header.
    """
    effective_acao = acao if acao is not None else probe_acao
    credentials_raw = (
        probe_allow_credentials if probe_allow_credentials is not None else allow_credentials
    )
    return CorsEvidence(
        acao=effective_acao,
        allow_credentials=(credentials_raw or "").strip().lower() == "true",
        reflects_arbitrary_origin=(probe_acao or "").strip() == PROBE_ORIGIN,
    )


@dataclass
class HpkpEvidence:
    present: bool = False
    pin_count: int = 0
    max_age: int | None = None
    parse_ok: bool = False


def parse_hpkp(raw: str) -> HpkpEvidence:
    pin_count = 0
    max_age: int | None = None
    recognized = False
    for part in (raw or "").split(";"):
        token = part.strip()
        if not token:
            continue
        lowered = token.lower()
        if lowered.startswith("pin-sha256="):
            pin_count += 1
            recognized = True
        elif lowered == "includesubdomains" or lowered.startswith("report-uri="):
            recognized = True
        else:
            m = _MAX_AGE_RE.match(token)
            if m:
                if max_age is None:
                    max_age = int(m.group(1))
                recognized = True
    return HpkpEvidence(present=True, pin_count=pin_count, max_age=max_age, parse_ok=recognized)


@dataclass
class SimpleHeaderEvidence:
    """Classification of one single-valued header.

    ``classification`` vocabulary depends on the header:
    x-content-type-options and x-frame-options use valid/invalid,
    referrer-policy uses restrictive/neutral/leaky, and
    x-xss-protection uses enabled/disabled/invalid.
    """

    name: str
    raw: str
    classification: str


def parse_simple(name: str, raw: str) -> SimpleHeaderEvidence:
    name = name.lower()
    raw = raw or ""
    if name == "x-content-type-options":
        classification = "valid" if raw.strip().lower() == "nosniff" else "invalid"
    elif name == "x-frame-options":
        classification = "valid" if _xfo_valid(raw) else "invalid"
    elif name == "referrer-policy":
        classification = classify_referrer_policy(raw)
    elif name == "x-xss-protection":
        classification = classify_xss_protection(raw)
    else:
        classification = "unknown"
    return SimpleHeaderEvidence(name=name, raw=raw, classification=classification)


def _xfo_valid(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ("deny", "sameorigin"):
        return True
    if value.startswith("allow-from") and len(value.split(None, 1)) == 2:
        return True
    return False


def classify_referrer_policy(raw: str) -> str:
    """Classify a Referrer-Policy value as restrictive, neutral, or leaky.

    The header may carry a comma-separated fallback list; like browsers, the
    last recognized token wins. An empty value is neutral, an unrecognized
    one leaky.
    """
    tokens = [t.strip().lower() for t in (raw or "").split(",")]
    tokens = [t for t in tokens if t]
    if not tokens:
        return "neutral"
    for token in reversed(tokens):
        if token in _RESTRICTIVE_REFERRER:
            return "restrictive"
        if token in _NEUTRAL_REFERRER:
            return "neutral"
        if token in _LEAKY_REFERRER:
            return "leaky"
    return "leaky"


def classify_xss_protection(raw: str) -> str:
    value = (raw or "").strip().lower()
    if value == "0":
        return "disabled"
    if value == "1" or re.fullmatch(r"1\s*;\s*mode\s*=\s*block", value):
        return "enabled"
    return "invalid"

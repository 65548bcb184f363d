"""Target retrieval: redirect chains, response capture, well-known probes.

A scan starts with a plain-HTTP request so the redirect-to-HTTPS story can
be judged, records every hop verbatim, and falls back to a direct HTTPS
attempt when the HTTP side never upgrades. Whatever the server does, the
result is an :class:`HttpExchange`; network trouble becomes a failure
reason on the chain terminal rather than an exception, because a batch
scan must survive any single hostile or dead target.

Each call builds its own ``requests`` session, so the module is safe to
drive from many concurrent scan workers.
"""

from __future__ import annotations

import re
import socket
from dataclasses import dataclass, field
from urllib.parse import urljoin, urlsplit, urlunsplit

import requests
import urllib3

from .header_parsers import PROBE_ORIGIN

# The exact browser identity used for every request; overridable per config.
DEFAULT_USER_AGENT = (
    "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 "
    "(KHTML, like Gecko) Chrome/110.0.0.0 Safari/537.36"
)

DEFAULT_TIMEOUT = 15.0
DEFAULT_MAX_REDIRECTS = 20  # maximum chain length in hops
DEFAULT_BODY_CAP = 1024 * 1024  # enough landing-page markup for the SRI audit

FAILURE_DNS = "dns-failure"
FAILURE_CONNECT_TIMEOUT = "connect-timeout"
FAILURE_READ_TIMEOUT = "read-timeout"
FAILURE_REFUSED = "connection-refused"
FAILURE_TLS = "tls-handshake-failure"
FAILURE_REDIRECT_LOOP = "redirect-loop"
FAILURE_NETWORK = "network-error"

_LABEL = r"[a-zA-Z0-9]([a-zA-Z0-9-]{0,61}[a-zA-Z0-9])?"
_HOSTNAME_RE = re.compile(rf"^{_LABEL}(\.{_LABEL})*$")


class HeaderMap:
    """Case-insensitive header multimap preserving value order.

    Multiple occurrences of a header stay distinct; ``get`` returns the
    first value, ``get_all`` every value in wire order.
    """

    def __init__(self, pairs=()):
        self._entries: dict[str, list[str]] = {}
        for name, value in pairs:
            self._entries.setdefault(name.lower(), []).append(value)

    def get(self, name: str, default: str | None = None) -> str | None:
        values = self._entries.get(name.lower())
        return values[0] if values else default

    def get_all(self, name: str) -> list[str]:
        return list(self._entries.get(name.lower(), []))

    def __contains__(self, name: str) -> bool:
        return name.lower() in self._entries

    def __len__(self) -> int:
        return sum(len(v) for v in self._entries.values())

    def items(self):
        for name, values in self._entries.items():
            for value in values:
                yield name, value

    def __eq__(self, other):
        return isinstance(other, HeaderMap) and self._entries == other._entries

    def __repr__(self):
        return f"HeaderMap({list(self.items())!r})"


@dataclass(frozen=True)
class ScanTarget:
    """One domain to audit, optionally with its popularity rank and category."""

    domain: str
    rank: int | None = None
    category: str | None = None

    def __post_init__(self):
        if not self.domain:
            raise ValueError("target domain must be non-empty")
        if "://" in self.domain or "/" in self.domain:
            raise ValueError(f"target domain must be a bare hostname: {self.domain!r}")
        if len(self.domain) > 253 or not _HOSTNAME_RE.match(self.domain):
            raise ValueError(f"not a valid DNS name: {self.domain!r}")
        if self.rank is not None and self.rank < 1:
            raise ValueError(f"rank must be positive: {self.rank}")


@dataclass(frozen=True)
class Hop:
    """One request in a redirect chain.

    ``status`` is None when the request never got a response (the hop is
    then the chain terminal and the chain carries a failure reason).
    ``location`` holds the verbatim Location value for redirect hops.
    """

    url: str
    scheme: str
    host: str
    status: int | None
    location: str | None


@dataclass
class RedirectChain:
    """Ordered hops from the initial request to the final response or failure."""

    hops: list[Hop]
    failure: str | None = None

    @property
    def landed(self) -> bool:
        return self.failure is None

    @property
    def terminal(self) -> Hop:
        return self.hops[-1]

    def reached_https(self) -> bool:
        return self.landed and self.terminal.scheme == "https"


@dataclass
class FetchConfig:
    """Knobs for one fetch.

    ``connect_host`` redirects all TCP connections to a fixed address while
    preserving logical URLs and Host headers, the same trick as
    ``curl --resolve``; together with the port overrides it lets a loopback
    fixture server impersonate arbitrary hostnames in tests.
    """

    timeout: float = DEFAULT_TIMEOUT
    max_redirects: int = DEFAULT_MAX_REDIRECTS
    user_agent: str = DEFAULT_USER_AGENT
    body_cap: int = DEFAULT_BODY_CAP
    http_port: int = 80
    https_port: int = 443
    verify_tls: bool = True
    connect_host: str | None = None
    probe_cors: bool = True
    probe_contribute: bool = True

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_redirects < 1:
            raise ValueError("redirect cap must allow at least the initial hop")
        if self.body_cap < 1:
            raise ValueError("body cap must be positive")

    def snapshot(self) -> dict:
        return {
            "timeout": self.timeout,
            "max_redirects": self.max_redirects,
            "user_agent": self.user_agent,
            "body_cap": self.body_cap,
            "http_port": self.http_port,
            "https_port": self.https_port,
            "verify_tls": self.verify_tls,
            "connect_host": self.connect_host,
        }


@dataclass
class HttpExchange:
    """Everything one scan learned from the wire.

    ``chain`` always starts from plain HTTP. ``https_chain`` is the direct
    HTTPS attempt, made only when the HTTP chain never reached HTTPS.
    Header, cookie, and body evidence comes from the landing the audit
    scores: the HTTPS landing when one exists, the plain-HTTP landing
    otherwise. Set-Cookie lines are collected verbatim along every hop of
    that landing chain and never merged.
    """

    target: ScanTarget
    chain: RedirectChain
    https_chain: RedirectChain | None = None
    headers: HeaderMap = field(default_factory=HeaderMap)
    set_cookie_lines: list[str] = field(default_factory=list)
    body: bytes = b""
    body_truncated: bool = False
    final_url: str | None = None
    contribute_probe: tuple[int, bytes] | None = None
    cors_probe: HeaderMap | None = None
    unreachable: bool = False

    @property
    def reached_https(self) -> bool:
        if self.chain.reached_https():
            return True
        return self.https_chain is not None and self.https_chain.reached_https()


@dataclass
class _Captured:
    headers: HeaderMap
    set_cookie_lines: list[str]
    body: bytes
    truncated: bool


def fetch(target: ScanTarget, config: FetchConfig | None = None) -> HttpExchange:
    """Retrieve ``target`` and record the full exchange.

    Never raises for network-level trouble: an unreachable target comes
    back as an exchange with ``unreachable=True`` and a failure reason on
    each attempted chain.
    """
    config = config or FetchConfig()
    session = requests.Session()
    try:
        http_chain, http_captured = _follow(f"http://{target.domain}/", config, session)

        https_chain = https_captured = None
        if not http_chain.reached_https():
            https_chain, https_captured = _follow(f"https://{target.domain}/", config, session)

        chain, captured = _pick_evidence(http_chain, http_captured, https_chain, https_captured)

        exchange = HttpExchange(target=target, chain=http_chain, https_chain=https_chain)
        if captured is None:
            exchange.unreachable = True
            return exchange

        exchange.headers = captured.headers
        exchange.set_cookie_lines = captured.set_cookie_lines
        exchange.body = captured.body
        exchange.body_truncated = captured.truncated
        exchange.final_url = chain.terminal.url

        if config.probe_cors:
            exchange.cors_probe = _probe_cors(exchange.final_url, config, session)
        if config.probe_contribute:
            exchange.contribute_probe = probe_contribute(exchange.final_url, config, session)
        return exchange
    finally:
        session.close()


def _pick_evidence(http_chain, http_captured, https_chain, https_captured):
    """Prefer an HTTPS landing; fall back to plain HTTP; else unreachable."""
    if http_chain.reached_https():
        return http_chain, http_captured
    if https_chain is not None and https_chain.reached_https():
        return https_chain, https_captured
    if http_chain.landed:
        return http_chain, http_captured
    if https_chain is not None and https_chain.landed:
        return https_chain, https_captured
    return http_chain, None


def probe_contribute(origin: str, config: FetchConfig | None = None, session=None) -> tuple[int, bytes] | None:
    """GET /contribute.json at the landed origin.

    Absent (None) on 404 or any network failure; otherwise the raw status
    and body, capped like any other body.
    """
    config = config or FetchConfig()
    if "://" not in origin:
        origin = f"https://{origin}"
    parts = urlsplit(origin)
    url = urlunsplit((parts.scheme, parts.netloc, "/contribute.json", "", ""))

    own_session = session is None
    session = session or requests.Session()
    try:
        response = _request(url, config, session)
    except requests.RequestException:
        return None
    finally:
        if own_session:
            session.close()

    try:
        if response.status_code == 404:
            return None
        body, _truncated = _read_body(response, config.body_cap)
        return response.status_code, body
    finally:
        response.close()


def _probe_cors(url: str, config: FetchConfig, session) -> HeaderMap | None:
    try:
        response = _request(url, config, session, extra_headers={"Origin": PROBE_ORIGIN})
    except requests.RequestException:
        return None
    try:
        return HeaderMap(response.raw.headers.items())
    finally:
        response.close()


def _follow(start_url: str, config: FetchConfig, session) -> tuple[RedirectChain, _Captured | None]:
    hops: list[Hop] = []
    set_cookie_lines: list[str] = []
    url = start_url

    while True:
        parts = urlsplit(url)
        scheme = parts.scheme
        host = (parts.hostname or "").lower()
        try:
            response = _request(url, config, session)
        except requests.RequestException as exc:
            hops.append(Hop(url=url, scheme=scheme, host=host, status=None, location=None))
            return RedirectChain(hops=hops, failure=_classify_failure(exc)), None

        try:
            status = response.status_code
            location = response.headers.get("Location")
            set_cookie_lines.extend(response.raw.headers.getlist("Set-Cookie"))

            if 300 <= status < 400 and location:
                hops.append(Hop(url=url, scheme=scheme, host=host, status=status, location=location))
                if len(hops) >= config.max_redirects:
                    return RedirectChain(hops=hops, failure=FAILURE_REDIRECT_LOOP), None
                url = urljoin(url, location)
                continue

            hops.append(Hop(url=url, scheme=scheme, host=host, status=status, location=None))
            body, truncated = _read_body(response, config.body_cap)
            captured = _Captured(
                headers=HeaderMap(response.raw.headers.items()),
                set_cookie_lines=set_cookie_lines,
                body=body,
                truncated=truncated,
            )
            return RedirectChain(hops=hops), captured
        finally:
            response.close()


def _request(url: str, config: FetchConfig, session, extra_headers: dict | None = None):
    """Issue one GET without following redirects.

    The logical URL keeps the hostname; the wire connection goes to
    ``connect_host``/port overrides when configured.
    """
    parts = urlsplit(url)
    scheme = parts.scheme
    host = parts.hostname or ""
    default_port = 80 if scheme == "http" else 443
    port = parts.port or (config.http_port if scheme == "http" else config.https_port)
    connect = config.connect_host or host

    netloc = connect if port == default_port else f"{connect}:{port}"
    host_header = host if port == default_port else f"{host}:{port}"
    wire_url = urlunsplit((scheme, netloc, parts.path or "/", parts.query, ""))

    headers = {"User-Agent": config.user_agent, "Accept": "*/*", "Host": host_header}
    if extra_headers:
        headers.update(extra_headers)

    if not config.verify_tls:
        urllib3.disable_warnings(urllib3.exceptions.InsecureRequestWarning)

    return session.get(
        wire_url,
        headers=headers,
        timeout=(config.timeout, config.timeout),
        allow_redirects=False,
        stream=True,
        verify=config.verify_tls,
    )


def _read_body(response, cap: int) -> tuple[bytes, bool]:
    chunks: list[bytes] = []
    total = 0
    truncated = False
    try:
        for chunk in response.iter_content(chunk_size=8192):
            chunks.append(chunk)
            total += len(chunk)
            if total > cap:
                truncated = True
                break
    except requests.RequestException:
        # Keep whatever arrived; a half body is still worth analyzing.
        truncated = True
    return b"".join(chunks)[:cap], truncated


def _classify_failure(exc: Exception) -> str:
    if isinstance(exc, requests.exceptions.SSLError):
        return FAILURE_TLS
    if isinstance(exc, requests.exceptions.ConnectTimeout):
        return FAILURE_CONNECT_TIMEOUT
    if isinstance(exc, requests.exceptions.Timeout):
        return FAILURE_READ_TIMEOUT
    if isinstance(exc, requests.exceptions.ConnectionError):
        if _exception_contains(exc, socket.gaierror) or "NameResolutionError" in str(exc):
            return FAILURE_DNS
        if _exception_contains(exc, ConnectionRefusedError) or "Connection refused" in str(exc):
            return FAILURE_REFUSED
        return FAILURE_NETWORK
    return FAILURE_NETWORK


def _exception_contains(exc: BaseException, kind: type, depth: int = 0) -> bool:
    """Search an exception tree (causes, contexts, args) for ``kind``."""
    if depth > 8:
        return False
    if isinstance(exc, kind):
        return True
    candidates = list(getattr(exc, "args", ()))
    candidates.extend([exc.__cause__, exc.__context__])
    inner = getattr(exc, "reason", None)  # urllib3 wrappers
    if inner is not None:
        candidates.append(inner)
    return any(
        isinstance(c, BaseException) and _exception_contains(c, kind, depth + 1)
        for c in candidates
    )

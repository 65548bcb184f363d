"""Landing-page markup analysis for the subresource-integrity audit.

Real-world HTML is messy, so everything here is tolerant: the scan keeps
whatever it managed to collect when markup is malformed or truncated, and
never raises. Only resources a browser would fetch over the network count,
which rules out data:, blob: and javascript: URLs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from html.parser import HTMLParser
from urllib.parse import urljoin, urlsplit

from . import psl


@dataclass(frozen=True)
class Subresource:
    """One script or stylesheet reference found in the page."""

    kind: str  # "script" or "stylesheet"
    url: str  # resolved against the page origin
    raw_url: str
    scheme: str  # "http", "https", or "relative"
    is_external: bool  # different registrable domain than the page
    has_integrity: bool
    integrity: str | None = None


@dataclass
class SriInventory:
    resources: list[Subresource] = field(default_factory=list)
    truncated: bool = False  # body was cut at the fetch cap

    def external_scripts(self) -> list[Subresource]:
        return [r for r in self.resources if r.kind == "script" and r.is_external]


@dataclass
class PageMeta:
    title: str | None = None
    description: str | None = None


class _SubresourceCollector(HTMLParser):
    def __init__(self, origin: str):
        super().__init__(convert_charrefs=True)
        self.origin = origin
        self.origin_host = (urlsplit(origin).hostname or "").lower()
        self.resources: list[Subresource] = []
        self.title_parts: list[str] = []
        self.description: str | None = None
        self._in_title = False
        self._title_done = False

    def handle_starttag(self, tag, attrs):
        attr_map = _first_attrs(attrs)
        if tag == "script" and "src" in attr_map:
            self._add("script", attr_map.get("src"), attr_map.get("integrity"))
        elif tag == "link":
            rel = (attr_map.get("rel") or "").lower().split()
            if "stylesheet" in rel and "href" in attr_map:
                self._add("stylesheet", attr_map.get("href"), attr_map.get("integrity"))
        elif tag == "title" and not self._title_done:
            self._in_title = True
        elif tag == "meta":
            name = (attr_map.get("name") or "").strip().lower()
            if name == "description" and self.description is None:
                self.description = (attr_map.get("content") or "").strip()

    def handle_endtag(self, tag):
        if tag == "title" and self._in_title:
            self._in_title = False
            self._title_done = True

    def handle_data(self, data):
        if self._in_title:
            self.title_parts.append(data)

    def _add(self, kind: str, raw_url: str | None, integrity: str | None):
        raw_url = (raw_url or "").strip()
        if not raw_url:
            return
        raw_scheme = urlsplit(raw_url).scheme.lower()
        if raw_scheme in ("http", "https"):
            scheme = raw_scheme
        elif raw_scheme:
            return  # data:, javascript:, blob:, ... never hit the network
        else:
            scheme = "relative"

        resolved = urljoin(self.origin, raw_url)
        host = (urlsplit(resolved).hostname or "").lower()
        if not host:
            return

        integrity = (integrity or "").strip() or None
        self.resources.append(
            Subresource(
                kind=kind,
                url=resolved,
                raw_url=raw_url,
                scheme=scheme,
                is_external=not psl.same_site(host, self.origin_host),
                has_integrity=integrity is not None,
                integrity=integrity,
            )
        )


def _first_attrs(attrs) -> dict[str, str | None]:
    # Duplicate attributes on one element: first occurrence wins.
    out: dict[str, str | None] = {}
    for name, value in attrs:
        out.setdefault(name.lower(), value)
    return out


def _run_collector(body: bytes, origin: str) -> _SubresourceCollector:
    collector = _SubresourceCollector(origin)
    text = body.decode("utf-8", errors="replace")
    try:
        collector.feed(text)
        collector.close()
    except Exception:
        pass  # keep what was collected before the parser gave up
    return collector


def inventory_subresources(body: bytes, origin: str, truncated: bool = False) -> SriInventory:
    """Collect every script src and stylesheet link in document order.

    One inventory entry per matching element; the same URL referenced by
    two elements appears twice.
    """
    collector = _run_collector(body, origin)
    return SriInventory(resources=collector.resources, truncated=truncated)


def extract_meta(body: bytes, origin: str = "https://example.invalid/") -> PageMeta:
    """Pull the first title and the meta description out of the page."""
    collector = _run_collector(body, origin)
    title = " ".join("".join(collector.title_parts).split()) or None
    description = collector.description or None
    return PageMeta(title=title, description=description)

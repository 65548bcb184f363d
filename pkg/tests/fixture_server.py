"""Loopback HTTP and HTTPS servers that impersonate arbitrary hosts.

Pages are registered per (scheme, host, path) and dispatched on the Host
header, so one pair of ephemeral ports can play a whole corpus of fake
sites. The special CLOSE page drops the connection without a response,
simulating a dead endpoint. Pages may also be callables taking the
request handler, for responses that depend on the request (e.g. echoing
an Origin header).
"""

from __future__ import annotations

import socket
import ssl
import threading
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from headaudit.fetcher import FetchConfig

CLOSE = "CLOSE"


@dataclass
class Page:
    status: int = 200
    headers: list = field(default_factory=list)  # (name, value); duplicates allowed
    body: bytes = b""


class Registry:
    """Shared page table plus a log of every request either server saw."""

    def __init__(self):
        self._pages: dict[tuple[str, str, str], object] = {}
        self.log: list[dict] = []
        self._lock = threading.Lock()

    def add(self, scheme: str, host: str, path: str, page) -> None:
        self._pages[(scheme, host.lower(), path)] = page

    def lookup(self, scheme: str, host: str, path: str):
        exact = self._pages.get((scheme, host, path))
        if exact is not None:
            return exact
        return self._pages.get((scheme, host, "*"))

    def record(self, scheme: str, host: str, path: str, headers: dict) -> None:
        with self._lock:
            self.log.append({"scheme": scheme, "host": host, "path": path, "headers": headers})

    def requests_for(self, host: str) -> list[dict]:
        with self._lock:
            return [entry for entry in self.log if entry["host"] == host.lower()]

    def clear(self) -> None:
        with self._lock:
            self._pages.clear()
            self.log.clear()


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, *args):
        pass

    def do_GET(self):
        registry: Registry = self.server.registry
        scheme: str = self.server.scheme
        host = (self.headers.get("Host") or "").split(":")[0].lower()
        registry.record(scheme, host, self.path, dict(self.headers))

        page = registry.lookup(scheme, host, self.path)
        if page == CLOSE:
            try:
                self.connection.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            self.close_connection = True
            return
        if callable(page):
            page = page(self)
        if page is None:
            page = Page(status=404, headers=[("Content-Type", "text/plain")], body=b"no fixture here")

        # send_response_only: no default Server/Date headers, so responses
        # are byte-stable across runs.
        self.send_response_only(page.status)
        for name, value in page.headers:
            self.send_header(name, value)
        self.send_header("Content-Length", str(len(page.body)))
        self.send_header("Connection", "close")
        self.end_headers()
        if page.body:
            self.wfile.write(page.body)
        self.close_connection = True


class FixtureServer:
    def __init__(self, registry: Registry, scheme: str, ssl_context: ssl.SSLContext | None = None):
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
        self.httpd.registry = registry
        self.httpd.scheme = scheme
        self.httpd.daemon_threads = True
        if ssl_context is not None:
            self.httpd.socket = ssl_context.wrap_socket(self.httpd.socket, server_side=True)
        self.port = self.httpd.server_address[1]
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    def start(self):
        self._thread.start()

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()


def write_self_signed_cert(directory) -> tuple[str, str]:
    """PEM cert/key pair covering *.fixture.test, for the HTTPS twin."""
    from cryptography import x509
    from cryptography.hazmat.primitives import hashes, serialization
    from cryptography.hazmat.primitives.asymmetric import rsa
    from cryptography.x509.oid import NameOID

    key = rsa.generate_private_key(public_exponent=65537, key_size=2048)
    name = x509.Name([x509.NameAttribute(NameOID.COMMON_NAME, "fixture.test")])
    now = datetime.now(timezone.utc)
    cert = (
        x509.CertificateBuilder()
        .subject_name(name)
        .issuer_name(name)
        .public_key(key.public_key())
        .serial_number(x509.random_serial_number())
        .not_valid_before(now - timedelta(days=1))
        .not_valid_after(now + timedelta(days=365))
        .add_extension(
            x509.SubjectAlternativeName(
                [x509.DNSName("fixture.test"), x509.DNSName("*.fixture.test")]
            ),
            critical=False,
        )
        .sign(key, hashes.SHA256())
    )

    cert_path = str(directory / "fixture-cert.pem")
    key_path = str(directory / "fixture-key.pem")
    with open(cert_path, "wb") as fh:
        fh.write(cert.public_bytes(serialization.Encoding.PEM))
    with open(key_path, "wb") as fh:
        fh.write(
            key.private_bytes(
                serialization.Encoding.PEM,
                serialization.PrivateFormat.TraditionalOpenSSL,
                serialization.NoEncryption(),
            )
        )
    return cert_path, key_path


@dataclass
class FixtureNet:
    """Handle the tests use: the registry plus ports and a ready config."""

    registry: Registry
    http_port: int
    https_port: int

    def config(self, **overrides) -> FetchConfig:
        settings = {
            "timeout": 5.0,
            "connect_host": "127.0.0.1",
            "http_port": self.http_port,
            "https_port": self.https_port,
            "verify_tls": False,
        }
        settings.update(overrides)
        return FetchConfig(**settings)

    def fetch_settings(self, **overrides) -> dict:
        """The same knobs as a service-payload dict."""
        settings = {
            "timeout": 5.0,
            "connect_host": "127.0.0.1",
            "http_port": self.http_port,
            "https_port": self.https_port,
            "verify_tls": False,
        }
        settings.update(overrides)
        return settings

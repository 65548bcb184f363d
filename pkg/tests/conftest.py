import ssl
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fixture_server import FixtureNet, FixtureServer, Registry, write_self_signed_cert


@pytest.fixture(scope="session")
def _fixture_servers(tmp_path_factory):
    registry = Registry()
    cert_path, key_path = write_self_signed_cert(tmp_path_factory.mktemp("tls"))
    context = ssl.SSLContext(ssl.PROTOCOL_TLS_SERVER)
    context.load_cert_chain(cert_path, key_path)

    http_server = FixtureServer(registry, "http")
    https_server = FixtureServer(registry, "https", ssl_context=context)
    http_server.start()
    https_server.start()
    try:
        yield FixtureNet(
            registry=registry,
            http_port=http_server.port,
            https_port=https_server.port,
        )
    finally:
        http_server.stop()
        https_server.stop()


@pytest.fixture
def net(_fixture_servers):
    _fixture_servers.registry.clear()
    return _fixture_servers

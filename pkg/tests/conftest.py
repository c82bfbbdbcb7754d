import pytest

from localserver import LocalServer


@pytest.fixture
def server():
    s = LocalServer()
    yield s
    s.close()


@pytest.fixture
def make_server():
    servers = []

    def factory():
        s = LocalServer()
        servers.append(s)
        return s

    yield factory
    for s in servers:
        s.close()

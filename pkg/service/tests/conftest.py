import threading
import time

import pytest
import uvicorn

from binoculars_service.app import create_app


class LiveService:
    """Runs the app under a real uvicorn server on an ephemeral port."""

    def __init__(self, engine):
        config = uvicorn.Config(create_app(engine), host="127.0.0.1", port=0,
                                log_level="warning")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)
        self.thread.start()
        deadline = time.monotonic() + 10
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("service did not start")
            time.sleep(0.02)
        port = self.server.servers[0].sockets[0].getsockname()[1]
        self.base_url = f"http://127.0.0.1:{port}"

    def close(self):
        self.server.should_exit = True
        self.thread.join(timeout=10)


@pytest.fixture
def live_service():
    services = []

    def factory(engine):
        s = LiveService(engine)
        services.append(s)
        return s

    yield factory
    for s in services:
        s.close()

import socket
import threading
import time

import pytest
import requests
import uvicorn

from iqa_bridge.models import ModelSpec
from iqa_bridge.service import build_app


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="session")
def live_bridge():
    """A real uvicorn server running the builtin model, for protocol tests."""
    port = free_port()
    config = uvicorn.Config(
        build_app(ModelSpec()), host="127.0.0.1", port=port, log_level="error"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    endpoint = f"http://127.0.0.1:{port}"
    for _ in range(100):
        try:
            if requests.get(f"{endpoint}/healthz", timeout=1).status_code == 200:
                break
        except requests.RequestException:
            time.sleep(0.1)
    else:
        raise RuntimeError("bridge server did not come up")
    yield endpoint
    server.should_exit = True
    thread.join(timeout=5)

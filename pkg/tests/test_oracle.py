import json
import math
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from iqattack import oracle
from iqattack.directions import default_texture_bank
from iqattack.jnd import jnd_box, jnd_threshold

from conftest import flat_image


class TestNativeBackends:
    def test_sharpness_constant_image(self):
        # Zero gradient: 100 * logistic(-1).
        expected = 100.0 / (1.0 + math.exp(1.0))
        assert oracle.sharpness_backend()(flat_image(0.5)) == pytest.approx(expected, abs=1e-9)

    def test_noise_constant_image(self):
        expected = 100.0 / (1.0 + math.exp(-1.0))
        assert oracle.noise_backend()(flat_image(0.5)) == pytest.approx(expected, abs=1e-9)

    def test_sharpness_rises_with_texture(self, rng):
        img = flat_image(0.5, 32, 32)
        noisy = np.clip(img + 0.01 * rng.standard_normal(img.shape), 0, 1)
        backend = oracle.sharpness_backend()
        assert backend(noisy) > backend(img)

    def test_noise_falls_with_texture(self, rng):
        img = flat_image(0.5, 32, 32)
        noisy = np.clip(img + 0.01 * rng.standard_normal(img.shape), 0, 1)
        backend = oracle.noise_backend()
        assert backend(noisy) < backend(img)

    def test_scores_inside_range(self, rng):
        for backend in (oracle.sharpness_backend(), oracle.noise_backend()):
            for _ in range(5):
                value = backend(rng.random((16, 16, 3)))
                assert 0.0 < value < 100.0

    def test_deterministic(self, rng):
        img = rng.random((16, 16, 3))
        backend = oracle.sharpness_backend()
        assert backend(img) == backend(img.copy())

    def test_attackable_within_jnd_box(self, rng):
        # A full-box texture step moves the sharpness score by more than 1.
        img = flat_image(0.4, 32, 32)
        box = jnd_box(img, jnd_threshold(img))
        donor = default_texture_bank(img.shape, seed=0).donors[0]
        perturbed = box.clip(img + np.sign(donor) * 1.0)
        backend = oracle.sharpness_backend()
        assert abs(backend(perturbed) - backend(img)) > 1.0


class TestOracleHandle:
    def test_budget_enforced(self, rng):
        handle = oracle.OracleHandle(oracle.sharpness_backend(), budget=2)
        handle.score(rng.random((8, 8, 3)))
        handle.score(rng.random((8, 8, 3)))
        with pytest.raises(oracle.BudgetExceededError):
            handle.score(rng.random((8, 8, 3)))
        assert handle.used == 2

    def test_cache_hits_are_free(self, rng):
        img = rng.random((8, 8, 3))
        handle = oracle.OracleHandle(oracle.sharpness_backend(), budget=1)
        first = handle.score(img)
        again = handle.score(img.copy())
        assert first == again
        assert handle.used == 1

    def test_cached_requery_allowed_after_exhaustion(self, rng):
        img = rng.random((8, 8, 3))
        handle = oracle.OracleHandle(oracle.sharpness_backend(), budget=1)
        value = handle.score(img)
        assert handle.exhausted
        assert handle.score(img) == value  # no backend call issued

    def test_records_appended(self, rng):
        handle = oracle.OracleHandle(oracle.sharpness_backend(), budget=5)
        handle.score(rng.random((8, 8, 3)))
        handle.score(rng.random((8, 8, 3)))
        assert [r.sequence for r in handle.records] == [1, 2]
        assert all(math.isfinite(r.score) for r in handle.records)

    def test_non_finite_score_rejected(self, rng):
        handle = oracle.OracleHandle(lambda img: float("nan"), budget=5)
        with pytest.raises(oracle.OracleUnavailableError):
            handle.score(rng.random((8, 8, 3)))

    def test_make_oracle_specs(self):
        assert oracle.make_oracle("native:sharpness").descriptor.startswith("native:sharpness")
        assert oracle.make_oracle("native:noise").descriptor.startswith("native:noise")
        with pytest.raises(ValueError):
            oracle.make_oracle("native:bogus")


class _Replies:
    """Scriptable scoring endpoint."""

    def __init__(self):
        self.mode = "echo42"


def _make_server(replies):
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers["Content-Length"])
            body = json.loads(self.rfile.read(length))
            assert "image_png_b64" in body
            if replies.mode == "echo42":
                payload, status = {"score": 42.0}, 200
            elif replies.mode == "nan":
                payload, status = {"score": "NaN"}, 200
            elif replies.mode == "malformed":
                payload, status = {"unexpected": 1}, 200
            else:
                payload, status = {"error": "boom"}, 500
            data = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, *args):
            pass

    return HTTPServer(("127.0.0.1", 0), Handler)


@pytest.fixture
def scoring_server():
    replies = _Replies()
    server = _make_server(replies)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}", replies
    finally:
        server.shutdown()


class TestHttpBackend:
    def test_echo_endpoint(self, scoring_server, rng):
        endpoint, _ = scoring_server
        backend = oracle.http_backend(endpoint, timeout=5)
        assert backend(rng.random((8, 8, 3))) == 42.0

    def test_endpoint_down(self, rng):
        backend = oracle.http_backend("http://127.0.0.1:9", timeout=0.5)
        with pytest.raises(oracle.OracleUnavailableError):
            backend(rng.random((8, 8, 3)))

    def test_nan_reply_rejected(self, scoring_server, rng):
        endpoint, replies = scoring_server
        replies.mode = "nan"
        backend = oracle.http_backend(endpoint, timeout=5)
        with pytest.raises(oracle.OracleUnavailableError):
            backend(rng.random((8, 8, 3)))

    def test_malformed_reply_rejected(self, scoring_server, rng):
        endpoint, replies = scoring_server
        replies.mode = "malformed"
        backend = oracle.http_backend(endpoint, timeout=5)
        with pytest.raises(oracle.OracleUnavailableError):
            backend(rng.random((8, 8, 3)))

    def test_server_error_rejected(self, scoring_server, rng):
        endpoint, replies = scoring_server
        replies.mode = "error"
        backend = oracle.http_backend(endpoint, timeout=5)
        with pytest.raises(oracle.OracleUnavailableError):
            backend(rng.random((8, 8, 3)))

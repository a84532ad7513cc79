"""Wire-protocol conformance for the embedding service."""

import threading
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from embed_service.app import create_app
from embed_service.config import ServiceConfig
from embed_service.encoders import HashTrigramEncoder, load_encoder

CONFIG = ServiceConfig(model="hash-trigram-64", max_batch=8)


@pytest.fixture()
def client():
    with TestClient(create_app(CONFIG)) as client:
        yield client


def cosine(a, b):
    return float(np.dot(a, b))


class TestBeforeLoad:
    def test_health_503(self):
        # no lifespan startup -> encoder not loaded
        client = TestClient(create_app(CONFIG))
        assert client.get("/health").status_code == 503

    def test_embed_503(self):
        client = TestClient(create_app(CONFIG))
        assert client.post("/embed", json={"texts": ["x"]}).status_code == 503


class TestHealth:
    def test_ok_after_load(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"
        assert body["model"] == "hash-trigram-64"
        assert body["dim"] == 64

    def test_dim_matches_embeddings(self, client):
        dim = client.get("/health").json()["dim"]
        body = client.post("/embed", json={"texts": ["hello"]}).json()
        assert body["dim"] == dim
        assert len(body["embeddings"][0]) == dim


class TestEmbed:
    def test_normalized_vectors(self, client):
        body = client.post("/embed", json={"texts": ["hello world"]}).json()
        vec = np.array(body["embeddings"][0])
        assert abs(float(np.linalg.norm(vec)) - 1.0) < 1e-5

    def test_deterministic_across_requests(self, client):
        a = client.post("/embed", json={"texts": ["same text"]}).json()
        b = client.post("/embed", json={"texts": ["same text"]}).json()
        assert a == b

    def test_order_preserving(self, client):
        ab = client.post("/embed", json={"texts": ["first", "second"]}).json()
        ba = client.post("/embed", json={"texts": ["second", "first"]}).json()
        assert ab["embeddings"][0] == ba["embeddings"][1]
        assert ab["embeddings"][1] == ba["embeddings"][0]

    def test_empty_batch_400(self, client):
        assert client.post("/embed", json={"texts": []}).status_code == 400

    def test_empty_string_400(self, client):
        assert client.post("/embed",
                           json={"texts": ["ok", ""]}).status_code == 400

    def test_oversized_batch_400(self, client):
        texts = [f"t{i}" for i in range(CONFIG.max_batch + 1)]
        assert client.post("/embed", json={"texts": texts}).status_code == 400

    def test_ordinal_cosine_sanity(self, client):
        body = client.post("/embed", json={
            "texts": ["the cat sat", "a cat sat", "stock markets fell"]}).json()
        anchor, near, far = (np.array(v) for v in body["embeddings"])
        assert cosine(anchor, near) > cosine(anchor, far)


class TestEncoders:
    def test_hash_encoder_selected_by_id(self):
        encoder = load_encoder("hash-trigram-128")
        assert isinstance(encoder, HashTrigramEncoder)
        assert encoder.dim == 128

    def test_short_text_degenerate_unit_vector(self):
        vecs = HashTrigramEncoder(32).encode(["a"])
        assert float(np.linalg.norm(vecs[0])) == 1.0

    def test_case_insensitive(self):
        encoder = HashTrigramEncoder(64)
        a, b = encoder.encode(["Hello World", "hello world"])
        assert np.array_equal(a, b)


class TestRealServer:
    def test_uvicorn_roundtrip(self):
        import socket
        import uvicorn
        import httpx

        with socket.socket() as sock:
            sock.bind(("127.0.0.1", 0))
            port = sock.getsockname()[1]

        server = uvicorn.Server(uvicorn.Config(
            create_app(CONFIG), host="127.0.0.1", port=port, log_level="error"))
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        try:
            base = f"http://127.0.0.1:{port}"
            for _ in range(100):
                try:
                    if httpx.get(f"{base}/health", timeout=1.0).status_code == 200:
                        break
                except httpx.TransportError:
                    time.sleep(0.05)
            else:
                pytest.fail("service did not become healthy")
            body = httpx.post(f"{base}/embed",
                              json={"texts": ["over the wire"]}).json()
            assert len(body["embeddings"]) == 1
            assert abs(np.linalg.norm(body["embeddings"][0]) - 1.0) < 1e-5
        finally:
            server.should_exit = True
            thread.join(timeout=5)

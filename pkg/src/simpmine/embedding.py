"""Sentence-similarity providers behind one interface.

Three interchangeable providers answer embed_batch(): a remote HTTP service,
a precomputed vector file, and a deterministic offline mock. The aligner
only ever sees embed_batch() + similarity(), so providers with identical
numeric outputs yield identical alignments. Every provider caches by exact
text within a run (summary sentences are compared against every document
sentence, so cache hits dominate); the cache is lock-protected and returns
the same immutable vector objects for cached and uncached paths.
"""

from __future__ import annotations

import hashlib
import logging
import threading
import time

import numpy as np
import requests

from . import _kernels
from .errors import DimensionMismatch, ProviderMiss, ProviderUnavailable

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-6


class EmbeddingVector:
    """An L2-normalized float64 vector (immutable)."""

    __slots__ = ("values",)

    def __init__(self, values: np.ndarray):
        v = np.asarray(values, dtype=np.float64)
        norm = float(np.sqrt(np.dot(v, v)))
        if norm == 0.0:
            raise ValueError("cannot normalize a zero vector")
        if abs(norm - 1.0) > NORM_TOLERANCE:
            v = v / norm
        v = v.copy()
        v.flags.writeable = False
        self.values = v

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity (dot product of normalized vectors), clamped to [-1, 1]."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"cannot compare dim {a.dim} with dim {b.dim}")
    value = float(np.dot(a.values, b.values))
    return max(-1.0, min(1.0, value))


def text_key(text: str) -> str:
    """Stable lookup key for precomputed vector files."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class EmbeddingProvider:
    """Base provider: per-run cache keyed by exact text, thread-safe."""

    def __init__(self):
        self._cache: dict[str, EmbeddingVector] = {}
        self._cache_lock = threading.Lock()
        self._dim: int | None = None

    # subclasses implement
    def _embed_uncached(self, texts: list[str]) -> list[EmbeddingVector]:
        raise NotImplementedError

    def model_id(self) -> str:
        raise NotImplementedError

    @property
    def dim(self) -> int | None:
        return self._dim

    def _check_dim(self, vec: EmbeddingVector) -> EmbeddingVector:
        if self._dim is None:
            self._dim = vec.dim
        elif vec.dim != self._dim:
            raise DimensionMismatch(
                f"provider returned dim {vec.dim}, session dim is {self._dim}")
        return vec

    def embed_batch(self, texts: list[str]) -> list[EmbeddingVector]:
        """One vector per text, same order; batching never changes results."""
        if not texts:
            raise ValueError("embed_batch requires a non-empty list of texts")
        with self._cache_lock:
            misses = [t for t in dict.fromkeys(texts) if t not in self._cache]
        if misses:
            vectors = self._embed_uncached(misses)
            if len(vectors) != len(misses):
                raise ProviderUnavailable(
                    f"provider returned {len(vectors)} vectors for {len(misses)} texts")
            with self._cache_lock:
                for text, vec in zip(misses, vectors):
                    self._cache[text] = self._check_dim(vec)
        with self._cache_lock:
            return [self._cache[t] for t in texts]

    def embed(self, text: str) -> EmbeddingVector:
        return self.embed_batch([text])[0]


def mock_embed(text: str, dim: int = 256) -> EmbeddingVector:
    """Deterministic offline embedding: hashed character-trigram histogram.

    Texts with fewer than 3 characters carry no trigram information and map
    to a fixed unit basis vector.
    """
    counts = np.asarray(_kernels.trigram_histogram(text, dim), dtype=np.float64)
    if not counts.any():
        basis = np.zeros(dim)
        basis[0] = 1.0
        return EmbeddingVector(basis)
    return EmbeddingVector(counts)


class MockProvider(EmbeddingProvider):
    """Fully offline, deterministic provider for tests and dry runs."""

    def __init__(self, dim: int = 256):
        super().__init__()
        self._mock_dim = dim

    def _embed_uncached(self, texts):
        return [mock_embed(t, self._mock_dim) for t in texts]

    def model_id(self) -> str:
        return f"mock-char-trigram-{self._mock_dim}"


class PrecomputedProvider(EmbeddingProvider):
    """Answers from a TSV of `sha256(text)<TAB>v1,v2,...,vd` rows."""

    def __init__(self, vectors: dict[str, EmbeddingVector], source: str = "memory"):
        super().__init__()
        self._vectors = vectors
        self._source = source
        dims = {v.dim for v in vectors.values()}
        if len(dims) > 1:
            raise DimensionMismatch(f"mixed dimensions in precomputed vectors: {sorted(dims)}")
        if dims:
            self._dim = dims.pop()

    @classmethod
    def from_tsv(cls, path) -> "PrecomputedProvider":
        vectors = {}
        dim = None
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    key, payload = line.split("\t", 1)
                    values = np.array([float(x) for x in payload.split(",")])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: malformed row ({exc})") from exc
                if dim is None:
                    dim = values.shape[0]
                elif values.shape[0] != dim:
                    raise DimensionMismatch(
                        f"{path}:{lineno}: dim {values.shape[0]} != {dim}")
                vectors[key] = EmbeddingVector(values)
        return cls(vectors, source=str(path))

    def _embed_uncached(self, texts):
        out = []
        for text in texts:
            vec = self._vectors.get(text_key(text))
            if vec is None:
                raise ProviderMiss(f"no precomputed vector for text: {text[:80]!r}")
            out.append(vec)
        return out

    def model_id(self) -> str:
        return f"precomputed:{self._source}"


def write_precomputed_tsv(path, texts, provider: EmbeddingProvider) -> int:
    """Dump vectors for `texts` in the precomputed-file format; returns row count."""
    written = 0
    with open(path, "w", encoding="utf-8") as fh:
        for text in dict.fromkeys(texts):
            vec = provider.embed(text)
            payload = ",".join(repr(x) for x in vec.values.tolist())
            fh.write(f"{text_key(text)}\t{payload}\n")
            written += 1
    return written


class RemoteProvider(EmbeddingProvider):
    """HTTP client for the embedding service.

    POST {url}/embed {"texts": [...]} -> {"dim": int, "embeddings": [[...]]}
    GET  {url}/health -> {"status": "ok", "model": str, "dim": int}

    Transient failures are retried with exponential backoff; persistent
    failure raises ProviderUnavailable (the aligner then skips the target,
    not the run). Request parallelism is bounded by `max_parallel`.
    """

    def __init__(self, url: str, timeout: float = 30.0, max_retries: int = 3,
                 backoff: float = 0.5, max_parallel: int = 4):
        super().__init__()
        self.url = url.rstrip("/")
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self._semaphore = threading.BoundedSemaphore(max_parallel)
        self._local = threading.local()
        self._model: str | None = None

    def _session(self) -> requests.Session:
        if not hasattr(self._local, "session"):
            self._local.session = requests.Session()
        return self._local.session

    def _request(self, method: str, path: str, **kwargs):
        last_error = None
        for attempt in range(self.max_retries + 1):
            try:
                with self._semaphore:
                    resp = self._session().request(
                        method, f"{self.url}{path}", timeout=self.timeout, **kwargs)
                if resp.status_code >= 500:
                    last_error = f"HTTP {resp.status_code}: {resp.text[:200]}"
                else:
                    return resp
            except requests.RequestException as exc:
                last_error = str(exc)
            if attempt < self.max_retries:
                time.sleep(self.backoff * (2 ** attempt))
        raise ProviderUnavailable(f"{self.url}{path} failed after "
                                  f"{self.max_retries + 1} attempts: {last_error}")

    def health(self) -> dict:
        resp = self._request("GET", "/health")
        if resp.status_code != 200:
            raise ProviderUnavailable(f"/health returned {resp.status_code}")
        return resp.json()

    def _embed_uncached(self, texts):
        for text in texts:
            if not text:
                raise ValueError("remote provider cannot embed empty text")
        resp = self._request("POST", "/embed", json={"texts": texts})
        if resp.status_code != 200:
            raise ProviderUnavailable(
                f"/embed returned {resp.status_code}: {resp.text[:200]}")
        payload = resp.json()
        embeddings = payload.get("embeddings")
        dim = payload.get("dim")
        if embeddings is None or dim is None:
            raise ProviderUnavailable("/embed response missing 'embeddings' or 'dim'")
        vectors = []
        for row in embeddings:
            arr = np.asarray(row, dtype=np.float64)
            if arr.shape[0] != dim:
                raise DimensionMismatch(
                    f"service reported dim {dim} but sent a vector of dim {arr.shape[0]}")
            vectors.append(EmbeddingVector(arr))
        return vectors

    def model_id(self) -> str:
        if self._model is None:
            self._model = str(self.health().get("model", "unknown"))
        return self._model

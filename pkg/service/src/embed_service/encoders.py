"""Encoder backends.

`hash-trigram-<dim>` is a deterministic lexical encoder (hashed character
trigrams) that needs no model weights, useful offline and in CI. Any other
model identifier is treated as a sentence-transformers checkpoint name and
loaded with deterministic inference settings (eval mode, no grad, CPU-friendly
float32). All encoders return L2-normalized float vectors, order-preserving.
"""

import re
import zlib

import numpy as np

_HASH_MODEL_RE = re.compile(r"^hash-trigram-(\d+)$")


class HashTrigramEncoder:
    """Bag of hashed character trigrams; fully deterministic, no weights."""

    def __init__(self, dim: int):
        if dim < 2:
            raise ValueError(f"dim must be >= 2, got {dim}")
        self.dim = dim
        self.name = f"hash-trigram-{dim}"

    def encode(self, texts) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            lowered = text.lower()
            for i in range(len(lowered) - 2):
                bucket = zlib.crc32(lowered[i:i + 3].encode("utf-8")) % self.dim
                out[row, bucket] += 1.0
            norm = np.sqrt(np.dot(out[row], out[row]))
            if norm == 0.0:
                out[row, 0] = 1.0
            else:
                out[row] /= norm
        return out


class SentenceTransformerEncoder:
    """Wraps a pretrained sentence-transformers checkpoint."""

    def __init__(self, model_name: str):
        from sentence_transformers import SentenceTransformer
        import torch
        self.name = model_name
        self._torch = torch
        self._model = SentenceTransformer(model_name, device="cpu")
        self._model.eval()
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts) -> np.ndarray:
        with self._torch.no_grad():
            vectors = self._model.encode(
                list(texts),
                convert_to_numpy=True,
                normalize_embeddings=True,
                show_progress_bar=False,
            )
        return np.asarray(vectors, dtype=np.float64)


def load_encoder(model_id: str):
    match = _HASH_MODEL_RE.match(model_id)
    if match:
        return HashTrigramEncoder(int(match.group(1)))
    return SentenceTransformerEncoder(model_id)

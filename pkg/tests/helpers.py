"""Test utilities: a similarity-scripted provider and small builders."""

import hashlib

import numpy as np

from simpmine.corpus import DocumentRecord, sentence_from_raw
from simpmine.embedding import EmbeddingProvider, EmbeddingVector


def _hash_unit(payload: str) -> float:
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2.0 ** 64


class ScriptedProvider(EmbeddingProvider):
    """Provider whose cosine similarity to one fixed target is prescribed.

    Known texts take their similarity from `sims`; any other text (stitched
    candidates) gets a deterministic pseudo-random similarity in
    `stitched_range`, derived from a salted hash of the text. Geometry: the
    target is a basis vector e0; every other text is s*e0 + sqrt(1-s^2) on a
    text-specific axis, so its cosine against the target is exactly s.
    """

    def __init__(self, target_text, sims, stitched_range=(0.3, 0.95),
                 salt="", dim=64):
        super().__init__()
        self.target_text = target_text
        self.sims = dict(sims)
        self.stitched_range = stitched_range
        self.salt = salt
        self._dim = dim

    def sim_for(self, text: str) -> float:
        if text in self.sims:
            s = self.sims[text]
        else:
            lo, hi = self.stitched_range
            s = lo + (hi - lo) * _hash_unit(f"sim\x00{self.salt}\x00{text}")
        return min(max(float(s), 0.0), 0.999999)

    def _embed_uncached(self, texts):
        out = []
        for text in texts:
            v = np.zeros(self._dim)
            if text == self.target_text:
                v[0] = 1.0
            else:
                s = self.sim_for(text)
                axis = 1 + int(_hash_unit(f"axis\x00{text}") * (self._dim - 1))
                v[0] = s
                v[axis] += np.sqrt(1.0 - s * s)
            out.append(EmbeddingVector(v))
        return out

    def model_id(self) -> str:
        return "scripted"


class FailingProvider(EmbeddingProvider):
    """Raises ProviderUnavailable on every call."""

    def _embed_uncached(self, texts):
        from simpmine.errors import ProviderUnavailable
        raise ProviderUnavailable("scripted failure")

    def model_id(self) -> str:
        return "failing"


def make_document(doc_id, doc_texts, summary_texts) -> DocumentRecord:
    return DocumentRecord(
        doc_id=doc_id,
        doc_sentences=tuple(sentence_from_raw(f"{doc_id}:d{i}", t)
                            for i, t in enumerate(doc_texts)),
        summary_sentences=tuple(sentence_from_raw(f"{doc_id}:s{j}", t)
                                for j, t in enumerate(summary_texts)),
    )

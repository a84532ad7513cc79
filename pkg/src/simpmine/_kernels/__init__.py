"""Kernel dispatch: compiled extension when available, pure Python otherwise.

Set SIMPMINE_PURE_KERNELS=1 to force the pure backend (used by the
equivalence tests and the benchmark). Both backends return exact integers,
so downstream float math is identical regardless of backend.
"""

import os

from . import pure as _pure

_ext = None
if os.environ.get("SIMPMINE_PURE_KERNELS") != "1":
    try:
        from . import _speedups as _ext  # type: ignore[attr-defined]
    except ImportError:
        _ext = None

BACKEND = "compiled" if _ext is not None else "pure"

# n-grams are packed 16 bits per token in the extension
_EXT_MAX_VOCAB = 1 << 16


def _to_ids(tokens, vocab, out):
    for tok in tokens:
        i = vocab.get(tok)
        if i is None:
            i = len(vocab)
            vocab[tok] = i
        out.append(i)
    return out


def sari_ngram_stats(src_tokens, out_tokens, refs_tokens, max_n=4):
    """Integer n-gram aggregates for keep/add/delete scoring.

    Accepts token sequences (any hashables); returns, per n in 1..max_n,
    the 9-tuple documented in pure.sari_ngram_stats.
    """
    vocab = {}
    src = _to_ids(src_tokens, vocab, [])
    out = _to_ids(out_tokens, vocab, [])
    refs = [_to_ids(r, vocab, []) for r in refs_tokens]
    if _ext is not None and len(vocab) < _EXT_MAX_VOCAB and max_n <= 4:
        return _ext.sari_ngram_stats(src, out, refs, max_n)
    return _pure.sari_ngram_stats(src, out, refs, max_n)


def trigram_histogram(text, buckets):
    """Character-trigram bucket counts for a string (list of ints)."""
    data = text.encode("utf-32-le")
    if _ext is not None:
        return _ext.trigram_histogram(data, buckets)
    return _pure.trigram_histogram(data, buckets)

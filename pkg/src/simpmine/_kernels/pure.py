"""Pure-Python implementations of the hot kernels.

These are the reference semantics; the compiled extension in _speedups.pyx
must return bit-identical results (all outputs are exact integers, so the
two backends are interchangeable without any float drift).
"""

from collections import Counter

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_U64 = (1 << 64) - 1


def trigram_histogram(data, buckets):
    """Bucket counts of character trigrams.

    `data` is the UTF-32-LE encoding of the text (4 bytes per character);
    each window of 3 characters (12 bytes) is hashed with 64-bit FNV-1a and
    counted modulo `buckets`. Returns a list of ints of length `buckets`.
    """
    counts = [0] * buckets
    nchars = len(data) // 4
    for i in range(nchars - 2):
        h = _FNV_OFFSET
        for b in data[4 * i : 4 * i + 12]:
            h = ((h ^ b) * _FNV_PRIME) & _U64
        counts[h % buckets] += 1
    return counts


def _ngram_counts(ids, n):
    return Counter(tuple(ids[i : i + n]) for i in range(len(ids) - n + 1))


def sari_ngram_stats(src, out, refs, max_n=4):
    """Integer aggregates for keep/add/delete n-gram scoring.

    `src`, `out` and each element of `refs` are token-id sequences. For each
    n in 1..max_n returns a 9-tuple

        (keep_good, keep_cand, keep_targ,
         add_good,  add_cand,  add_targ,
         del_good,  del_cand,  del_targ)

    where `cand` is the raw candidate-multiset size and `good`/`targ` are
    scaled by len(refs) so that fractional reference weights (count divided
    by the number of references) stay exact integers.
    """
    k = len(refs)
    rows = []
    for n in range(1, max_n + 1):
        src_counts = _ngram_counts(src, n)
        out_counts = _ngram_counts(out, n)
        ref_counts = Counter()
        for r in refs:
            ref_counts.update(_ngram_counts(r, n))

        keep_good = keep_cand = keep_targ = 0
        del_good = del_cand = del_targ = 0
        for g, ci in src_counts.items():
            co = out_counts.get(g, 0)
            rc = ref_counts.get(g, 0)
            c = ci if ci < co else co  # kept occurrences
            keep_cand += c
            t = min(ci * k, rc)
            keep_targ += t
            keep_good += min(c * k, t)
            c = ci - co  # deleted occurrences
            t = ci * k - rc
            if t > 0:
                del_targ += t
            if c > 0:
                del_cand += c
                if t > 0:
                    del_good += min(c * k, t)

        add_good = add_cand = 0
        for g, co in out_counts.items():
            c = co - src_counts.get(g, 0)
            if c > 0:
                add_cand += c
                t = ref_counts.get(g, 0) - src_counts.get(g, 0) * k
                if t > 0:
                    add_good += min(c * k, t)
        add_targ = 0
        for g, rc in ref_counts.items():
            t = rc - src_counts.get(g, 0) * k
            if t > 0:
                add_targ += t

        rows.append((keep_good, keep_cand, keep_targ,
                     add_good, add_cand, add_targ,
                     del_good, del_cand, del_targ))
    return tuple(rows)

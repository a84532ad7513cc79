# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled fast path for the hot kernels.

Semantics mirror pure.py exactly; every output is an exact integer so the
two backends are bit-for-bit interchangeable. Token ids passed to
sari_ngram_stats must be < 2**16 (the dispatcher guarantees this; n-grams
are packed 16 bits per token into one 64-bit key).
"""

from cython.operator cimport dereference as deref, preincrement as inc
from libc.stdint cimport uint64_t, int64_t
from libcpp.unordered_map cimport unordered_map
from libcpp.vector cimport vector

ctypedef unordered_map[uint64_t, int64_t] countmap


cdef void _count_ngrams(const vector[int64_t]& ids, int n, countmap& out):
    cdef Py_ssize_t i, j
    cdef Py_ssize_t m = <Py_ssize_t>ids.size() - n + 1
    cdef uint64_t key
    for i in range(m):
        key = 0
        for j in range(n):
            key = (key << 16) | <uint64_t>ids[i + j]
        out[key] += 1


cdef inline int64_t _get(countmap& m, uint64_t key):
    cdef countmap.iterator it = m.find(key)
    if it == m.end():
        return 0
    return deref(it).second


def sari_ngram_stats(list src, list out, list refs, int max_n=4):
    """See pure.sari_ngram_stats; identical contract."""
    cdef vector[int64_t] src_ids, out_ids
    cdef vector[vector[int64_t]] ref_ids
    cdef int64_t k = len(refs)
    cdef Py_ssize_t idx, r
    for idx in range(len(src)):
        src_ids.push_back(<int64_t>src[idx])
    for idx in range(len(out)):
        out_ids.push_back(<int64_t>out[idx])
    ref_ids.resize(len(refs))
    for r in range(len(refs)):
        for idx in range(len(<list>refs[r])):
            ref_ids[r].push_back(<int64_t>(<list>refs[r])[idx])

    cdef int n
    cdef countmap sc, oc, rc
    cdef countmap.iterator it
    cdef int64_t keep_good, keep_cand, keep_targ
    cdef int64_t add_good, add_cand, add_targ
    cdef int64_t del_good, del_cand, del_targ
    cdef int64_t ci, co, rcnt, c, t
    cdef uint64_t key
    rows = []
    for n in range(1, max_n + 1):
        sc.clear()
        oc.clear()
        rc.clear()
        _count_ngrams(src_ids, n, sc)
        _count_ngrams(out_ids, n, oc)
        for r in range(<Py_ssize_t>ref_ids.size()):
            _count_ngrams(ref_ids[r], n, rc)

        keep_good = keep_cand = keep_targ = 0
        del_good = del_cand = del_targ = 0
        it = sc.begin()
        while it != sc.end():
            key = deref(it).first
            ci = deref(it).second
            co = _get(oc, key)
            rcnt = _get(rc, key)
            c = ci if ci < co else co
            keep_cand += c
            t = ci * k
            if rcnt < t:
                t = rcnt
            keep_targ += t
            if c * k < t:
                t = c * k
            keep_good += t
            c = ci - co
            t = ci * k - rcnt
            if t > 0:
                del_targ += t
            if c > 0:
                del_cand += c
                if t > 0:
                    del_good += (c * k) if c * k < t else t
            inc(it)

        add_good = add_cand = 0
        it = oc.begin()
        while it != oc.end():
            key = deref(it).first
            co = deref(it).second
            ci = _get(sc, key)
            c = co - ci
            if c > 0:
                add_cand += c
                t = _get(rc, key) - ci * k
                if t > 0:
                    add_good += (c * k) if c * k < t else t
            inc(it)
        add_targ = 0
        it = rc.begin()
        while it != rc.end():
            key = deref(it).first
            rcnt = deref(it).second
            t = rcnt - _get(sc, key) * k
            if t > 0:
                add_targ += t
            inc(it)

        rows.append((keep_good, keep_cand, keep_targ,
                     add_good, add_cand, add_targ,
                     del_good, del_cand, del_targ))
    return tuple(rows)


def trigram_histogram(bytes data, int buckets):
    """See pure.trigram_histogram; identical contract."""
    cdef const unsigned char* p = data
    cdef Py_ssize_t nchars = len(data) // 4
    cdef vector[int64_t] counts = vector[int64_t](buckets, 0)
    cdef uint64_t h
    cdef Py_ssize_t i, j
    for i in range(nchars - 2):
        h = 14695981039346656037ULL
        for j in range(12):
            h = (h ^ <uint64_t>p[4 * i + j]) * 1099511628211ULL
        counts[<Py_ssize_t>(h % <uint64_t>buckets)] += 1
    return [counts[i] for i in range(buckets)]

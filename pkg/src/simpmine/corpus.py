"""Corpus ingestion: tokenization, sentence segmentation, n-grams, loaders.

Everything here is deterministic: the same input bytes always produce the
same tokens, sentence splits and n-gram multisets. Loaders are streaming
generators (constant memory per record) that skip-and-count malformed
records instead of aborting; only structural problems in parallel files
(line-count mismatch) are fatal.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator

from .errors import LineCountMismatch

logger = logging.getLogger(__name__)

# Word runs, clitics led by an apostrophe ("dubai's" -> "dubai", "'s"),
# then any single non-space punctuation character.
_TOKEN_RE = re.compile(r"\w+|'\w+|[^\w\s]")

# Common abbreviations that do not end a sentence even before a capital.
_ABBREVIATIONS = frozenset("""
    dr mr mrs ms prof sr jr st rev gen col lt sgt capt hon gov sen rep
    vs etc e.g i.e cf al inc ltd co corp dept univ est fig eq no
    jan feb mar apr jun jul aug sep sept oct nov dec mon tue wed thu fri sat sun
    u.s u.k u.n a.m p.m
""".split())

_BOUNDARY_RE = re.compile(r"[.!?]+[\"')\]]*\s+")
_LAST_WORD_RE = re.compile(r"([\w']+(?:\.[\w']+)*)\.?$")


@dataclass(frozen=True)
class SentenceRecord:
    """One sentence: raw text plus its lowercased token sequence."""

    id: str
    raw: str
    tokens: tuple[str, ...]

    @property
    def char_len(self) -> int:
        return len(self.raw)

    @property
    def token_len(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class DocumentRecord:
    """A document with its summary, both as ordered sentences."""

    doc_id: str
    doc_sentences: tuple[SentenceRecord, ...]
    summary_sentences: tuple[SentenceRecord, ...]


@dataclass(frozen=True)
class ParallelPair:
    """One aligned row of a reference parallel corpus (complex -> simple)."""

    pair_id: str
    source: SentenceRecord
    target: SentenceRecord


@dataclass(frozen=True)
class NGramMultiset:
    n: int
    counts: dict

    def total(self) -> int:
        return sum(self.counts.values())


def tokenize(raw: str) -> list[str]:
    """Lowercased tokens; punctuation as standalone tokens; never empty strings."""
    return _TOKEN_RE.findall(raw.lower())


def sentence_from_raw(sent_id: str, raw: str) -> SentenceRecord:
    return SentenceRecord(id=sent_id, raw=raw, tokens=tuple(tokenize(raw)))


def segment_raw(raw_block: str) -> list[str]:
    """Split a text block into sentence strings.

    A boundary is terminal punctuation (. ! ?), optionally followed by
    closing quotes/brackets, then whitespace, then an uppercase letter,
    unless the word before the punctuation is a known abbreviation.
    """
    text = raw_block.strip()
    if not text:
        return []
    pieces = []
    start = 0
    for m in _BOUNDARY_RE.finditer(text):
        end = m.end()
        if end >= len(text) or not text[end].isupper():
            continue
        before = text[: m.start()]
        wm = _LAST_WORD_RE.search(before)
        if wm and wm.group(1).lower() in _ABBREVIATIONS:
            continue
        pieces.append(text[start:end].strip())
        start = end
    pieces.append(text[start:].strip())
    return [p for p in pieces if p]


def segment_sentences(raw_block: str, id_prefix: str = "s") -> list[SentenceRecord]:
    """Segment a block and build records; sentences without tokens are dropped."""
    records = []
    for raw in segment_raw(raw_block):
        rec = sentence_from_raw(f"{id_prefix}{len(records)}", raw)
        if rec.token_len >= 1:
            records.append(rec)
    return records


def extract_ngrams(sentence: SentenceRecord, n: int) -> NGramMultiset:
    """Contiguous token n-grams with multiplicity; empty when too short."""
    if not 1 <= n <= 4:
        raise ValueError(f"n-gram order must be in 1..4, got {n}")
    toks = sentence.tokens
    counts = Counter(toks[i : i + n] for i in range(len(toks) - n + 1))
    return NGramMultiset(n=n, counts=dict(counts))


@dataclass
class LoadReport:
    """Skip-and-count bookkeeping for the streaming loaders."""

    lines: int = 0
    records: int = 0
    skipped: Counter = field(default_factory=Counter)

    def skip(self, reason: str, lineno: int, detail: str = "") -> None:
        self.skipped[reason] += 1
        logger.warning("line %d skipped (%s)%s", lineno, reason,
                       f": {detail}" if detail else "")

    @property
    def total_skipped(self) -> int:
        return sum(self.skipped.values())


def _sentences_from_field(value, id_prefix: str) -> tuple[SentenceRecord, ...]:
    """Build sentence records from a string (segmented) or a list (pre-segmented)."""
    if isinstance(value, str):
        return tuple(segment_sentences(value, id_prefix))
    records = []
    for part in value:
        rec = sentence_from_raw(f"{id_prefix}{len(records)}", str(part).strip())
        if rec.raw and rec.token_len >= 1:
            records.append(rec)
    return tuple(records)


def load_document_corpus(path, report: LoadReport | None = None) -> Iterator[DocumentRecord]:
    """Stream DocumentRecords from a JSON-lines corpus.

    Schema per line: {"id": str, "document": str | [str], "summary": str | [str]}.
    Arrays mean pre-segmented sentences (the segmenter is bypassed).
    Malformed records are skipped and counted on `report`, never fatal.
    """
    report = report if report is not None else LoadReport()
    with open(path, "rb") as fh:
        for lineno, raw_line in enumerate(fh, start=1):
            report.lines = lineno
            if not raw_line.strip():
                continue
            try:
                line = raw_line.decode("utf-8")
            except UnicodeDecodeError as exc:
                report.skip("bad_encoding", lineno, str(exc))
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                report.skip("bad_json", lineno, exc.msg)
                continue
            if not isinstance(obj, dict):
                report.skip("bad_json", lineno, "not an object")
                continue
            missing = [k for k in ("id", "document", "summary") if k not in obj]
            if missing:
                report.skip("missing_field", lineno, ",".join(missing))
                continue
            doc_id = str(obj["id"])
            doc_sents = _sentences_from_field(obj["document"], f"{doc_id}:d")
            sum_sents = _sentences_from_field(obj["summary"], f"{doc_id}:s")
            if not sum_sents:
                report.skip("empty_summary", lineno, doc_id)
                continue
            if not doc_sents:
                report.skip("empty_document", lineno, doc_id)
                continue
            report.records += 1
            yield DocumentRecord(doc_id=doc_id, doc_sentences=doc_sents,
                                 summary_sentences=sum_sents)


def _make_pair(idx: int, src_raw: str, tgt_raw: str) -> ParallelPair:
    return ParallelPair(
        pair_id=str(idx),
        source=sentence_from_raw(f"{idx}:src", src_raw),
        target=sentence_from_raw(f"{idx}:tgt", tgt_raw),
    )


def load_parallel_corpus(source_path, target_path=None,
                         report: LoadReport | None = None) -> Iterator[ParallelPair]:
    """Stream ParallelPairs, complex source -> simple target.

    Two-file mode (line-aligned text files) when `target_path` is given,
    otherwise `source_path` is a two-column TSV (source<TAB>target). Rows
    with an empty side are skipped and counted; a line-count mismatch
    between the two files raises LineCountMismatch.
    """
    report = report if report is not None else LoadReport()
    if target_path is not None:
        yield from _load_two_files(source_path, target_path, report)
    else:
        yield from _load_tsv(source_path, report)


def _load_two_files(source_path, target_path, report: LoadReport) -> Iterator[ParallelPair]:
    sentinel = object()
    with open(source_path, encoding="utf-8") as src_fh, \
         open(target_path, encoding="utf-8") as tgt_fh:
        idx = 0
        while True:
            src_line = next(src_fh, sentinel)
            tgt_line = next(tgt_fh, sentinel)
            if src_line is sentinel and tgt_line is sentinel:
                break
            if src_line is sentinel or tgt_line is sentinel:
                raise LineCountMismatch(
                    f"{source_path} and {target_path} have different line counts "
                    f"(diverge at line {idx + 1})")
            report.lines = idx + 1
            src_raw = src_line.strip()
            tgt_raw = tgt_line.strip()
            if not src_raw or not tgt_raw:
                report.skip("empty_line", idx + 1)
            else:
                pair = _make_pair(idx, src_raw, tgt_raw)
                if pair.source.token_len and pair.target.token_len:
                    report.records += 1
                    yield pair
                else:
                    report.skip("empty_line", idx + 1)
            idx += 1


def _load_tsv(path, report: LoadReport) -> Iterator[ParallelPair]:
    with open(path, encoding="utf-8") as fh:
        for idx, line in enumerate(fh):
            report.lines = idx + 1
            row = line.rstrip("\n").split("\t")
            if len(row) < 2:
                report.skip("bad_row", idx + 1)
                continue
            src_raw, tgt_raw = row[0].strip(), row[1].strip()
            if not src_raw or not tgt_raw:
                report.skip("empty_line", idx + 1)
                continue
            pair = _make_pair(idx, src_raw, tgt_raw)
            if pair.source.token_len and pair.target.token_len:
                report.records += 1
                yield pair
            else:
                report.skip("empty_line", idx + 1)

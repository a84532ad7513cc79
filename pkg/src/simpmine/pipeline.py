"""Pipeline orchestration: align -> attributes -> fit -> score -> filter -> emit.

File formats:
  aligned pairs   JSONL {"doc_id", "target", "sources": [str],
                         "source_indices": [int], "d_max", "final_sim", "strategy"}
  scored pairs    JSONL = aligned record + {"attrs", "t_scores", "T", "accepted"}
  mined dataset   JSONL {"pair_id", "source", "target", "T"}
  stats file      JSON  {"len": {"mu","sigma","n"}, ..., "reference": id}
  run manifest    JSON  config echo + provider/kernel ids + per-stage counts
                  (no timestamps: outputs must be byte-identical across reruns)

Documents are aligned by a bounded worker pool and re-sequenced to input
order before writing, so results are independent of the worker count.
"""

from __future__ import annotations

import json
import logging
import random
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from . import __version__, _kernels
from .aligner import AlignedPair, AlignmentConfig, AlignmentReport, align_document
from .attributes import (
    ComplexityLexicon,
    OddsRatioDict,
    ReferenceProvider,
    compute_attributes,
    is_word_token,
    iter_reference_attributes,
    odds_ratio,
)
from .corpus import (
    LoadReport,
    ParallelPair,
    load_document_corpus,
    load_parallel_corpus,
    sentence_from_raw,
)
from .embedding import EmbeddingProvider, MockProvider, PrecomputedProvider, RemoteProvider
from .errors import ConfigError, DataError, MissingReference
from . import filterer
from .filterer import FilterConfig, FilterReport, ReferenceStats, score_pair

logger = logging.getLogger(__name__)

DEFAULT_CUE_WORDS = ("also", "then", "still")
DEFAULT_CONJUNCTIONS = ("and", "as", "since", "because", "when", "if",
                        "but", "though", "although")


# ---------------------------------------------------------------------------
# providers

@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "mock"  # mock | remote | precomputed
    url: str = ""
    path: str = ""
    mock_dim: int = 256
    max_retries: int = 3
    max_parallel: int = 4

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "remote":
            out["url"] = self.url
        elif self.kind == "precomputed":
            out["path"] = str(self.path)
        else:
            out["dim"] = self.mock_dim
        return out


def make_provider(cfg: ProviderConfig) -> EmbeddingProvider:
    if cfg.kind == "mock":
        return MockProvider(dim=cfg.mock_dim)
    if cfg.kind == "precomputed":
        if not cfg.path:
            raise ConfigError("precomputed provider needs a vector file path")
        return PrecomputedProvider.from_tsv(cfg.path)
    if cfg.kind == "remote":
        if not cfg.url:
            raise ConfigError("remote provider needs a service URL")
        provider = RemoteProvider(cfg.url, max_retries=cfg.max_retries,
                                  max_parallel=cfg.max_parallel)
        provider.health()  # fail fast at startup
        return provider
    raise ConfigError(f"unknown provider kind {cfg.kind!r}")


# ---------------------------------------------------------------------------
# bounded, order-preserving worker pool

def ordered_parallel_map(fn, items: Iterable, workers: int, window: int | None = None):
    """Map with a thread pool, yielding results in input order.

    In-flight work is bounded by `window` so streaming inputs never pile up
    in memory. workers <= 1 degrades to plain map.
    """
    if workers <= 1:
        yield from map(fn, items)
        return
    window = window or workers * 4
    pending: deque = deque()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for item in items:
            pending.append(pool.submit(fn, item))
            if len(pending) >= window:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()


# ---------------------------------------------------------------------------
# wire formats

def aligned_to_wire(pair: AlignedPair) -> dict:
    return {
        "doc_id": pair.doc_id,
        "target": pair.target.raw,
        "sources": [s.raw for s in pair.sources],
        "source_indices": list(pair.source_indices),
        "d_max": pair.max_similarity,
        "final_sim": pair.final_similarity,
        "strategy": pair.strategy,
    }


def wire_to_aligned(obj: dict, pair_id: str) -> AlignedPair:
    doc_id = str(obj["doc_id"])
    sources = tuple(sentence_from_raw(f"{doc_id}:d{i}", raw)
                    for i, raw in zip(obj["source_indices"], obj["sources"]))
    return AlignedPair(
        doc_id=doc_id,
        pair_id=pair_id,
        target=sentence_from_raw(f"{doc_id}:t", str(obj["target"])),
        sources=sources,
        source_indices=tuple(int(i) for i in obj["source_indices"]),
        max_similarity=float(obj["d_max"]),
        final_similarity=float(obj["final_sim"]),
        strategy=str(obj["strategy"]),
    )


def iter_aligned_file(path) -> Iterator[AlignedPair]:
    """Read aligned pairs, re-deriving pair_id = "{doc_id}#{per-doc ordinal}"."""
    ordinals: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            doc_id = str(obj["doc_id"])
            k = ordinals.get(doc_id, 0)
            ordinals[doc_id] = k + 1
            yield wire_to_aligned(obj, f"{doc_id}#{k}")


def _dumps(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False)


# ---------------------------------------------------------------------------
# stage: align

def run_align(corpus_path, provider: EmbeddingProvider, acfg: AlignmentConfig,
              out_path, workers: int = 1, progress_every: int = 500) -> dict:
    """Stream the corpus through the aligner; returns stage counts."""
    load_report = LoadReport()
    totals = AlignmentReport()

    def job(doc):
        report = AlignmentReport()
        pairs = align_document(doc, acfg, provider, report)
        return [aligned_to_wire(p) for p in pairs], report

    docs = load_document_corpus(corpus_path, load_report)
    written = 0
    processed = 0
    with open(out_path, "w", encoding="utf-8") as out:
        for wires, report in ordered_parallel_map(job, docs, workers):
            processed += 1
            totals.targets += report.targets
            totals.aligned += report.aligned
            totals.no_alignment += report.no_alignment
            totals.skipped += report.skipped
            for wire in wires:
                out.write(_dumps(wire) + "\n")
                written += 1
            if progress_every and processed % progress_every == 0:
                logger.info("aligned %d documents (%d pairs so far)",
                            processed, written)
    counts = {
        "documents": load_report.records,
        "documents_skipped": load_report.total_skipped,
        "summary_sentences": totals.targets,
        "aligned": totals.aligned,
        "no_alignment": totals.no_alignment,
        "alignment_skipped": totals.skipped,
    }
    logger.info("alignment done: %s", counts)
    return counts


# ---------------------------------------------------------------------------
# stage: fit reference statistics

def run_fit_reference(parallel_source, parallel_target, lexicon: ComplexityLexicon,
                      odds: OddsRatioDict, ref_provider: ReferenceProvider,
                      attributes: tuple[str, ...], provenance: str) -> ReferenceStats:
    report = LoadReport()
    pairs = load_parallel_corpus(parallel_source, parallel_target, report)
    vectors = iter_reference_attributes(pairs, lexicon, odds, ref_provider)
    stats = filterer.fit_reference_stats(vectors, attributes, provenance)
    logger.info("fitted %d reference pairs (%d rows skipped)",
                stats.sample_count, report.total_skipped)
    return stats


# ---------------------------------------------------------------------------
# stage: score + filter

@dataclass
class ScoreStageCounts:
    scored: int = 0
    accepted: int = 0
    rejected: int = 0
    attribute_errors: int = 0


def score_aligned_stream(pairs: Iterable[AlignedPair], lexicon: ComplexityLexicon,
                         odds: OddsRatioDict, ref_provider: ReferenceProvider,
                         stats: ReferenceStats, fcfg: FilterConfig,
                         counts: ScoreStageCounts,
                         filter_report: FilterReport | None = None):
    """Yield ScoredPair per aligned pair; pairs without references are
    skipped and counted, never fatal."""
    for pair in pairs:
        try:
            raw_refs = ref_provider.refs_for(pair.pair_id, pair.target.raw)
        except MissingReference as exc:
            counts.attribute_errors += 1
            logger.warning("%s", exc)
            continue
        refs = [sentence_from_raw(f"{pair.pair_id}:ref{i}", r)
                for i, r in enumerate(raw_refs)]
        attrs = compute_attributes(pair, lexicon, odds, refs)
        scored = score_pair(pair, attrs, stats, fcfg)
        counts.scored += 1
        if scored.accepted:
            counts.accepted += 1
        else:
            counts.rejected += 1
        if filter_report is not None:
            filter_report.observe(scored)
        yield scored


def scored_to_wire(scored) -> dict:
    wire = aligned_to_wire(scored.pair)
    wire["attrs"] = scored.attrs.by_name()
    wire["t_scores"] = dict(scored.t_scores)
    wire["T"] = scored.total_t
    wire["accepted"] = scored.accepted
    return wire


def mined_to_wire(scored) -> dict:
    return {
        "pair_id": scored.pair.pair_id,
        "source": scored.pair.source_text,
        "target": scored.pair.target.raw,
        "T": scored.total_t,
    }


# ---------------------------------------------------------------------------
# stage: statistics report

@dataclass
class Histogram:
    lo: float
    hi: float
    width: float
    counts: list[int] = field(default_factory=list)
    underflow: int = 0
    overflow: int = 0

    def __post_init__(self):
        if not self.counts:
            nbins = round((self.hi - self.lo) / self.width)
            self.counts = [0] * nbins

    def add(self, value: float) -> None:
        if value < self.lo:
            self.underflow += 1
        elif value >= self.hi:
            self.overflow += 1
        else:
            self.counts[int((value - self.lo) / self.width)] += 1

    def total(self) -> int:
        return self.underflow + self.overflow + sum(self.counts)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "width": self.width,
                "underflow": self.underflow, "counts": self.counts,
                "overflow": self.overflow}


@dataclass
class StatsReport:
    pairs: int
    length_ratio: dict
    complexity_delta: dict | None
    cue_words: list[dict]
    conjunctions: list[dict]
    n_i: int
    n_j: int
    sample_size: int | None = None
    seed: int | None = None
    stage_counts: dict | None = None

    def to_dict(self) -> dict:
        return {
            "pairs": self.pairs,
            "length_ratio_histogram": self.length_ratio,
            "complexity_delta_histogram": self.complexity_delta,
            "cue_words": self.cue_words,
            "conjunctions": self.conjunctions,
            "n_i": self.n_i,
            "n_j": self.n_j,
            "sample_size": self.sample_size,
            "seed": self.seed,
            "stage_counts": self.stage_counts,
        }

    def format_table(self) -> str:
        lines = []
        lines.append(f"pairs analyzed: {self.pairs}")
        lines.append(f"simple-side tokens (n_i): {self.n_i}")
        lines.append(f"complex-side tokens (n_j): {self.n_j}")
        for title, rows in (("cue words", self.cue_words),
                            ("conjunctions", self.conjunctions)):
            lines.append("")
            lines.append(f"{title:<14} {'odds ratio':>10} {'w_i':>8} {'w_j':>8}")
            lines.append("-" * 44)
            for row in rows:
                ratio = "n/a" if row["ratio"] is None else f"{row['ratio']:.4f}"
                lines.append(f"{row['word']:<14} {ratio:>10} "
                             f"{row['w_i']:>8} {row['w_j']:>8}")
        return "\n".join(lines) + "\n"


def iter_mined_pairs(path) -> Iterator[ParallelPair]:
    """Read a mined dataset back as parallel pairs (source -> target)."""
    with open(path, encoding="utf-8") as fh:
        for idx, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            yield ParallelPair(
                pair_id=str(obj.get("pair_id", idx)),
                source=sentence_from_raw(f"{idx}:src", str(obj["source"])),
                target=sentence_from_raw(f"{idx}:tgt", str(obj["target"])),
            )


def _reservoir_sample(pairs: Iterable[ParallelPair], size: int,
                      seed: int) -> list[ParallelPair]:
    rng = random.Random(seed)
    sample: list[ParallelPair] = []
    for i, pair in enumerate(pairs):
        if i < size:
            sample.append(pair)
        else:
            j = rng.randint(0, i)
            if j < size:
                sample[j] = pair
    return sample


def run_stats(pairs: Iterable[ParallelPair],
              lexicon: ComplexityLexicon | None = None,
              cue_words: tuple[str, ...] = DEFAULT_CUE_WORDS,
              conjunctions: tuple[str, ...] = DEFAULT_CONJUNCTIONS,
              sample_size: int | None = None, seed: int = 0) -> StatsReport:
    """Diagnostic statistics over a pair dataset.

    Length ratio (target/source tokens) and, with a lexicon, the complexity
    delta are histogrammed; cue-word and conjunction odds ratios use the
    unsmoothed size-normalized frequency ratio (simple side i = targets).
    """
    if sample_size is not None:
        pairs = _reservoir_sample(pairs, sample_size, seed)

    length_hist = Histogram(lo=0.0, hi=3.0, width=0.1)
    comp_hist = Histogram(lo=-3.0, hi=3.0, width=0.25) if lexicon else None
    tracked = {w.lower() for w in cue_words} | {w.lower() for w in conjunctions}
    counts_i = {w: 0 for w in tracked}
    counts_j = {w: 0 for w in tracked}
    n_i = n_j = 0
    npairs = 0

    for pair in pairs:
        npairs += 1
        src_len = pair.source.token_len
        if src_len > 0:
            length_hist.add(pair.target.token_len / src_len)
        if comp_hist is not None and lexicon is not None:
            comp_hist.add(lexicon.mean_complexity(pair.target.tokens)
                          - lexicon.mean_complexity(pair.source.tokens))
        for tok in pair.target.tokens:
            if is_word_token(tok):
                n_i += 1
                if tok in tracked:
                    counts_i[tok] += 1
        for tok in pair.source.tokens:
            if is_word_token(tok):
                n_j += 1
                if tok in tracked:
                    counts_j[tok] += 1

    def rows(words: tuple[str, ...]) -> list[dict]:
        out = []
        for word in words:
            w = word.lower()
            w_i, w_j = counts_i[w], counts_j[w]
            if w_i == 0 or w_j == 0 or n_i == 0 or n_j == 0:
                ratio = None  # too rare to be meaningful
            else:
                ratio = odds_ratio(w_i, w_j, n_i, n_j, smoothing=False)
            out.append({"word": w, "ratio": ratio, "w_i": w_i, "w_j": w_j})
        return out

    return StatsReport(
        pairs=npairs,
        length_ratio=length_hist.to_dict(),
        complexity_delta=comp_hist.to_dict() if comp_hist else None,
        cue_words=rows(cue_words),
        conjunctions=rows(conjunctions),
        n_i=n_i,
        n_j=n_j,
        sample_size=sample_size,
        seed=seed if sample_size is not None else None,
    )


# ---------------------------------------------------------------------------
# manifest

def build_manifest(config_echo: dict, provider_model: str, counts: dict,
                   refs_mode: str, threshold: float) -> dict:
    return {
        "tool": {"name": "simpmine", "version": __version__,
                 "kernel_backend": _kernels.BACKEND},
        "provider_model": provider_model,
        "refs_mode": refs_mode,
        "threshold": threshold,
        "config": config_echo,
        "counts": counts,
    }


def write_json(path, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def check_stage_conservation(counts: dict) -> None:
    """aligned >= scored >= accepted must reconcile exactly."""
    aligned = counts.get("aligned", 0)
    scored = counts.get("scored", 0)
    accepted = counts.get("accepted", 0)
    if not (aligned >= scored >= accepted):
        raise DataError(f"stage counts do not reconcile: aligned={aligned} "
                        f"scored={scored} accepted={accepted}")
    if scored + counts.get("attribute_errors", 0) != aligned:
        raise DataError("scored + attribute_errors != aligned")
    if counts.get("accepted", 0) + counts.get("rejected", 0) != scored:
        raise DataError("accepted + rejected != scored")

"""Sentence alignment: greedy stitching strategy plus a flat-threshold baseline.

For each summary sentence the stitch strategy either takes the single best
document sentence (similarity above s_max), greedily stitches the next-most-
similar sentences in document order while the stitched text stays above
s_add (capped at l_max sources), or emits nothing (best similarity at or
below s_min). All threshold comparisons are strict; ties on similarity go
to the lowest document index.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

from .corpus import DocumentRecord, SentenceRecord
from .embedding import EmbeddingProvider, similarity
from .errors import AlignmentSkipped, DimensionMismatch, ProviderError

logger = logging.getLogger(__name__)

STRATEGY_STITCH = "stitch"
STRATEGY_BASELINE = "baseline"
STRATEGIES = (STRATEGY_STITCH, STRATEGY_BASELINE)


@dataclass(frozen=True)
class AlignmentConfig:
    s_max: float = 0.8
    s_min: float = 0.6
    s_add: float = 0.7
    l_max: int = 3
    strategy: str = STRATEGY_STITCH
    baseline_cutoff: float = 0.6

    def __post_init__(self):
        if not 0.0 <= self.s_min < self.s_max <= 1.0:
            raise ValueError(f"need 0 <= s_min < s_max <= 1, got "
                             f"s_min={self.s_min}, s_max={self.s_max}")
        if not self.s_min <= self.s_add <= self.s_max:
            raise ValueError(f"s_add must lie in [s_min, s_max], got {self.s_add}")
        if self.l_max < 1:
            raise ValueError(f"l_max must be >= 1, got {self.l_max}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")


@dataclass(frozen=True)
class AlignedPair:
    """One target (summary) sentence with its source sentences in document order."""

    doc_id: str
    pair_id: str
    target: SentenceRecord
    sources: tuple[SentenceRecord, ...]
    source_indices: tuple[int, ...]
    max_similarity: float
    final_similarity: float
    strategy: str

    @property
    def source_text(self) -> str:
        return " ".join(s.raw for s in self.sources)

    @property
    def source_tokens(self) -> tuple[str, ...]:
        out: list[str] = []
        for s in self.sources:
            out.extend(s.tokens)
        return tuple(out)


@dataclass
class AlignmentReport:
    targets: int = 0
    aligned: int = 0
    no_alignment: int = 0
    skipped: int = 0


def _similarities(doc: DocumentRecord, target: SentenceRecord,
                  provider: EmbeddingProvider) -> list[float]:
    texts = [target.raw] + [s.raw for s in doc.doc_sentences]
    vectors = provider.embed_batch(texts)
    target_vec = vectors[0]
    return [similarity(vec, target_vec) for vec in vectors[1:]]


def _argmax(sims: list[float]) -> int:
    """Index of the maximum; ties resolved to the lowest index."""
    best = 0
    for i in range(1, len(sims)):
        if sims[i] > sims[best]:
            best = i
    return best


def _make_pair(doc: DocumentRecord, target: SentenceRecord, indices: list[int],
               d_max: float, final: float, strategy: str) -> AlignedPair:
    ordered = sorted(indices)
    return AlignedPair(
        doc_id=doc.doc_id,
        pair_id="",  # assigned by align_document
        target=target,
        sources=tuple(doc.doc_sentences[i] for i in ordered),
        source_indices=tuple(ordered),
        max_similarity=d_max,
        final_similarity=final,
        strategy=strategy,
    )


def align_summary_sentence(doc: DocumentRecord, target: SentenceRecord,
                           cfg: AlignmentConfig,
                           provider: EmbeddingProvider) -> AlignedPair | None:
    """Align one summary sentence; None when nothing clears s_min.

    Provider failures surface as AlignmentSkipped so the caller can drop
    this target without losing the document; dimension mismatches stay
    fatal.
    """
    if not doc.doc_sentences:
        return None
    try:
        sims = _similarities(doc, target, provider)
        i_max = _argmax(sims)
        d_max = sims[i_max]
        if d_max <= cfg.s_min:
            return None
        if d_max > cfg.s_max:
            return _make_pair(doc, target, [i_max], d_max, d_max, cfg.strategy)

        # s_min < d_max <= s_max: stitch next-most-similar sentences while the
        # stitched text stays above s_add.
        chosen = [i_max]
        final = d_max
        candidates = sorted((i for i in range(len(sims)) if i != i_max),
                            key=lambda i: (-sims[i], i))
        target_vec = provider.embed_batch([target.raw])[0]
        for cand in candidates:
            if len(chosen) >= cfg.l_max:
                break
            stitched_text = " ".join(
                doc.doc_sentences[i].raw for i in sorted(chosen + [cand]))
            stitched_sim = similarity(provider.embed_batch([stitched_text])[0],
                                      target_vec)
            if stitched_sim > cfg.s_add:
                chosen.append(cand)
                final = stitched_sim
            else:
                break
        return _make_pair(doc, target, chosen, d_max, final, cfg.strategy)
    except DimensionMismatch:
        raise
    except ProviderError as exc:
        raise AlignmentSkipped(f"target {target.id}: {exc}") from exc


def align_baseline(doc: DocumentRecord, target: SentenceRecord,
                   provider: EmbeddingProvider,
                   cutoff: float = 0.6) -> AlignedPair | None:
    """Keep every document sentence whose similarity exceeds the cutoff.

    No cap on the number of sources; None when nothing clears the cutoff.
    """
    if not doc.doc_sentences:
        return None
    try:
        sims = _similarities(doc, target, provider)
        kept = [i for i, s in enumerate(sims) if s > cutoff]
        if not kept:
            return None
        d_max = sims[_argmax(sims)]
        if len(kept) == 1:
            final = sims[kept[0]]
        else:
            stitched_text = " ".join(doc.doc_sentences[i].raw for i in kept)
            vecs = provider.embed_batch([stitched_text, target.raw])
            final = similarity(vecs[0], vecs[1])
        return _make_pair(doc, target, kept, d_max, final, STRATEGY_BASELINE)
    except DimensionMismatch:
        raise
    except ProviderError as exc:
        raise AlignmentSkipped(f"target {target.id}: {exc}") from exc


def align_document(doc: DocumentRecord, cfg: AlignmentConfig,
                   provider: EmbeddingProvider,
                   report: AlignmentReport | None = None) -> list[AlignedPair]:
    """Align every summary sentence independently.

    Document sentences may serve several summary sentences (no exclusivity).
    Per-target provider failures are counted and skipped; the document never
    aborts. Emitted pairs get pair_id "{doc_id}#{ordinal}" in emission order.
    """
    report = report if report is not None else AlignmentReport()
    pairs: list[AlignedPair] = []
    for target in doc.summary_sentences:
        report.targets += 1
        try:
            if cfg.strategy == STRATEGY_BASELINE:
                pair = align_baseline(doc, target, provider, cfg.baseline_cutoff)
            else:
                pair = align_summary_sentence(doc, target, cfg, provider)
        except AlignmentSkipped as exc:
            report.skipped += 1
            logger.warning("alignment skipped: %s", exc)
            continue
        if pair is None:
            report.no_alignment += 1
        else:
            report.aligned += 1
            pairs.append(dataclasses.replace(pair, pair_id=f"{doc.doc_id}#{len(pairs)}"))
    return pairs

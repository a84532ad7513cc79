"""The four per-pair simplification attributes and their resources.

phi_len   target token count minus the mean source token count
phi_comp  mean lexicon complexity of target words minus source words
phi_freq  mean corpus odds ratio of target words minus source words
phi_sari  keep/add F1 and delete precision over 1..4-gram multisets,
          averaged (the classic simplification metric)

Word-level statistics run over lowercased word tokens (tokens containing at
least one alphanumeric character); punctuation never counts. Multi-source
pairs pool their source tokens (and concatenate raw text for SARI input).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Iterable, Iterator

from . import _kernels
from .aligner import AlignedPair
from .corpus import ParallelPair, SentenceRecord, sentence_from_raw
from .errors import EmptyCorpus, MissingReference, NoReferences

logger = logging.getLogger(__name__)

ATTRIBUTES = ("len", "comp", "freq", "sari")


def is_word_token(token: str) -> bool:
    return any(ch.isalnum() for ch in token)


def word_tokens(tokens: Iterable[str]) -> list[str]:
    return [t for t in tokens if is_word_token(t)]


class ComplexityLexicon:
    """Word -> human complexity score; lookups are case-insensitive."""

    def __init__(self, scores: dict[str, float], source: str = "memory"):
        self._scores = {}
        for word, score in scores.items():
            if score < 0:
                raise ValueError(f"negative complexity score for {word!r}: {score}")
            self._scores[word.lower()] = float(score)
        self.source = source

    @classmethod
    def from_tsv(cls, path) -> "ComplexityLexicon":
        scores = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) < 2:
                    raise ValueError(f"{path}:{lineno}: expected word<TAB>score")
                try:
                    scores[parts[0]] = float(parts[1])
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: bad score {parts[1]!r}") from exc
        return cls(scores, source=str(path))

    def __len__(self) -> int:
        return len(self._scores)

    def lookup(self, word: str) -> float | None:
        return self._scores.get(word.lower())

    def mean_complexity(self, tokens: Iterable[str]) -> float:
        """Mean score over in-lexicon word tokens; 0.0 when none are covered."""
        total = 0.0
        n = 0
        for tok in tokens:
            if not is_word_token(tok):
                continue
            score = self._scores.get(tok.lower())
            if score is not None:
                total += score
                n += 1
        return total / n if n else 0.0

    def coverage(self, tokens: Iterable[str]) -> float:
        words = word_tokens(tokens)
        if not words:
            return 0.0
        hits = sum(1 for w in words if self.lookup(w) is not None)
        return hits / len(words)


@dataclass
class OddsRatioDict:
    """Per-word odds ratios between a simple corpus (i) and a complex one (j).

    r > 1 means the word is more typical of the simple corpus. Words below
    the frequency floor are absent and treated as neutral (1.0). `counts`
    keeps the raw (w_i, w_j) pairs for export and reporting.
    """

    ratios: dict[str, float]
    n_i: int
    n_j: int
    smoothing: bool
    floor: int = 0
    counts: dict[str, tuple[int, int]] | None = None

    def __post_init__(self):
        for word, r in self.ratios.items():
            if not r > 0:
                raise ValueError(f"odds ratio for {word!r} must be > 0, got {r}")

    def ratio(self, word: str) -> float:
        return self.ratios.get(word.lower(), 1.0)

    def mean_ratio(self, tokens: Iterable[str]) -> float:
        """Mean ratio over word tokens; neutral 1.0 when the side has none."""
        total = 0.0
        n = 0
        for tok in tokens:
            if is_word_token(tok):
                total += self.ratios.get(tok, 1.0)
                n += 1
        return total / n if n else 1.0

    def export_tsv(self, path) -> None:
        counts = self.counts or {}
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# n_i={self.n_i}\tn_j={self.n_j}\t"
                     f"smoothing={int(self.smoothing)}\tfloor={self.floor}\n")
            for word in sorted(self.ratios):
                w_i, w_j = counts.get(word, (0, 0))
                fh.write(f"{word}\t{self.ratios[word]!r}\t{w_i}\t{w_j}\n")

    @classmethod
    def load_tsv(cls, path) -> "OddsRatioDict":
        ratios: dict[str, float] = {}
        counts: dict[str, tuple[int, int]] = {}
        n_i = n_j = 0
        smoothing = True
        floor = 0
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                if line.startswith("#"):
                    for chunk in line[1:].split("\t"):
                        key, _, value = chunk.strip().partition("=")
                        if key == "n_i":
                            n_i = int(value)
                        elif key == "n_j":
                            n_j = int(value)
                        elif key == "smoothing":
                            smoothing = bool(int(value))
                        elif key == "floor":
                            floor = int(value)
                    continue
                parts = line.split("\t")
                if len(parts) < 2:
                    raise ValueError(f"{path}:{lineno}: expected word<TAB>ratio[...]")
                ratios[parts[0]] = float(parts[1])
                if len(parts) >= 4:
                    counts[parts[0]] = (int(parts[2]), int(parts[3]))
        return cls(ratios=ratios, n_i=n_i, n_j=n_j, smoothing=smoothing,
                   floor=floor, counts=counts)


def odds_ratio(w_i: int, w_j: int, n_i: int, n_j: int, smoothing: bool = True) -> float:
    """Size-normalized frequency ratio of a word between corpora i and j."""
    if n_i <= 0 or n_j <= 0:
        raise ValueError("corpus sizes must be positive")
    if smoothing:
        return ((w_i + 1) / (w_j + 1)) / (n_i / n_j)
    if w_j == 0:
        raise ZeroDivisionError("unsmoothed odds ratio with w_j == 0")
    return (w_i / w_j) / (n_i / n_j)


def build_odds_dict(pairs: Iterable[ParallelPair], floor: int = 5,
                    smoothing: bool = True) -> OddsRatioDict:
    """Fit odds ratios on a parallel corpus: i = simple targets, j = complex sources.

    Words whose combined count is below `floor` are omitted (neutral later).
    """
    counts_i: dict[str, int] = {}
    counts_j: dict[str, int] = {}
    n_i = n_j = 0
    seen = 0
    for pair in pairs:
        seen += 1
        for tok in pair.target.tokens:
            if is_word_token(tok):
                counts_i[tok] = counts_i.get(tok, 0) + 1
                n_i += 1
        for tok in pair.source.tokens:
            if is_word_token(tok):
                counts_j[tok] = counts_j.get(tok, 0) + 1
                n_j += 1
    if seen == 0 or n_i == 0 or n_j == 0:
        raise EmptyCorpus("cannot fit odds ratios on an empty corpus")
    ratios: dict[str, float] = {}
    counts: dict[str, tuple[int, int]] = {}
    for word in counts_i.keys() | counts_j.keys():
        w_i = counts_i.get(word, 0)
        w_j = counts_j.get(word, 0)
        if w_i + w_j < floor:
            continue
        if not smoothing and (w_i == 0 or w_j == 0):
            continue  # ratio would be 0 or undefined; treat as absent
        ratios[word] = odds_ratio(w_i, w_j, n_i, n_j, smoothing)
        counts[word] = (w_i, w_j)
    return OddsRatioDict(ratios=ratios, n_i=n_i, n_j=n_j,
                         smoothing=smoothing, floor=floor, counts=counts)


@dataclass(frozen=True)
class AttributeVector:
    phi_len: float
    phi_comp: float
    phi_freq: float
    phi_sari: float

    def by_name(self) -> dict[str, float]:
        return {"len": self.phi_len, "comp": self.phi_comp,
                "freq": self.phi_freq, "sari": self.phi_sari}


@dataclass(frozen=True)
class SariScore:
    f_add: float
    f_keep: float
    p_del: float
    sari: float


def attr_length(pair: AlignedPair) -> float:
    """Target length minus mean source length, in tokens (negative = compression)."""
    if not pair.sources:
        raise ValueError("pair has no sources")
    mean_src = sum(s.token_len for s in pair.sources) / len(pair.sources)
    return pair.target.token_len - mean_src


def attr_complexity(pair: AlignedPair, lexicon: ComplexityLexicon) -> float:
    """Mean word complexity of the target minus the pooled sources."""
    return (lexicon.mean_complexity(pair.target.tokens)
            - lexicon.mean_complexity(pair.source_tokens))


def attr_frequency(pair: AlignedPair, odds: OddsRatioDict) -> float:
    """Mean odds ratio of the target words minus the pooled source words."""
    return odds.mean_ratio(pair.target.tokens) - odds.mean_ratio(pair.source_tokens)


def _pr(good: int, cand: int, targ: int, k: int) -> tuple[float, float]:
    # 0/0 convention: an empty candidate (resp. target) multiset scores 1
    # when its counterpart is empty too, else 0.
    if cand == 0:
        p = 1.0 if targ == 0 else 0.0
    else:
        p = good / (cand * k)
    if targ == 0:
        r = 1.0 if cand == 0 else 0.0
    else:
        r = good / targ
    return p, r


def _f1(p: float, r: float) -> float:
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r)


def sari_tokens(input_tokens, output_tokens, refs_tokens, max_n: int = 4) -> SariScore:
    """SARI over token sequences (see `sari` for the record-level wrapper)."""
    if not refs_tokens:
        raise NoReferences("SARI needs at least one reference sentence")
    if not input_tokens:
        raise ValueError("SARI input sentence must be non-empty")
    k = len(refs_tokens)
    stats = _kernels.sari_ngram_stats(list(input_tokens), list(output_tokens),
                                      [list(r) for r in refs_tokens], max_n)
    p_keep = r_keep = p_add = r_add = p_del = 0.0
    for row in stats:
        kp, kr = _pr(row[0], row[1], row[2], k)
        ap, ar = _pr(row[3], row[4], row[5], k)
        dp, _ = _pr(row[6], row[7], row[8], k)
        p_keep += kp
        r_keep += kr
        p_add += ap
        r_add += ar
        p_del += dp
    n = len(stats)
    p_keep /= n
    r_keep /= n
    p_add /= n
    r_add /= n
    p_del /= n
    f_keep = _f1(p_keep, r_keep)
    f_add = _f1(p_add, r_add)
    return SariScore(f_add=f_add, f_keep=f_keep, p_del=p_del,
                     sari=(f_add + f_keep + p_del) / 3.0)


def sari(input_sentence: SentenceRecord, output_sentence: SentenceRecord,
         refs: list[SentenceRecord]) -> SariScore:
    """SARI of `output_sentence` rewriting `input_sentence`, judged against refs."""
    return sari_tokens(input_sentence.tokens, output_sentence.tokens,
                       [r.tokens for r in refs])


REFS_IDENTITY = "identity"
REFS_EXTERNAL = "external"


class ReferenceProvider:
    """Reference sentences for SARI, per pair.

    identity mode: the target itself is the single reference (a degenerate
    fallback that pins phi_sari to 1.0; flagged in run metadata).
    external mode: JSON-lines file {"pair_id": str, "refs": [str]}.
    """

    def __init__(self, mode: str, refs_by_id: dict[str, list[str]] | None = None,
                 source: str = ""):
        self.mode = mode
        self._refs = refs_by_id or {}
        self.source = source

    @classmethod
    def identity(cls) -> "ReferenceProvider":
        return cls(REFS_IDENTITY)

    @classmethod
    def from_file(cls, path) -> "ReferenceProvider":
        refs: dict[str, list[str]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                if "pair_id" not in obj or "refs" not in obj:
                    raise ValueError(f"{path}:{lineno}: need 'pair_id' and 'refs'")
                refs[str(obj["pair_id"])] = [str(r) for r in obj["refs"]]
        return cls(REFS_EXTERNAL, refs, source=str(path))

    def refs_for(self, pair_id: str, target_raw: str) -> list[str]:
        if self.mode == REFS_IDENTITY:
            return [target_raw]
        try:
            return self._refs[pair_id]
        except KeyError:
            raise MissingReference(f"no reference sentences for pair {pair_id!r} "
                                   f"in {self.source}") from None


def compute_attributes(pair: AlignedPair, lexicon: ComplexityLexicon,
                       odds: OddsRatioDict,
                       refs: list[SentenceRecord]) -> AttributeVector:
    """All four attributes for a pair; SARI input is the concatenated sources."""
    score = sari_tokens(pair.source_tokens, pair.target.tokens,
                        [r.tokens for r in refs])
    return AttributeVector(
        phi_len=attr_length(pair),
        phi_comp=attr_complexity(pair, lexicon),
        phi_freq=attr_frequency(pair, odds),
        phi_sari=score.sari,
    )


def parallel_as_aligned(pair: ParallelPair) -> AlignedPair:
    """View a 1-1 reference pair as a single-source aligned pair for attribute use."""
    return AlignedPair(
        doc_id=pair.pair_id, pair_id=pair.pair_id, target=pair.target,
        sources=(pair.source,), source_indices=(0,),
        max_similarity=1.0, final_similarity=1.0, strategy="reference")


def iter_reference_attributes(pairs: Iterable[ParallelPair],
                              lexicon: ComplexityLexicon, odds: OddsRatioDict,
                              ref_provider: ReferenceProvider) -> Iterator[AttributeVector]:
    """Attribute vectors for a reference parallel corpus, streaming."""
    for pair in pairs:
        aligned = parallel_as_aligned(pair)
        raw_refs = ref_provider.refs_for(pair.pair_id, pair.target.raw)
        refs = [sentence_from_raw(f"{pair.pair_id}:ref{i}", r)
                for i, r in enumerate(raw_refs)]
        yield compute_attributes(aligned, lexicon, odds, refs)

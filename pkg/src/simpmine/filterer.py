"""Gaussian scoring and filtering of attribute vectors.

Each attribute value phi is converted to a score t in [0, 1] against the
(mu, sigma) fitted on a reference simplification corpus: values on the
"more simplified than the reference mean" side score exactly 1; on the
other side the score is twice the tail mass of the fitted normal beyond
phi. Scores are combined into T on the unweighted scale (alphas are
relative weights normalized to sum to the number of active attributes,
so with defaults T ranges over [0, 4]) and a pair is accepted iff T > t_s.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .aligner import AlignedPair
from .attributes import ATTRIBUTES, AttributeVector
from .errors import DegenerateAttribute, EmptyCorpus, NonPositiveSigma

logger = logging.getLogger(__name__)

_SQRT2 = math.sqrt(2.0)

# attributes where a LOWER phi means more simplification
LOWER_BETTER = ("len", "comp", "freq")
HIGHER_BETTER = ("sari",)

DEFAULT_THRESHOLD = 3.75  # midpoint of the searched range [3.5, 3.8]


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the C library error function."""
    return 0.5 * math.erfc(-z / _SQRT2)


def score_lower_better(phi: float, mu: float, sigma: float) -> float:
    """1 at or below the mean, else twice the upper-tail mass at phi."""
    if sigma <= 0:
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma}")
    if phi <= mu:
        return 1.0
    return math.erfc((phi - mu) / (sigma * _SQRT2))


def score_higher_better(phi: float, mu: float, sigma: float) -> float:
    """1 at or above the mean, else twice the lower-tail mass at phi."""
    if sigma <= 0:
        raise NonPositiveSigma(f"sigma must be > 0, got {sigma}")
    if phi >= mu:
        return 1.0
    return math.erfc((mu - phi) / (sigma * _SQRT2))


@dataclass
class ReferenceStats:
    """Per-attribute sample mean and standard deviation of a reference corpus."""

    mu: dict[str, float]
    sigma: dict[str, float]
    sample_count: int
    provenance: str = ""

    def to_json_dict(self) -> dict:
        out = {}
        for attr in self.mu:
            out[attr] = {"mu": self.mu[attr], "sigma": self.sigma[attr],
                         "n": self.sample_count}
        out["reference"] = self.provenance
        return out

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ReferenceStats":
        mu: dict[str, float] = {}
        sigma: dict[str, float] = {}
        n = 0
        for attr, stats in obj.items():
            if attr == "reference":
                continue
            mu[attr] = float(stats["mu"])
            sigma[attr] = float(stats["sigma"])
            n = int(stats["n"])
        return cls(mu=mu, sigma=sigma, sample_count=n,
                   provenance=str(obj.get("reference", "")))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ReferenceStats":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def fit_reference_stats(attribute_vectors: Iterable[AttributeVector],
                        attributes: tuple[str, ...] = ATTRIBUTES,
                        provenance: str = "") -> ReferenceStats:
    """Sample mean and n-1 standard deviation per attribute, streaming.

    Raises EmptyCorpus below 2 samples and DegenerateAttribute when an
    attribute has zero variance (e.g. SARI under identity references).
    """
    n = 0
    total = {a: 0.0 for a in attributes}
    total_sq = {a: 0.0 for a in attributes}
    for vec in attribute_vectors:
        values = vec.by_name()
        n += 1
        for a in attributes:
            total[a] += values[a]
            total_sq[a] += values[a] * values[a]
    if n < 2:
        raise EmptyCorpus(f"need at least 2 reference pairs to fit, got {n}")
    mu = {a: total[a] / n for a in attributes}
    sigma = {}
    for a in attributes:
        var = (total_sq[a] - n * mu[a] * mu[a]) / (n - 1)
        sigma[a] = math.sqrt(max(0.0, var))
        if sigma[a] <= 0.0:
            raise DegenerateAttribute(a)
    return ReferenceStats(mu=mu, sigma=sigma, sample_count=n, provenance=provenance)


@dataclass(frozen=True)
class FilterConfig:
    """Relative attribute weights plus the acceptance threshold.

    Only attributes present in `alphas` are active; weights are normalized
    internally so they sum to the number of active attributes (0.25 each and
    1.0 each are therefore equivalent). t_s lives on that unweighted scale.
    """

    alphas: dict[str, float] = field(
        default_factory=lambda: {a: 0.25 for a in ATTRIBUTES})
    t_s: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if not self.alphas:
            raise ValueError("at least one attribute must be active")
        for attr, alpha in self.alphas.items():
            if attr not in ATTRIBUTES:
                raise ValueError(f"unknown attribute {attr!r}")
            if alpha < 0:
                raise ValueError(f"alpha for {attr} must be >= 0, got {alpha}")
        if sum(self.alphas.values()) <= 0:
            raise ValueError("alphas must not all be zero")

    @property
    def active_attributes(self) -> tuple[str, ...]:
        return tuple(a for a in ATTRIBUTES if a in self.alphas)

    def effective_weights(self) -> dict[str, float]:
        active = self.active_attributes
        scale = len(active) / sum(self.alphas[a] for a in active)
        return {a: self.alphas[a] * scale for a in active}


@dataclass(frozen=True)
class ScoredPair:
    pair: AlignedPair
    attrs: AttributeVector
    t_scores: dict[str, float]
    total_t: float
    accepted: bool


def score_attributes(attrs: AttributeVector, stats: ReferenceStats,
                     cfg: FilterConfig) -> tuple[dict[str, float], float, bool]:
    """Per-attribute t scores, their weighted sum T, and the accept decision."""
    values = attrs.by_name()
    weights = cfg.effective_weights()
    t_scores: dict[str, float] = {}
    total = 0.0
    for attr in cfg.active_attributes:
        phi = values[attr]
        mu = stats.mu[attr]
        sigma = stats.sigma[attr]
        if attr in HIGHER_BETTER:
            t = score_higher_better(phi, mu, sigma)
        else:
            t = score_lower_better(phi, mu, sigma)
        t_scores[attr] = t
        total += weights[attr] * t
    return t_scores, total, total > cfg.t_s


def score_pair(pair: AlignedPair, attrs: AttributeVector, stats: ReferenceStats,
               cfg: FilterConfig) -> ScoredPair:
    t_scores, total, accepted = score_attributes(attrs, stats, cfg)
    return ScoredPair(pair=pair, attrs=attrs, t_scores=t_scores,
                      total_t=total, accepted=accepted)


@dataclass
class FilterReport:
    """Accept/reject counts plus per-attribute t histograms (20 bins on [0,1])."""

    accepted: int = 0
    rejected: int = 0
    bins: int = 20
    t_histograms: dict[str, list[int]] = field(default_factory=dict)

    def observe(self, scored: ScoredPair) -> None:
        if scored.accepted:
            self.accepted += 1
        else:
            self.rejected += 1
        for attr, t in scored.t_scores.items():
            hist = self.t_histograms.setdefault(attr, [0] * self.bins)
            idx = min(int(t * self.bins), self.bins - 1)
            hist[idx] += 1

    def to_dict(self) -> dict:
        return {"accepted": self.accepted, "rejected": self.rejected,
                "t_histogram_bins": self.bins,
                "t_histograms": dict(sorted(self.t_histograms.items()))}


def filter_stream(scored: Iterable[ScoredPair],
                  report: FilterReport | None = None) -> Iterator[ScoredPair]:
    """Yield accepted pairs, tallying everything on the report."""
    report = report if report is not None else FilterReport()
    for sp in scored:
        report.observe(sp)
        if sp.accepted:
            yield sp

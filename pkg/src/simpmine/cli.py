"""Command-line interface.

Subcommands mirror the pipeline stages (align, fit-reference, score, mine,
stats, sari). Options can come from a JSON/YAML config file (--config);
explicit flags override the file, which overrides built-in defaults, and
the run manifest echoes every effective value. Progress goes to stderr,
outputs go to files, stdout carries only the final status line.

Exit codes: 0 success, 1 fatal config error, 2 provider failure, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import yaml

from . import __version__, _kernels, pipeline
from .aligner import STRATEGIES, STRATEGY_STITCH, AlignmentConfig
from .attributes import (
    ATTRIBUTES,
    ComplexityLexicon,
    OddsRatioDict,
    ReferenceProvider,
    build_odds_dict,
    sari_tokens,
)
from .corpus import LoadReport, load_parallel_corpus, tokenize
from .errors import ConfigError, DataError, ProviderError
from .filterer import DEFAULT_THRESHOLD, FilterConfig, FilterReport, ReferenceStats
from .pipeline import (
    DEFAULT_CONJUNCTIONS,
    DEFAULT_CUE_WORDS,
    ProviderConfig,
    ScoreStageCounts,
)

logger = logging.getLogger(__name__)

_ALIGN_DEFAULTS = {
    "provider": "mock", "provider_url": "", "provider_file": "", "mock_dim": 256,
    "provider_retries": 3, "strategy": STRATEGY_STITCH, "s_max": 0.8,
    "s_min": 0.6, "s_add": 0.7, "l_max": 3, "baseline_cutoff": 0.6, "workers": 1,
}
_FILTER_DEFAULTS = {"t_s": DEFAULT_THRESHOLD}


def _load_config_file(path) -> dict:
    if not path:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        if str(path).endswith((".yaml", ".yml")):
            obj = yaml.safe_load(fh)
        else:
            obj = json.load(fh)
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        raise ConfigError(f"config file must be a mapping: {path}")
    return obj


def _effective(defaults: dict, file_cfg: dict, args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags; None means 'not given'."""
    merged = dict(defaults)
    for key, value in file_cfg.items():
        if key in merged:
            merged[key] = value
    for key in merged:
        given = getattr(args, key, None)
        if given is not None:
            merged[key] = given
    return merged


def _require_file(path, what: str) -> str:
    if not path:
        raise ConfigError(f"{what} is required")
    if not os.path.exists(path):
        raise ConfigError(f"{what} not found: {path}")
    return path


def _provider_config(cfg: dict) -> ProviderConfig:
    kind = cfg["provider"]
    if kind == "remote" and not cfg["provider_url"]:
        raise ConfigError("--provider remote needs --provider-url")
    if kind == "precomputed":
        _require_file(cfg["provider_file"], "--provider-file")
    return ProviderConfig(kind=kind, url=cfg["provider_url"],
                          path=cfg["provider_file"], mock_dim=int(cfg["mock_dim"]),
                          max_retries=int(cfg["provider_retries"]))


def _alignment_config(cfg: dict) -> AlignmentConfig:
    try:
        return AlignmentConfig(
            s_max=float(cfg["s_max"]), s_min=float(cfg["s_min"]),
            s_add=float(cfg["s_add"]), l_max=int(cfg["l_max"]),
            strategy=cfg["strategy"], baseline_cutoff=float(cfg["baseline_cutoff"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _filter_config(args: argparse.Namespace, file_cfg: dict) -> FilterConfig:
    cfg = _effective(_FILTER_DEFAULTS, file_cfg, args)
    alphas = {a: 0.25 for a in ATTRIBUTES}
    for attr in getattr(args, "disable", None) or file_cfg.get("disable", []) or []:
        if attr not in ATTRIBUTES:
            raise ConfigError(f"unknown attribute {attr!r} in --disable")
        alphas.pop(attr, None)
    for assignment in getattr(args, "alpha", None) or []:
        attr, _, value = assignment.partition("=")
        if attr not in ATTRIBUTES or not value:
            raise ConfigError(f"--alpha expects attr=weight, got {assignment!r}")
        if attr in alphas:
            alphas[attr] = float(value)
    try:
        return FilterConfig(alphas=alphas, t_s=float(cfg["t_s"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _ref_provider(refs: str | None) -> ReferenceProvider:
    if not refs or refs == "identity":
        return ReferenceProvider.identity()
    _require_file(refs, "--refs file")
    return ReferenceProvider.from_file(refs)


def _load_resources(args) -> tuple[ComplexityLexicon, OddsRatioDict]:
    lexicon = ComplexityLexicon.from_tsv(_require_file(args.lexicon, "--lexicon"))
    odds = OddsRatioDict.load_tsv(_require_file(args.odds_dict, "--odds-dict"))
    return lexicon, odds


def _status(message: str) -> None:
    print(message)


# ---------------------------------------------------------------------------
# subcommand handlers

def cmd_align(args) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = _effective(_ALIGN_DEFAULTS, file_cfg, args)
    corpus = _require_file(args.corpus, "--corpus")
    provider = pipeline.make_provider(_provider_config(cfg))
    acfg = _alignment_config(cfg)
    counts = pipeline.run_align(corpus, provider, acfg, args.out,
                                workers=int(cfg["workers"]))
    _status(f"aligned: {counts['aligned']} pairs from {counts['documents']} "
            f"documents -> {args.out}")
    return 0


def cmd_fit_reference(args) -> int:
    if args.tsv:
        source, target = _require_file(args.tsv, "--tsv"), None
    else:
        source = _require_file(args.source, "--source")
        target = _require_file(args.target, "--target")
    lexicon = ComplexityLexicon.from_tsv(_require_file(args.lexicon, "--lexicon"))

    if args.odds_dict:
        odds = OddsRatioDict.load_tsv(_require_file(args.odds_dict, "--odds-dict"))
    else:
        report = LoadReport()
        odds = build_odds_dict(load_parallel_corpus(source, target, report),
                               floor=args.odds_floor,
                               smoothing=not args.no_smoothing)
        if args.odds_out:
            odds.export_tsv(args.odds_out)
            logger.info("odds dictionary (%d words) -> %s", len(odds.ratios),
                        args.odds_out)

    attributes = tuple(a for a in ATTRIBUTES if a not in set(args.disable or []))
    if not attributes:
        raise ConfigError("cannot disable every attribute")
    ref_provider = _ref_provider(args.refs)
    stats = pipeline.run_fit_reference(
        source, target, lexicon, odds, ref_provider, attributes,
        provenance=os.path.basename(str(source)))
    stats.save(args.out)
    for attr in attributes:
        logger.info("fit %-5s mu=%.6f sigma=%.6f n=%d",
                    attr, stats.mu[attr], stats.sigma[attr], stats.sample_count)
    _status(f"reference stats ({stats.sample_count} pairs) -> {args.out}")
    return 0


def _score_stream_to_files(aligned_iter, lexicon, odds, ref_provider, stats,
                           fcfg, scored_path, mined_path):
    counts = ScoreStageCounts()
    freport = FilterReport()
    scored_out = open(scored_path, "w", encoding="utf-8") if scored_path else None
    mined_out = open(mined_path, "w", encoding="utf-8") if mined_path else None
    try:
        for scored in pipeline.score_aligned_stream(
                aligned_iter, lexicon, odds, ref_provider, stats, fcfg,
                counts, freport):
            if scored_out:
                scored_out.write(json.dumps(pipeline.scored_to_wire(scored),
                                            ensure_ascii=False) + "\n")
            if mined_out and scored.accepted:
                mined_out.write(json.dumps(pipeline.mined_to_wire(scored),
                                           ensure_ascii=False) + "\n")
    finally:
        if scored_out:
            scored_out.close()
        if mined_out:
            mined_out.close()
    return counts, freport


def cmd_score(args) -> int:
    file_cfg = _load_config_file(args.config)
    aligned = _require_file(args.aligned, "--aligned")
    stats = ReferenceStats.load(_require_file(args.stats, "--stats"))
    lexicon, odds = _load_resources(args)
    fcfg = _filter_config(args, file_cfg)
    ref_provider = _ref_provider(args.refs)
    counts, _ = _score_stream_to_files(
        pipeline.iter_aligned_file(aligned), lexicon, odds, ref_provider,
        stats, fcfg, args.out, None)
    _status(f"scored: {counts.scored} pairs ({counts.accepted} accepted at "
            f"T > {fcfg.t_s}) -> {args.out}")
    return 0


def cmd_mine(args) -> int:
    file_cfg = _load_config_file(args.config)
    cfg = _effective(_ALIGN_DEFAULTS, file_cfg, args)
    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)

    stats = ReferenceStats.load(_require_file(args.stats, "--stats"))
    lexicon, odds = _load_resources(args)
    fcfg = _filter_config(args, file_cfg)
    ref_provider = _ref_provider(args.refs)

    stage_counts: dict = {}
    if args.aligned:
        aligned_path = _require_file(args.aligned, "--aligned")
        provider_model = "none (pre-aligned input)"
    else:
        corpus = _require_file(args.corpus, "--corpus")
        provider = pipeline.make_provider(_provider_config(cfg))
        provider_model = provider.model_id()
        aligned_path = os.path.join(out_dir, "aligned.jsonl")
        stage_counts.update(pipeline.run_align(
            corpus, provider, _alignment_config(cfg), aligned_path,
            workers=int(cfg["workers"])))

    scored_path = os.path.join(out_dir, "scored.jsonl")
    mined_path = os.path.join(out_dir, "mined.jsonl")
    counts, freport = _score_stream_to_files(
        pipeline.iter_aligned_file(aligned_path), lexicon, odds, ref_provider,
        stats, fcfg, scored_path, mined_path)
    stage_counts.setdefault("aligned", counts.scored + counts.attribute_errors)
    stage_counts.update(scored=counts.scored, accepted=counts.accepted,
                        rejected=counts.rejected,
                        attribute_errors=counts.attribute_errors)
    pipeline.check_stage_conservation(stage_counts)

    config_echo = dict(cfg)
    config_echo.update(t_s=fcfg.t_s, alphas=fcfg.effective_weights(),
                       active_attributes=list(fcfg.active_attributes),
                       stats_file=str(args.stats), lexicon=str(args.lexicon),
                       odds_dict=str(args.odds_dict),
                       refs=str(args.refs or "identity"))
    manifest = pipeline.build_manifest(
        config_echo, provider_model, stage_counts,
        refs_mode=ref_provider.mode, threshold=fcfg.t_s)
    manifest["filter_report"] = freport.to_dict()
    pipeline.write_json(os.path.join(out_dir, "manifest.json"), manifest)

    _status(f"mined: {counts.accepted}/{counts.scored} pairs accepted at "
            f"T > {fcfg.t_s} -> {mined_path}")
    return 0


def _stage_counts_for(args) -> dict | None:
    """Counts from an explicit --manifest, or the one beside a mined dataset."""
    manifest_path = args.manifest
    if not manifest_path and args.pairs:
        candidate = os.path.join(os.path.dirname(os.path.abspath(args.pairs)),
                                 "manifest.json")
        if os.path.exists(candidate):
            manifest_path = candidate
    if not manifest_path:
        return None
    with open(_require_file(manifest_path, "--manifest"), encoding="utf-8") as fh:
        return json.load(fh).get("counts")


def cmd_stats(args) -> int:
    if args.pairs:
        pairs = pipeline.iter_mined_pairs(_require_file(args.pairs, "--pairs"))
    elif args.tsv:
        pairs = load_parallel_corpus(_require_file(args.tsv, "--tsv"))
    else:
        source = _require_file(args.source, "--source")
        target = _require_file(args.target, "--target")
        pairs = load_parallel_corpus(source, target)

    lexicon = None
    if args.lexicon:
        lexicon = ComplexityLexicon.from_tsv(_require_file(args.lexicon, "--lexicon"))
    cue = tuple(args.cue_words.split(",")) if args.cue_words else DEFAULT_CUE_WORDS
    conj = (tuple(args.conjunctions.split(","))
            if args.conjunctions else DEFAULT_CONJUNCTIONS)

    report = pipeline.run_stats(pairs, lexicon, cue, conj,
                                sample_size=args.sample, seed=args.seed or 0)
    report.stage_counts = _stage_counts_for(args)
    json_path = f"{args.out_prefix}.json"
    txt_path = f"{args.out_prefix}.txt"
    pipeline.write_json(json_path, report.to_dict())
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(report.format_table())
    _status(f"stats over {report.pairs} pairs -> {json_path}, {txt_path}")
    return 0


def cmd_sari(args) -> int:
    def read_lines(path):
        with open(path, encoding="utf-8") as fh:
            return [line.rstrip("\n") for line in fh]

    inputs = read_lines(_require_file(args.input, "--input"))
    outputs = read_lines(_require_file(args.output, "--output"))
    ref_files = [read_lines(_require_file(p, "--refs")) for p in args.refs]
    lengths = {len(inputs), len(outputs), *(len(r) for r in ref_files)}
    if len(lengths) != 1:
        raise DataError(f"line counts differ across input/output/refs: {lengths}")

    total = 0.0
    with open(args.out, "w", encoding="utf-8") as fh:
        for i, (src, out) in enumerate(zip(inputs, outputs)):
            refs = [tokenize(r[i]) for r in ref_files]
            score = sari_tokens(tokenize(src), tokenize(out), refs)
            total += score.sari
            fh.write(json.dumps({
                "line": i, "f_add": score.f_add, "f_keep": score.f_keep,
                "p_del": score.p_del, "sari": score.sari}) + "\n")
    mean = total / len(inputs) if inputs else 0.0
    _status(f"sari: mean {mean:.6f} over {len(inputs)} lines -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simpmine",
        description="Mine complex->simple sentence pairs from document-summary "
                    "corpora: align by embedding similarity, characterize with "
                    "four simplification attributes, filter by Gaussian scores.")
    parser.add_argument("--version", action="version",
                        version=f"simpmine {__version__} "
                                f"(kernels: {_kernels.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON/YAML config file; flags override it")
        p.add_argument("--quiet", action="store_true", help="warnings only")

    def add_provider(p):
        p.add_argument("--provider", choices=("mock", "remote", "precomputed"),
                       help="embedding provider (default mock)")
        p.add_argument("--provider-url", help="remote service base URL")
        p.add_argument("--provider-file", help="precomputed vector TSV")
        p.add_argument("--mock-dim", type=int, help="mock vector width (default 256)")
        p.add_argument("--provider-retries", type=int,
                       help="remote retry attempts before failing (default 3)")

    def add_alignment(p):
        p.add_argument("--strategy", choices=STRATEGIES,
                       help="stitch (greedy multi-sentence) or baseline "
                            "(flat similarity cutoff)")
        p.add_argument("--s-max", type=float,
                       help="single-source accept threshold S_max (default 0.8)")
        p.add_argument("--s-min", type=float,
                       help="minimum similarity S_min to emit anything (default 0.6)")
        p.add_argument("--s-add", type=float,
                       help="stitched-similarity threshold S_add (default 0.7)")
        p.add_argument("--l-max", type=int,
                       help="max stitched source sentences L_max (default 3)")
        p.add_argument("--baseline-cutoff", type=float,
                       help="baseline strategy cutoff (default 0.6)")
        p.add_argument("--workers", type=int,
                       help="parallel documents (default 1; output order fixed)")

    def add_filter(p):
        p.add_argument("--t-s", type=float,
                       help=f"acceptance threshold T_s on the unweighted scale "
                            f"(default {DEFAULT_THRESHOLD})")
        p.add_argument("--alpha", action="append", metavar="ATTR=W",
                       help="relative attribute weight, repeatable")
        p.add_argument("--disable", action="append", choices=ATTRIBUTES,
                       help="drop an attribute (repeatable; ablation runs)")

    p = sub.add_parser("align", help="extract aligned pairs from a corpus")
    add_common(p); add_provider(p); add_alignment(p)
    p.add_argument("--corpus", required=True, help="document-summary JSONL")
    p.add_argument("--out", required=True, help="aligned pairs JSONL")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("fit-reference",
                       help="fit per-attribute normal statistics on a reference "
                            "parallel corpus")
    add_common(p)
    p.add_argument("--source", help="complex side, one sentence per line")
    p.add_argument("--target", help="simple side, line-aligned with --source")
    p.add_argument("--tsv", help="alternative: two-column TSV (source, target)")
    p.add_argument("--lexicon", required=True, help="word-complexity TSV")
    p.add_argument("--odds-dict", help="pre-built odds-ratio TSV (else fitted "
                                       "from this corpus)")
    p.add_argument("--odds-out", help="where to write the fitted odds TSV")
    p.add_argument("--odds-floor", type=int, default=5,
                   help="min combined count for an odds-ratio entry (default 5)")
    p.add_argument("--no-smoothing", action="store_true",
                   help="disable add-one smoothing in the odds ratios")
    p.add_argument("--refs", help="'identity' or a pair_id->refs JSONL "
                                  "(identity pins the sari attribute; see docs)")
    p.add_argument("--disable", action="append", choices=ATTRIBUTES,
                   help="skip fitting an attribute (repeatable)")
    p.add_argument("--out", required=True, help="stats JSON output")
    p.set_defaults(func=cmd_fit_reference)

    p = sub.add_parser("score", help="score aligned pairs against fitted stats")
    add_common(p); add_filter(p)
    p.add_argument("--aligned", required=True, help="aligned pairs JSONL")
    p.add_argument("--stats", required=True, help="stats JSON from fit-reference")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--odds-dict", required=True)
    p.add_argument("--refs", help="'identity' or pair_id->refs JSONL")
    p.add_argument("--out", required=True, help="scored pairs JSONL")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("mine", help="full pipeline: align, score, filter, emit")
    add_common(p); add_provider(p); add_alignment(p); add_filter(p)
    p.add_argument("--corpus", help="document-summary JSONL (runs alignment)")
    p.add_argument("--aligned", help="reuse an existing aligned JSONL instead")
    p.add_argument("--stats", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--odds-dict", required=True)
    p.add_argument("--refs", help="'identity' or pair_id->refs JSONL")
    p.add_argument("--out-dir", required=True,
                   help="writes aligned/scored/mined JSONL + manifest.json")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("stats", help="diagnostic statistics over a pair dataset")
    add_common(p)
    p.add_argument("--pairs", help="mined dataset JSONL")
    p.add_argument("--tsv", help="two-column TSV dataset")
    p.add_argument("--source", help="complex side text file")
    p.add_argument("--target", help="simple side text file")
    p.add_argument("--lexicon", help="enables the complexity-delta histogram")
    p.add_argument("--manifest", help="run manifest whose stage counts to echo "
                                      "(auto-detected next to --pairs)")
    p.add_argument("--cue-words", help="comma-separated list (default: "
                                       + ",".join(DEFAULT_CUE_WORDS))
    p.add_argument("--conjunctions", help="comma-separated list (default: "
                                          + ",".join(DEFAULT_CONJUNCTIONS))
    p.add_argument("--sample", type=int, help="analyze a seeded random sample")
    p.add_argument("--seed", type=int, help="sampling seed (default 0)")
    p.add_argument("--out-prefix", required=True,
                   help="writes <prefix>.json and <prefix>.txt")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sari", help="score line-aligned system output")
    add_common(p)
    p.add_argument("--input", required=True, help="original sentences")
    p.add_argument("--output", required=True, help="system sentences")
    p.add_argument("--refs", action="append", required=True,
                   help="reference file, repeatable")
    p.add_argument("--out", required=True, help="per-line scores JSONL")
    p.set_defaults(func=cmd_sari)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        logger.error("config error: %s", exc)
        return 1
    except ProviderError as exc:
        logger.error("provider failure: %s", exc)
        return 2
    except DataError as exc:
        logger.error("data error: %s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())

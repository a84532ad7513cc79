"""Shared fixtures: a fully built synthetic workspace (corpus, reference
corpus, lexicon, odds dictionary, fitted stats, aligned pairs, mining refs),
constructed once per session through the CLI itself."""

import pytest

import synth
from simpmine.cli import main as cli_main


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    ws = tmp_path_factory.mktemp("fixture")
    paths = {
        "dir": ws,
        "corpus": ws / "corpus.jsonl",
        "ref_src": ws / "ref.src",
        "ref_tgt": ws / "ref.tgt",
        "ref_refs": ws / "ref_refs.jsonl",
        "lexicon": ws / "lexicon.tsv",
        "odds": ws / "odds.tsv",
        "stats": ws / "stats.json",
        "aligned": ws / "aligned.jsonl",
        "mine_refs": ws / "mine_refs.jsonl",
    }
    synth.write_document_corpus(paths["corpus"], n_docs=100, seed=7)
    synth.write_reference_corpus(paths["ref_src"], paths["ref_tgt"],
                                 paths["ref_refs"], n_pairs=300, seed=11)
    synth.write_lexicon(paths["lexicon"], seed=13)

    rc = cli_main(["fit-reference",
                   "--source", str(paths["ref_src"]),
                   "--target", str(paths["ref_tgt"]),
                   "--lexicon", str(paths["lexicon"]),
                   "--refs", str(paths["ref_refs"]),
                   "--odds-out", str(paths["odds"]),
                   "--out", str(paths["stats"]), "--quiet"])
    assert rc == 0, "fit-reference failed while building the fixture workspace"

    rc = cli_main(["align", "--corpus", str(paths["corpus"]),
                   "--out", str(paths["aligned"]), "--quiet"])
    assert rc == 0, "align failed while building the fixture workspace"

    synth.derive_mining_refs(paths["aligned"], paths["mine_refs"], seed=17)
    return paths


def mine_args(paths, out_dir, extra=()):
    """CLI argv for a mine run over the prebuilt aligned pairs."""
    return ["mine",
            "--aligned", str(paths["aligned"]),
            "--stats", str(paths["stats"]),
            "--lexicon", str(paths["lexicon"]),
            "--odds-dict", str(paths["odds"]),
            "--refs", str(paths["mine_refs"]),
            "--out-dir", str(out_dir), "--quiet", *extra]

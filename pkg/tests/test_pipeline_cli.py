"""Pipeline orchestration and the CLI surface (exit codes, formats, manifest)."""

import json

import pytest

from conftest import mine_args

from simpmine import pipeline
from simpmine.aligner import AlignmentConfig
from simpmine.cli import main as cli_main
from simpmine.embedding import MockProvider
from simpmine.errors import DataError
from simpmine.pipeline import ordered_parallel_map


class TestOrderedParallelMap:
    def test_preserves_order(self):
        items = list(range(200))
        for workers in (1, 4):
            assert list(ordered_parallel_map(lambda x: x * x, items, workers)) == \
                [x * x for x in items]

    def test_consumes_lazily(self):
        produced = []

        def gen():
            for i in range(100):
                produced.append(i)
                yield i

        out = ordered_parallel_map(lambda x: x, gen(), workers=4, window=8)
        next(out)
        # the window bounds read-ahead; a fully eager map would have produced all 100
        assert len(produced) <= 16


class TestWireFormats:
    def test_aligned_roundtrip(self, workspace):
        pairs = list(pipeline.iter_aligned_file(workspace["aligned"]))
        assert pairs, "fixture produced no aligned pairs"
        first = pairs[0]
        wire = pipeline.aligned_to_wire(first)
        assert set(wire) == {"doc_id", "target", "sources", "source_indices",
                             "d_max", "final_sim", "strategy"}
        back = pipeline.wire_to_aligned(wire, first.pair_id)
        assert back.source_indices == first.source_indices
        assert back.target.tokens == first.target.tokens
        assert back.max_similarity == first.max_similarity

    def test_pair_ids_are_per_document_ordinals(self, workspace):
        pairs = list(pipeline.iter_aligned_file(workspace["aligned"]))
        seen = {}
        for pair in pairs:
            k = seen.get(pair.doc_id, 0)
            assert pair.pair_id == f"{pair.doc_id}#{k}"
            seen[pair.doc_id] = k + 1


class TestAlignStage:
    def test_deterministic_across_runs_and_workers(self, workspace, tmp_path):
        outs = []
        for name, workers in (("a", 1), ("b", 1), ("c", 4)):
            out = tmp_path / f"{name}.jsonl"
            pipeline.run_align(workspace["corpus"], MockProvider(),
                               AlignmentConfig(), out, workers=workers)
            outs.append(out.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_matches_fixture_alignment(self, workspace, tmp_path):
        out = tmp_path / "again.jsonl"
        pipeline.run_align(workspace["corpus"], MockProvider(),
                           AlignmentConfig(), out, workers=2)
        assert out.read_bytes() == workspace["aligned"].read_bytes()

    def test_cli_baseline_strategy_flagged_in_records(self, workspace, tmp_path):
        out = tmp_path / "baseline.jsonl"
        rc = cli_main(["align", "--corpus", str(workspace["corpus"]),
                       "--strategy", "baseline", "--out", str(out), "--quiet"])
        assert rc == 0
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        assert rows and all(r["strategy"] == "baseline" for r in rows)

    def test_provider_substitutability(self, workspace, tmp_path):
        # dump every text the mock saw, then replay through the precomputed
        # provider: identical numeric vectors must yield identical alignments
        from simpmine.embedding import PrecomputedProvider, write_precomputed_tsv

        mock = MockProvider()
        mock_out = tmp_path / "mock.jsonl"
        pipeline.run_align(workspace["corpus"], mock, AlignmentConfig(), mock_out)

        vectors_tsv = tmp_path / "vectors.tsv"
        write_precomputed_tsv(vectors_tsv, list(mock._cache), mock)
        pre_out = tmp_path / "pre.jsonl"
        pipeline.run_align(workspace["corpus"],
                           PrecomputedProvider.from_tsv(vectors_tsv),
                           AlignmentConfig(), pre_out)
        assert pre_out.read_bytes() == mock_out.read_bytes()


class TestMineCommand:
    def test_manifest_counts_reconcile(self, workspace, tmp_path):
        out_dir = tmp_path / "mine"
        assert cli_main(mine_args(workspace, out_dir)) == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        counts = manifest["counts"]
        assert counts["aligned"] >= counts["scored"] >= counts["accepted"]
        assert counts["scored"] + counts["attribute_errors"] == counts["aligned"]
        assert counts["accepted"] + counts["rejected"] == counts["scored"]
        pipeline.check_stage_conservation(counts)
        mined = [json.loads(l) for l in (out_dir / "mined.jsonl").read_text().splitlines()]
        assert len(mined) == counts["accepted"]
        scored = (out_dir / "scored.jsonl").read_text().splitlines()
        assert len(scored) == counts["scored"]

    def test_manifest_echoes_config_and_provider(self, workspace, tmp_path):
        out_dir = tmp_path / "mine"
        assert cli_main(mine_args(workspace, out_dir, ["--t-s", "3.6"])) == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        cfg = manifest["config"]
        assert manifest["threshold"] == 3.6
        assert cfg["t_s"] == 3.6
        assert cfg["s_max"] == 0.8 and cfg["l_max"] == 3  # defaults echoed
        assert manifest["refs_mode"] == "external"
        assert manifest["tool"]["kernel_backend"] in ("compiled", "pure")
        assert "filter_report" in manifest

    def test_full_chain_from_corpus(self, workspace, tmp_path):
        out_dir = tmp_path / "full"
        rc = cli_main(["mine", "--corpus", str(workspace["corpus"]),
                       "--stats", str(workspace["stats"]),
                       "--lexicon", str(workspace["lexicon"]),
                       "--odds-dict", str(workspace["odds"]),
                       "--refs", str(workspace["mine_refs"]),
                       "--out-dir", str(out_dir), "--quiet"])
        assert rc == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["provider_model"] == "mock-char-trigram-256"
        assert manifest["counts"]["documents"] == 100
        assert (out_dir / "aligned.jsonl").read_bytes() == \
            workspace["aligned"].read_bytes()

    def test_vacuous_threshold_emits_every_aligned_pair(self, workspace, tmp_path):
        out_dir = tmp_path / "all"
        assert cli_main(mine_args(workspace, out_dir, ["--t-s", "-1"])) == 0
        counts = json.loads((out_dir / "manifest.json").read_text())["counts"]
        mined = (out_dir / "mined.jsonl").read_text().splitlines()
        assert counts["attribute_errors"] == 0
        assert len(mined) == counts["accepted"] == counts["aligned"]

    def test_scored_record_extends_aligned_record(self, workspace, tmp_path):
        out_dir = tmp_path / "mine"
        assert cli_main(mine_args(workspace, out_dir)) == 0
        row = json.loads((out_dir / "scored.jsonl").read_text().splitlines()[0])
        assert {"doc_id", "target", "sources", "source_indices", "d_max",
                "final_sim", "strategy", "attrs", "t_scores", "T",
                "accepted"} == set(row)
        assert set(row["attrs"]) == {"len", "comp", "freq", "sari"}
        assert all(0.0 <= t <= 1.0 for t in row["t_scores"].values())


class TestScoreCommand:
    def test_standalone_scoring_matches_mine(self, workspace, tmp_path):
        scored_path = tmp_path / "scored.jsonl"
        rc = cli_main(["score", "--aligned", str(workspace["aligned"]),
                       "--stats", str(workspace["stats"]),
                       "--lexicon", str(workspace["lexicon"]),
                       "--odds-dict", str(workspace["odds"]),
                       "--refs", str(workspace["mine_refs"]),
                       "--out", str(scored_path), "--quiet"])
        assert rc == 0
        out_dir = tmp_path / "mine"
        assert cli_main(mine_args(workspace, out_dir)) == 0
        assert scored_path.read_bytes() == (out_dir / "scored.jsonl").read_bytes()

    def test_ablation_flags(self, workspace, tmp_path):
        scored_path = tmp_path / "scored.jsonl"
        rc = cli_main(["score", "--aligned", str(workspace["aligned"]),
                       "--stats", str(workspace["stats"]),
                       "--lexicon", str(workspace["lexicon"]),
                       "--odds-dict", str(workspace["odds"]),
                       "--refs", str(workspace["mine_refs"]),
                       "--disable", "sari", "--t-s", "2.75",
                       "--out", str(scored_path), "--quiet"])
        assert rc == 0
        row = json.loads(scored_path.read_text().splitlines()[0])
        assert set(row["t_scores"]) == {"len", "comp", "freq"}
        assert row["T"] <= 3.0 + 1e-9


class TestFitReferenceTsv:
    def test_tsv_input_equals_two_file_input(self, workspace, tmp_path):
        src_lines = workspace["ref_src"].read_text().splitlines()
        tgt_lines = workspace["ref_tgt"].read_text().splitlines()
        tsv = tmp_path / "ref.tsv"
        tsv.write_text("".join(f"{s}\t{t}\n" for s, t in zip(src_lines, tgt_lines)))
        out = tmp_path / "stats_tsv.json"
        rc = cli_main(["fit-reference", "--tsv", str(tsv),
                       "--lexicon", str(workspace["lexicon"]),
                       "--refs", str(workspace["ref_refs"]),
                       "--out", str(out), "--quiet"])
        assert rc == 0
        got = json.loads(out.read_text())
        want = json.loads(workspace["stats"].read_text())
        for attr in ("len", "comp", "freq", "sari"):
            assert got[attr]["mu"] == want[attr]["mu"]
            assert got[attr]["sigma"] == want[attr]["sigma"]


class TestExitCodes:
    def test_missing_input_is_config_error(self, workspace, tmp_path):
        rc = cli_main(["align", "--corpus", "/nonexistent.jsonl",
                       "--out", str(tmp_path / "x.jsonl"), "--quiet"])
        assert rc == 1

    def test_unreachable_remote_provider(self, workspace, tmp_path):
        rc = cli_main(["align", "--corpus", str(workspace["corpus"]),
                       "--out", str(tmp_path / "x.jsonl"),
                       "--provider", "remote",
                       "--provider-url", "http://127.0.0.1:9",  # discard port
                       "--provider-retries", "0", "--quiet"])
        assert rc == 2

    def test_line_count_mismatch_is_data_error(self, workspace, tmp_path):
        short = tmp_path / "short.tgt"
        lines = workspace["ref_tgt"].read_text().splitlines()[:-1]
        short.write_text("".join(l + "\n" for l in lines))
        rc = cli_main(["fit-reference",
                       "--source", str(workspace["ref_src"]),
                       "--target", str(short),
                       "--lexicon", str(workspace["lexicon"]),
                       "--refs", str(workspace["ref_refs"]),
                       "--out", str(tmp_path / "s.json"), "--quiet"])
        assert rc == 3

    def test_identity_refs_degenerate_sari_is_data_error(self, workspace, tmp_path):
        rc = cli_main(["fit-reference",
                       "--source", str(workspace["ref_src"]),
                       "--target", str(workspace["ref_tgt"]),
                       "--lexicon", str(workspace["lexicon"]),
                       "--refs", "identity",
                       "--out", str(tmp_path / "s.json"), "--quiet"])
        assert rc == 3

    def test_fit_reference_rerun_identical_stats_file(self, workspace, tmp_path):
        outs = []
        for name in ("s1.json", "s2.json"):
            out = tmp_path / name
            rc = cli_main(["fit-reference",
                           "--source", str(workspace["ref_src"]),
                           "--target", str(workspace["ref_tgt"]),
                           "--lexicon", str(workspace["lexicon"]),
                           "--refs", str(workspace["ref_refs"]),
                           "--out", str(out), "--quiet"])
            assert rc == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        assert outs[0] == workspace["stats"].read_bytes()

    def test_identity_refs_fit_works_with_sari_disabled(self, workspace, tmp_path):
        out = tmp_path / "s.json"
        rc = cli_main(["fit-reference",
                       "--source", str(workspace["ref_src"]),
                       "--target", str(workspace["ref_tgt"]),
                       "--lexicon", str(workspace["lexicon"]),
                       "--refs", "identity", "--disable", "sari",
                       "--out", str(out), "--quiet"])
        assert rc == 0
        stats = json.loads(out.read_text())
        assert "sari" not in stats
        assert stats["len"]["sigma"] > 0


class TestConfigFile:
    def test_file_overrides_defaults_flags_override_file(self, workspace, tmp_path):
        cfg_path = tmp_path / "cfg.yaml"
        cfg_path.write_text("s_max: 0.9\nl_max: 2\n")
        out_dir = tmp_path / "m1"
        rc = cli_main(mine_args(workspace, out_dir,
                                ["--config", str(cfg_path), "--l-max", "3"]))
        assert rc == 0
        cfg = json.loads((out_dir / "manifest.json").read_text())["config"]
        assert cfg["s_max"] == 0.9  # from file
        assert cfg["l_max"] == 3    # flag wins

    def test_json_config(self, workspace, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text('{"t_s": 2.0}')
        out_dir = tmp_path / "m2"
        rc = cli_main(mine_args(workspace, out_dir, ["--config", str(cfg_path)]))
        assert rc == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["threshold"] == 2.0


class TestStatsCommand:
    def test_planted_cue_word_ratios(self, tmp_path):
        # "because": twice on the simple side, once on the complex side;
        # equal corpus sizes (7 word tokens each) -> ratio exactly 2.0
        tsv = tmp_path / "pairs.tsv"
        tsv.write_text(
            "alpha because beta gamma\talpha because beta because\n"
            "delta epsilon zeta\tdelta epsilon zeta\n")
        rc = cli_main(["stats", "--tsv", str(tsv),
                       "--out-prefix", str(tmp_path / "report"), "--quiet"])
        assert rc == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["n_i"] == report["n_j"] == 7
        row = {r["word"]: r for r in report["conjunctions"]}["because"]
        assert row == {"word": "because", "ratio": 2.0, "w_i": 2, "w_j": 1}

    def test_identity_corpus_point_mass(self, tmp_path):
        tsv = tmp_path / "pairs.tsv"
        tsv.write_text("".join(f"same sentence {i}\tsame sentence {i}\n"
                               for i in range(25)))
        rc = cli_main(["stats", "--tsv", str(tsv),
                       "--out-prefix", str(tmp_path / "report"), "--quiet"])
        assert rc == 0
        report = json.loads((tmp_path / "report.json").read_text())
        hist = report["length_ratio_histogram"]
        bin_of_one = int((1.0 - hist["lo"]) / hist["width"])
        assert hist["counts"][bin_of_one] == 25
        assert sum(hist["counts"]) + hist["underflow"] + hist["overflow"] == 25
        assert report["pairs"] == 25

    def test_table_has_sections(self, tmp_path):
        tsv = tmp_path / "pairs.tsv"
        tsv.write_text("a because b\tc because d\n")
        rc = cli_main(["stats", "--tsv", str(tsv),
                       "--out-prefix", str(tmp_path / "report"), "--quiet"])
        assert rc == 0
        table = (tmp_path / "report.txt").read_text()
        assert "cue words" in table and "conjunctions" in table
        assert "because" in table

    def test_mined_jsonl_input_and_sampling(self, workspace, tmp_path):
        out_dir = tmp_path / "mine"
        assert cli_main(mine_args(workspace, out_dir, ["--t-s", "-1"])) == 0
        rc = cli_main(["stats", "--pairs", str(out_dir / "mined.jsonl"),
                       "--lexicon", str(workspace["lexicon"]),
                       "--sample", "50", "--seed", "3",
                       "--out-prefix", str(tmp_path / "r"), "--quiet"])
        assert rc == 0
        report = json.loads((tmp_path / "r.json").read_text())
        assert report["pairs"] == 50
        assert report["complexity_delta_histogram"] is not None
        total = (sum(report["complexity_delta_histogram"]["counts"])
                 + report["complexity_delta_histogram"]["underflow"]
                 + report["complexity_delta_histogram"]["overflow"])
        assert total == 50
        # the manifest next to the mined file supplies the stage counts
        assert report["stage_counts"]["accepted"] == \
            json.loads((out_dir / "manifest.json").read_text())["counts"]["accepted"]

    def test_deterministic_output(self, tmp_path):
        tsv = tmp_path / "pairs.tsv"
        tsv.write_text("a because b\tc because d\n")
        for prefix in ("r1", "r2"):
            assert cli_main(["stats", "--tsv", str(tsv),
                             "--out-prefix", str(tmp_path / prefix),
                             "--quiet"]) == 0
        assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()


class TestSariCommand:
    def test_line_scores_and_mean(self, tmp_path, capsys):
        (tmp_path / "in.txt").write_text("a b c d\na b\n")
        (tmp_path / "out.txt").write_text("a b d\na b\n")
        (tmp_path / "ref.txt").write_text("a b d\na b\n")
        rc = cli_main(["sari", "--input", str(tmp_path / "in.txt"),
                       "--output", str(tmp_path / "out.txt"),
                       "--refs", str(tmp_path / "ref.txt"),
                       "--out", str(tmp_path / "scores.jsonl"), "--quiet"])
        assert rc == 0
        rows = [json.loads(l) for l in
                (tmp_path / "scores.jsonl").read_text().splitlines()]
        assert [r["sari"] for r in rows] == [1.0, 1.0]
        assert "mean 1.000000" in capsys.readouterr().out

    def test_mismatched_line_counts(self, tmp_path):
        (tmp_path / "in.txt").write_text("a\nb\n")
        (tmp_path / "out.txt").write_text("a\n")
        (tmp_path / "ref.txt").write_text("a\nb\n")
        rc = cli_main(["sari", "--input", str(tmp_path / "in.txt"),
                       "--output", str(tmp_path / "out.txt"),
                       "--refs", str(tmp_path / "ref.txt"),
                       "--out", str(tmp_path / "x.jsonl"), "--quiet"])
        assert rc == 3


class TestConsoleScript:
    def test_installed_entry_point(self, workspace, tmp_path):
        import shutil
        import subprocess
        import sys

        exe = shutil.which("simpmine")
        if exe is None:
            pytest.skip("console script not on PATH (package not installed)")
        out = tmp_path / "cli.jsonl"
        result = subprocess.run(
            [exe, "align", "--corpus", str(workspace["corpus"]),
             "--out", str(out), "--quiet"],
            capture_output=True, text=True)
        assert result.returncode == 0, result.stderr
        assert out.read_bytes() == workspace["aligned"].read_bytes()
        version = subprocess.run([sys.executable, "-m", "simpmine.cli",
                                  "--version"], capture_output=True, text=True)
        assert version.returncode == 0
        assert "simpmine" in version.stdout


class TestStageConservation:
    def test_violations_raise(self):
        with pytest.raises(DataError):
            pipeline.check_stage_conservation(
                {"aligned": 5, "scored": 6, "accepted": 0,
                 "rejected": 6, "attribute_errors": 0})
        with pytest.raises(DataError):
            pipeline.check_stage_conservation(
                {"aligned": 5, "scored": 4, "accepted": 2,
                 "rejected": 2, "attribute_errors": 0})

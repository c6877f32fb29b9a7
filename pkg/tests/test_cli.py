from __future__ import annotations

import json

import pytest

from factlens.cli import (
    ConfigError,
    DatasetError,
    build_parser,
    dump_dataset,
    load_dataset,
    main,
    normalize_gold_label,
    parse_config_file,
)
from tests.conftest import MOCK_DATASET, MOCK_ROUTES


def record_line(**overrides) -> str:
    record = {"id": "r1", "claim": "A claim.", "evidence": "Some evidence.", "label": True}
    record.update(overrides)
    return json.dumps(record)


def write_dataset(tmp_path, lines, name="data.jsonl"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n", "utf-8")
    return path


class TestNormalizeGoldLabel:
    def test_accepted_spellings(self):
        assert normalize_gold_label(True) is True
        assert normalize_gold_label("FALSE") is False
        assert normalize_gold_label(" supported ") is True
        assert normalize_gold_label("Refuted") is False

    def test_unknown_label_rejected(self):
        with pytest.raises(ValueError, match="unknown gold label"):
            normalize_gold_label("maybe")


class TestLoadDataset:
    def test_string_false_label_normalized(self, tmp_path):
        path = write_dataset(tmp_path, [record_line(label="FALSE")])
        dataset = load_dataset(path)
        assert dataset.records[0].gold_label is False

    def test_missing_claim_names_the_line(self, tmp_path):
        bad = json.dumps({"id": "r2", "evidence": "e", "label": True})
        path = write_dataset(tmp_path, [record_line(), bad])
        with pytest.raises(DatasetError, match=r":2: missing field 'claim'"):
            load_dataset(path)

    def test_duplicate_id_rejected(self, tmp_path):
        path = write_dataset(tmp_path, [record_line(), record_line()])
        with pytest.raises(DatasetError, match="duplicate id 'r1'"):
            load_dataset(path)

    def test_invalid_json_names_the_line(self, tmp_path):
        path = write_dataset(tmp_path, [record_line(), "{not json"])
        with pytest.raises(DatasetError, match=":2: invalid JSON"):
            load_dataset(path)

    def test_unknown_label_string_rejected(self, tmp_path):
        path = write_dataset(tmp_path, [record_line(label="perhaps")])
        with pytest.raises(DatasetError, match="unknown gold label"):
            load_dataset(path)

    def test_sub_claims_become_ground_truth_decomposition(self, tmp_path):
        path = write_dataset(tmp_path, [record_line(sub_claims=["a", "b"])])
        dataset = load_dataset(path)
        decomposition = dataset.gold_decompositions["r1"]
        assert decomposition.n == 2
        assert decomposition.generator == "ground-truth"

    def test_human_scores_parsed_and_validated(self, tmp_path):
        path = write_dataset(
            tmp_path,
            [record_line(human_scores={"coverage": ["high", "medium"], "atomicity": "atomic"})],
        )
        dataset = load_dataset(path)
        scores = dataset.human_scores["r1"]
        assert [s.text for s in scores["coverage"]] == ["high", "medium"]
        assert [s.text for s in scores["atomicity"]] == ["atomic"]

    def test_unknown_human_metric_rejected(self, tmp_path):
        path = write_dataset(tmp_path, [record_line(human_scores={"fluency": ["high"]})])
        with pytest.raises(DatasetError, match="unknown metric"):
            load_dataset(path)

    def test_blank_lines_tolerated(self, tmp_path):
        path = write_dataset(tmp_path, [record_line(), "", record_line(id="r2")])
        assert len(load_dataset(path).records) == 2

    def test_round_trip_is_identity(self, tmp_path):
        original = load_dataset(MOCK_DATASET)
        out = tmp_path / "roundtrip.jsonl"
        dump_dataset(original, out)
        reloaded = load_dataset(out)
        assert reloaded.records == original.records
        assert reloaded.gold_decompositions == original.gold_decompositions
        assert reloaded.human_scores == original.human_scores

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(DatasetError, match="not found"):
            load_dataset(tmp_path / "absent.jsonl")


class TestConfigFile:
    def test_dotted_keys_applied(self, tmp_path):
        config_path = tmp_path / "factlens.conf"
        config_path.write_text(
            "# thresholds\n"
            "statistical.similarity_threshold=0.8\n"
            "statistical.red_medium_max=2\n"
            "judge.model=my-judge\n"
            "run.seed=5\n",
            "utf-8",
        )
        values = parse_config_file(config_path)
        assert values["statistical.similarity_threshold"] == "0.8"
        args = build_parser().parse_args(
            ["run", "--input", "in.jsonl", "--output", "out.json", "--config", str(config_path)]
        )
        from factlens.cli import build_run_config

        config = build_run_config(args)
        assert config.statistical.similarity_threshold == 0.8
        assert config.statistical.red_medium_max == 2
        assert config.models["judge"] == "my-judge"
        assert config.seed == 5

    def test_cli_flags_override_config_file(self, tmp_path):
        config_path = tmp_path / "factlens.conf"
        config_path.write_text("run.seed=5\n", "utf-8")
        args = build_parser().parse_args(
            [
                "run",
                "--input", "in.jsonl",
                "--output", "out.json",
                "--config", str(config_path),
                "--seed", "9",
            ]
        )
        from factlens.cli import build_run_config

        assert build_run_config(args).seed == 9

    def test_bad_line_rejected(self, tmp_path):
        config_path = tmp_path / "factlens.conf"
        config_path.write_text("no equals sign here\n", "utf-8")
        with pytest.raises(ConfigError, match="key=value"):
            parse_config_file(config_path)

    def test_unknown_key_rejected(self, tmp_path):
        config_path = tmp_path / "factlens.conf"
        config_path.write_text("nonsense.key=1\n", "utf-8")
        args = build_parser().parse_args(
            ["run", "--input", "i", "--output", "o", "--config", str(config_path)]
        )
        from factlens.cli import build_run_config

        with pytest.raises(ConfigError, match="unknown config key"):
            build_run_config(args)


def run_cli(*argv: str) -> int:
    return main(list(argv))


def fixture_run_args(out_path, *extra: str) -> list[str]:
    return [
        "run",
        "--input", str(MOCK_DATASET),
        "--output", str(out_path),
        "--mock-fixtures", str(MOCK_ROUTES),
        "--seed", "17",
        *extra,
    ]


class TestRunCommand:
    def test_full_mock_run_succeeds(self, tmp_path):
        out = tmp_path / "report.json"
        assert run_cli(*fixture_run_args(out, "--holistic")) == 0
        report = json.loads(out.read_text("utf-8"))
        assert report["analyzed"] == 10
        assert report["failures"] == []
        assert set(report["metric_means"]) == {
            "atomicity", "sufficiency", "fabrication", "coverage", "redundancy", "readability",
        }
        assert sum(report["subclaim_count_distribution"].values()) == report["analyzed"]
        assert report["complexity_bins"] is not None
        assert report["human_alignment"] is not None
        assert report["regression"]["instances"] > 0

    def test_statistical_mode_issues_zero_judge_calls(self, tmp_path):
        out = tmp_path / "report.json"
        assert run_cli(*fixture_run_args(out, "--mode", "statistical")) == 0
        report = json.loads(out.read_text("utf-8"))
        assert report["provider_calls"]["judge"] == 0
        assert "sufficiency" not in report["metric_means"]
        assert "readability" not in report["metric_means"]

    def test_use_gold_subclaims_skips_decomposer_calls(self, tmp_path):
        out = tmp_path / "report.json"
        assert run_cli(*fixture_run_args(out, "--use-gold-subclaims")) == 0
        report = json.loads(out.read_text("utf-8"))
        assert report["provider_calls"]["decomposer"] == 0
        assert all(c["generator"] == "ground-truth" for c in report["claims"])

    def test_partial_failure_exits_2_and_lists_the_instance(self, tmp_path):
        routes = json.loads(MOCK_ROUTES.read_text("utf-8"))
        # Replace one judge answer with an unparseable response.
        broken_key = next(
            key
            for key in routes["exact"]
            if '"sufficiency"' in key and "Sub-Claim: The school's nickname is Bearcats" in key
        )
        routes["exact"][broken_key] = "I cannot judge."
        broken_routes = tmp_path / "broken_routes.json"
        broken_routes.write_text(json.dumps(routes), "utf-8")
        out = tmp_path / "report.json"
        code = run_cli(
            "run",
            "--input", str(MOCK_DATASET),
            "--output", str(out),
            "--mock-fixtures", str(broken_routes),
            "--seed", "17",
        )
        assert code == 2
        report = json.loads(out.read_text("utf-8"))
        assert report["analyzed"] == 9
        assert len(report["failures"]) == 1
        failure = report["failures"][0]
        assert failure["claim_id"] == "c06"
        assert failure["stage"] == "evaluate"
        assert "sufficiency" in failure["message"]

    def test_fatal_error_exits_1(self, tmp_path, capsys):
        code = run_cli(
            "run",
            "--input", str(tmp_path / "missing.jsonl"),
            "--output", str(tmp_path / "report.json"),
        )
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_parallelism_does_not_change_the_report(self, tmp_path):
        serial = tmp_path / "serial.json"
        parallel = tmp_path / "parallel.json"
        run_cli(*fixture_run_args(serial, "--holistic", "--parallelism", "1"))
        run_cli(*fixture_run_args(parallel, "--holistic", "--parallelism", "8"))
        assert serial.read_bytes() == parallel.read_bytes()

    def test_cache_dir_reuses_responses_across_runs(self, tmp_path):
        cache = tmp_path / "cache"
        first = tmp_path / "r1.json"
        second = tmp_path / "r2.json"
        run_cli(*fixture_run_args(first, "--cache-dir", str(cache)))
        run_cli(*fixture_run_args(second, "--cache-dir", str(cache)))
        assert first.read_bytes() == second.read_bytes()
        assert any(cache.rglob("*.txt"))


class TestStageCommands:
    def test_decompose_writes_jsonl(self, tmp_path):
        out = tmp_path / "decompositions.jsonl"
        code = run_cli(
            "decompose",
            "--input", str(MOCK_DATASET),
            "--output", str(out),
            "--mock-fixtures", str(MOCK_ROUTES),
            "--seed", "17",
        )
        assert code == 0
        lines = [json.loads(line) for line in out.read_text("utf-8").splitlines()]
        assert len(lines) == 10
        assert all(line["sub_claims"] for line in lines)
        assert lines[0]["claim_id"] == "c01"

    def test_evaluate_emits_scores_without_verification(self, tmp_path):
        out = tmp_path / "eval.json"
        code = run_cli(
            "evaluate",
            "--input", str(MOCK_DATASET),
            "--output", str(out),
            "--mock-fixtures", str(MOCK_ROUTES),
            "--seed", "17",
        )
        assert code == 0
        report = json.loads(out.read_text("utf-8"))
        assert report["metric_means"]
        assert report["provider_calls"]["verifier"] == 0
        assert all("verification" not in claim for claim in report["claims"])

    def test_verify_emits_labels_without_scores(self, tmp_path):
        out = tmp_path / "verify.json"
        code = run_cli(
            "verify",
            "--input", str(MOCK_DATASET),
            "--output", str(out),
            "--mock-fixtures", str(MOCK_ROUTES),
            "--seed", "17",
            "--holistic",
        )
        assert code == 0
        report = json.loads(out.read_text("utf-8"))
        assert report["provider_calls"]["judge"] == 0
        assert all("verification" in claim for claim in report["claims"])
        c01 = next(c for c in report["claims"] if c["id"] == "c01")
        assert c01["verification"]["subclaim_labels"] == [True, False]

    def test_analyze_recomputes_from_a_run_report(self, tmp_path):
        report_path = tmp_path / "report.json"
        run_cli(*fixture_run_args(report_path, "--holistic"))
        out = tmp_path / "analysis.json"
        code = run_cli("analyze", "--input", str(report_path), "--output", str(out))
        assert code == 0
        recomputed = json.loads(out.read_text("utf-8"))
        original = json.loads(report_path.read_text("utf-8"))
        assert recomputed["metric_means"] == original["metric_means"]
        assert recomputed["quality_bins"] == original["quality_bins"]
        assert recomputed["regression"] == original["regression"]
        assert recomputed["complexity_bins"] == original["complexity_bins"]

    def test_analyze_rejects_non_report_input(self, tmp_path):
        not_report = tmp_path / "x.json"
        not_report.write_text("{}", "utf-8")
        code = run_cli("analyze", "--input", str(not_report), "--output", str(tmp_path / "o.json"))
        assert code == 1


class TestReportShape:
    def test_report_keys_are_sorted_for_reproducibility(self, tmp_path):
        out = tmp_path / "report.json"
        run_cli(*fixture_run_args(out))
        text = out.read_text("utf-8")
        assert json.dumps(json.loads(text), indent=2, sort_keys=True, ensure_ascii=False) + "\n" == text

    def test_claim_entries_carry_diagnostics_and_entities(self, tmp_path):
        out = tmp_path / "report.json"
        run_cli(*fixture_run_args(out))
        report = json.loads(out.read_text("utf-8"))
        c05 = next(c for c in report["claims"] if c["id"] == "c05")
        assert c05["diagnostics"]["fab"] == 1
        assert "sydney" in c05["diagnostics"]["claim_entities"]["subjects"]
        assert c05["scores"]["coverage"]["level"] == "medium"

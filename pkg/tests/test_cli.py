import json

import pytest

from patmine.cli import main
from patmine.synthetic import make_reviews, write_jsonl

SMALL_LEARN = ["--population-size", "24", "--max-generations", "4"]


@pytest.fixture(scope="module")
def prepared_file(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    raw = tmp / "reviews.jsonl"
    write_jsonl(make_reviews(240, seed=13), raw)
    prepared = tmp / "prepared.json"
    code = main(["ingest", "--in", str(raw), "--format", "jsonl", "--seed", "13", "--out", str(prepared)])
    assert code == 0
    return prepared


class TestIngest:
    def test_valid_jsonl(self, tmp_path, capsys):
        raw = tmp_path / "r.jsonl"
        write_jsonl(make_reviews(100, seed=1), raw)
        out = tmp_path / "prep.json"
        assert main(["ingest", "--in", str(raw), "--format", "jsonl", "--seed", "1", "--out", str(out)]) == 0
        summary = capsys.readouterr().out
        assert "20 test" in summary
        payload = json.loads(out.read_text())
        assert len(payload["documents"]) == 100
        assert len(payload["split"]["test"]) == 20

    def test_duplicate_ids_exit_2(self, tmp_path, capsys):
        raw = tmp_path / "r.jsonl"
        raw.write_text('{"id": "a", "text": "x"}\n{"id": "a", "text": "y"}\n', encoding="utf-8")
        out = tmp_path / "prep.json"
        assert main(["ingest", "--in", str(raw), "--format", "jsonl", "--out", str(out)]) == 2
        assert "a" in capsys.readouterr().err

    def test_missing_file_exit_2(self, tmp_path):
        assert main(["ingest", "--in", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "o.json")]) == 2

    def test_full_scale_summary_reports_894_test_docs(self, tmp_path, capsys):
        raw = tmp_path / "big.jsonl"
        write_jsonl(make_reviews(4470, seed=2), raw)
        out = tmp_path / "prep.json"
        assert main(["ingest", "--in", str(raw), "--format", "jsonl", "--seed", "2", "--out", str(out)]) == 0
        assert "894 test" in capsys.readouterr().out


class TestLearn:
    def test_learn_writes_group_and_log(self, prepared_file, tmp_path):
        group_path = tmp_path / "group.json"
        log_path = tmp_path / "fitness.csv"
        code = main(
            ["learn", "--in", str(prepared_file), "--task", "defect", "--seed", "5",
             *SMALL_LEARN, "--out", str(group_path), "--fitness-log", str(log_path)]
        )
        assert code == 0
        payload = json.loads(group_path.read_text())
        assert payload["feedback_type"] == "defect"
        assert payload["provenance"] == "learned"
        lines = log_path.read_text().splitlines()
        assert lines[0] == "generation,best,mean"
        assert len(lines) > 1

    def test_byte_identical_reruns(self, prepared_file, tmp_path):
        paths = [tmp_path / "g1.json", tmp_path / "g2.json"]
        logs = [tmp_path / "l1.csv", tmp_path / "l2.csv"]
        for g, l in zip(paths, logs):
            assert main(
                ["learn", "--in", str(prepared_file), "--task", "defect", "--seed", "9",
                 *SMALL_LEARN, "--out", str(g), "--fitness-log", str(l)]
            ) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()
        assert logs[0].read_bytes() == logs[1].read_bytes()

    def test_zero_generations_still_valid(self, prepared_file, tmp_path):
        group_path = tmp_path / "weak.json"
        code = main(
            ["learn", "--in", str(prepared_file), "--task", "defect", "--seed", "2",
             "--population-size", "24", "--max-generations", "0", "--out", str(group_path)]
        )
        assert code == 0
        payload = json.loads(group_path.read_text())
        assert payload["provenance"] == "learned"

    def test_dsl_output(self, prepared_file, tmp_path):
        group_path = tmp_path / "group.dsl"
        assert main(
            ["learn", "--in", str(prepared_file), "--task", "improvement", "--seed", "3",
             *SMALL_LEARN, "--out", str(group_path)]
        ) == 0
        from patmine.pattern import load_group

        group = load_group(group_path)
        assert group.feedback_type.value == "improvement"


class TestMatch:
    def test_reference_patterns_label_their_sentences(self, tmp_path, reference_fixture):
        raw = tmp_path / "sentences.jsonl"
        with open(raw, "w", encoding="utf-8") as fh:
            for row in reference_fixture["rows"]:
                fh.write(json.dumps({"id": row["name"], "text": row["example"]}) + "\n")
        prepared = tmp_path / "prep.json"
        assert main(["ingest", "--in", str(raw), "--format", "jsonl", "--out", str(prepared)]) == 0

        group_path = tmp_path / "all.dsl"
        lines = ["# feedback_type: defect"] + [r["dsl"] for r in reference_fixture["rows"]]
        group_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        out = tmp_path / "matches.csv"
        assert main(["match", "--patterns", str(group_path), "--in", str(prepared), "--out", str(out)]) == 0
        rows = dict(line.split(",") for line in out.read_text().splitlines()[1:])
        assert all(v == "true" for v in rows.values())

    def test_missing_pattern_file_exit_2(self, prepared_file, tmp_path):
        assert main(
            ["match", "--patterns", str(tmp_path / "nope.dsl"), "--in", str(prepared_file),
             "--out", str(tmp_path / "m.csv")]
        ) == 2

    def test_empty_corpus(self, tmp_path):
        raw = tmp_path / "none.jsonl"
        raw.write_text('{"id": "only", "text": "hello there"}\n', encoding="utf-8")
        prepared = tmp_path / "prep.json"
        assert main(["ingest", "--in", str(raw), "--out", str(prepared)]) == 0
        group_path = tmp_path / "g.dsl"
        group_path.write_text("SEQ(lit(hello))\n", encoding="utf-8")
        out = tmp_path / "m.csv"
        assert main(["match", "--patterns", str(group_path), "--in", str(prepared), "--out", str(out)]) == 0
        assert out.read_text().splitlines()[0] == "id,label"


class TestTrainCommands:
    def test_train_byte_identical(self, prepared_file, tmp_path):
        models = [tmp_path / "m1.json", tmp_path / "m2.json"]
        for m in models:
            assert main(
                ["train", "--in", str(prepared_file), "--task", "defect", "--seed", "4", "--out", str(m)]
            ) == 0
        assert models[0].read_bytes() == models[1].read_bytes()

    def test_distant_train(self, prepared_file, tmp_path):
        group_path = tmp_path / "g.dsl"
        group_path.write_text("# feedback_type: defect\nSEQ(pos(NN), lit(crashes))\nSEQ(lit(please), pos(VB))\n", encoding="utf-8")
        model_path = tmp_path / "dm.json"
        assert main(
            ["distant-train", "--in", str(prepared_file), "--task", "defect",
             "--patterns", str(group_path), "--seed", "4", "--out", str(model_path)]
        ) == 0
        assert model_path.exists()

    def test_degenerate_group_exit_2(self, prepared_file, tmp_path):
        group_path = tmp_path / "g.dsl"
        group_path.write_text("SEQ(lit(qqqq))\n", encoding="utf-8")
        assert main(
            ["distant-train", "--in", str(prepared_file), "--task", "defect",
             "--patterns", str(group_path), "--out", str(tmp_path / "x.json")]
        ) == 2


class TestEval:
    def test_each_method_runs(self, prepared_file, tmp_path):
        # hand-written groups that actually occur in the synthetic corpus, so
        # the distant methods get both label classes
        defect = tmp_path / "manual_defect.dsl"
        defect.write_text("# feedback_type: defect\nSEQ(pos(NN), lit(crashes))\nSEQ(lit(please), pos(VB))\n", encoding="utf-8")
        improvement = tmp_path / "manual_improvement.dsl"
        improvement.write_text("# feedback_type: improvement\nSEQ(lit(please), pos(VB))\n", encoding="utf-8")
        for method in ("svm_gold", "patterns_manual", "patterns_learned", "distant_manual", "distant_learned"):
            out = tmp_path / f"{method}.csv"
            code = main(
                ["eval", "--in", str(prepared_file), "--method", method, "--seed", "6",
                 *SMALL_LEARN,
                 "--patterns-defect", str(defect), "--patterns-improvement", str(improvement),
                 "--out", str(out)]
            )
            assert code == 0, method
            lines = out.read_text().splitlines()
            assert lines[0].startswith("method,task")
            assert len(lines) == 3

    def test_unknown_method_usage_error(self, prepared_file):
        with pytest.raises(SystemExit) as err:
            main(["eval", "--in", str(prepared_file), "--method", "bogus"])
        assert err.value.code == 2

    def test_eval_self_consistent_f1(self, prepared_file, tmp_path):
        out = tmp_path / "r.csv"
        assert main(
            ["eval", "--in", str(prepared_file), "--method", "patterns_manual", "--out", str(out)]
        ) == 0
        for line in out.read_text().splitlines()[1:]:
            parts = line.split(",")
            p, r, f1 = float(parts[2]), float(parts[3]), float(parts[4])
            expected = 2 * p * r / (p + r) if p + r else 0.0
            assert f1 == pytest.approx(expected, abs=1e-6)

import csv
import json

import httpx
import pytest

from qdselect import cli
from qdselect.io import embed_texts, load_jsonl, save_jsonl
from qdselect.testing import SyntheticSpec, make_synthetic

VALID = "tests/functional/static/valid_datasets/"


@pytest.fixture
def dataset_path(tmp_path):
    filepath = str(tmp_path / "synthetic.jsonl")
    save_jsonl(make_synthetic(SyntheticSpec(n=150, dim=8, seed=4)), filepath)
    return filepath


def read_json(filepath):
    with open(filepath) as json_file:
        return json.load(json_file)


class TestSelectAndScore:
    @pytest.mark.parametrize("algorithm", ["greedy", "lazy", "stochastic",
                                           "lazy_stochastic", "cluster",
                                           "threshold"])
    def test_score_of_result_matches_selection(self, algorithm, dataset_path,
                                               tmp_path, capsys):
        output = str(tmp_path / "result.json")
        assert cli.main(["select", "--input", dataset_path, "--alpha", "0.5",
                         "--k", "12", "--algorithm", algorithm,
                         "--output", output]) == 0
        result = read_json(output)
        assert capsys.readouterr().err.startswith(
            "selected k={0} alpha=0.5".format(len(result["selected_ids"])))

        assert cli.main(["score", "--input", dataset_path,
                         "--subset", output]) == 0
        score = json.loads(capsys.readouterr().out)
        assert abs(score["diversity"] - result["diversity"]) <= 1e-9
        assert abs(score["mean_quality"] - result["mean_quality"]) <= 1e-9
        assert score["n_total"] == 150

    def test_variant_defaults_are_recorded(self, dataset_path, tmp_path):
        for algorithm, key, default in [("threshold", "tau", 0.5),
                                        ("cluster", "n_clusters", 100),
                                        ("stochastic", "epsilon", 0.01)]:
            output = str(tmp_path / (algorithm + ".json"))
            assert cli.main(["select", "--input", dataset_path, "--alpha",
                             "0.7", "--k", "10", "--algorithm", algorithm,
                             "--output", output]) == 0
            assert read_json(output)[key] == default

    def test_selected_ids_follow_selection_order(self, dataset_path, tmp_path):
        output = str(tmp_path / "result.json")
        cli.main(["select", "--input", dataset_path, "--alpha", "1",
                  "--k", "3", "--output", output])
        result = read_json(output)
        dataset = load_jsonl(dataset_path)
        assert result["selected_ids"] == [dataset.ids[index] for index
                                          in result["selected_indices"]]
        qualities = [dataset.qualities[index]
                     for index in result["selected_indices"]]
        assert qualities == sorted(qualities, reverse=True)

    def test_invalid_budget_exits_with_status_2(self, dataset_path, tmp_path):
        output = tmp_path / "result.json"
        assert cli.main(["select", "--input", dataset_path, "--alpha", "0.5",
                         "--k", "0", "--output", str(output)]) == 2
        assert not output.exists()

    def test_budget_above_dataset_size_exits_with_status_1(self, dataset_path,
                                                           tmp_path, capsys):
        output = tmp_path / "result.json"
        assert cli.main(["select", "--input", dataset_path, "--alpha", "0.5",
                         "--k", "151", "--output", str(output)]) == 1
        assert capsys.readouterr().err == \
            "qdselect: error: k_select 151 exceeds dataset size 150\n"
        assert not output.exists()

    def test_invalid_dataset_exits_with_status_1(self, tmp_path, capsys):
        assert cli.main([
            "score", "--input",
            "tests/functional/static/invalid_datasets/duplicate_id.jsonl",
            "--subset", "0"]) == 1
        assert "Duplicate id 'r1' on line 3" in capsys.readouterr().err

    def test_quality_beyond_float_range_exits_with_status_1(self, tmp_path,
                                                            capsys):
        dataset = tmp_path / "huge.jsonl"
        dataset.write_text('{"id": "a", "quality": 1' + "0" * 400 +
                           ', "embedding": [1, 0]}\n')
        assert cli.main(["score", "--input", str(dataset),
                         "--subset", "0"]) == 1
        assert "Invalid 'quality' on line 1" in capsys.readouterr().err

    def test_scoring_indices(self, capsys):
        assert cli.main(["score", "--input", VALID + "six_records.jsonl",
                         "--subset", "0,2,4"]) == 0
        score = json.loads(capsys.readouterr().out)
        assert score["n_subset"] == 3
        assert score["mean_quality"] == pytest.approx((0.875 + 0.625 + 1) / 3)


class TestSweep:
    def test_one_row_per_alpha_and_baseline(self, dataset_path, tmp_path):
        output = str(tmp_path / "sweep.csv")
        assert cli.main(["sweep", "--input", dataset_path, "--k", "10",
                         "--alphas", "0,0.5,1", "--with-random-baseline",
                         "--output", output]) == 0
        with open(output) as csv_file:
            rows = list(csv.DictReader(csv_file))
        assert [row["alpha"] for row in rows] == ["0", "0.5", "1", ""]
        assert [row["algorithm"] for row in rows] == ["lazy"] * 3 + ["random"]
        assert all(row["k"] == "10" for row in rows)

    def test_default_grid(self, dataset_path, tmp_path):
        output = str(tmp_path / "sweep.csv")
        assert cli.main(["sweep", "--input", dataset_path, "--k", "5",
                         "--output", output]) == 0
        with open(output) as csv_file:
            assert len(list(csv.DictReader(csv_file))) == 7


class TestEmbed:
    @pytest.fixture(autouse=True)
    def environment(self, mocker):
        mocker.patch.dict("os.environ", {
            "QDIT_EMBED_URL": "https://embeddings.example.com/v1/embeddings",
            "QDIT_EMBED_KEY": "secret-key"})

    def use_service(self, mocker, handler):
        transport = httpx.MockTransport(handler)
        mocker.patch("qdselect.cli.embed_texts",
                     side_effect=lambda texts, config: embed_texts(
                         texts, config, transport))

    def test_embedding_file_is_written(self, mocker, tmp_path, capsys):
        def handler(request):
            texts = json.loads(request.content)["input"]
            return httpx.Response(200, json={"data": [
                {"embedding": [float(len(text))] + [1.0] * 7}
                for text in texts]})

        self.use_service(mocker, handler)
        output = tmp_path / "records.bin"
        records = tmp_path / "five.jsonl"
        records.write_text("".join(
            '{{"id": "r{0}", "quality": {0}, "text": "{1}"}}\n'.format(
                index, "x" * (index + 1)) for index in range(5)))
        assert cli.main(["embed", "--input", str(records),
                         "--output", str(output), "--batch-size", "2"]) == 0
        assert output.stat().st_size == 176
        assert capsys.readouterr().err == "embedded 5 texts, dim 8\n"
        dataset = load_jsonl(str(records), str(output))
        assert dataset.dim == 8

    def test_embedded_file_feeds_selection(self, mocker, tmp_path):
        def handler(request):
            texts = json.loads(request.content)["input"]
            return httpx.Response(200, json={"data": [
                {"embedding": [1.0, float(len(text) % 3), 0.5]}
                for text in texts]})

        self.use_service(mocker, handler)
        embeddings = str(tmp_path / "six.bin")
        assert cli.main(["embed", "--input",
                         VALID + "six_records_no_embeddings.jsonl",
                         "--output", embeddings]) == 0
        output = str(tmp_path / "result.json")
        assert cli.main(["select", "--input",
                         VALID + "six_records_no_embeddings.jsonl",
                         "--embeddings", embeddings, "--alpha", "0.5",
                         "--k", "3", "--output", output]) == 0
        assert len(read_json(output)["selected_ids"]) == 3

    def test_short_response_exits_with_status_1(self, mocker, tmp_path):
        def handler(request):
            texts = json.loads(request.content)["input"]
            return httpx.Response(200, json={"data": [
                {"embedding": [1.0, 2.0]} for text in texts[1:]]})

        self.use_service(mocker, handler)
        output = tmp_path / "records.bin"
        assert cli.main(["embed", "--input",
                         VALID + "six_records_no_embeddings.jsonl",
                         "--output", str(output)]) == 1
        assert not output.exists()

import pytest

from qdselect import cli
from qdselect.config import SelectionConfig, SelectionResult
from qdselect.io.client import EmbeddingServiceError, MissingEnvironmentError


def parse(*argv):
    return cli.build_parser().parse_args(list(argv))


SELECT_ARGS = ["select", "--input", "d.jsonl", "--output", "r.json"]


class TestParsingArguments:
    def test_select_defaults(self):
        args = parse(*SELECT_ARGS, "--alpha", "0.7", "--k", "10")
        assert (args.algorithm, args.seed, args.dense_cap, args.threads) == \
            ("lazy", 0, 20000, None)
        assert (args.epsilon, args.tau, args.clusters) == (None, None, None)

    @pytest.mark.parametrize("flags", [
        ["--alpha", "1.5", "--k", "10"], ["--alpha", "0.5", "--k", "0"],
        ["--alpha", "0.5", "--k", "ten"], ["--k", "10"],
        ["--alpha", "0.5", "--preset", "dolly-1k"],
        ["--alpha", "0.5", "--k", "3", "--algorithm", "random"],
        ["--alpha", "0.5", "--k", "3", "--algorithm", "stochastic",
         "--epsilon", "1"]])
    def test_invalid_flags_exit_with_status_2(self, flags, capsys):
        assert cli.main(SELECT_ARGS + flags) == 2
        assert "error" in capsys.readouterr().err

    @pytest.mark.parametrize("flags", [
        ["--algorithm", "lazy", "--epsilon", "0.1"],
        ["--algorithm", "cluster", "--tau", "0.3"],
        ["--algorithm", "threshold", "--clusters", "5"]])
    def test_flags_of_other_algorithms_are_rejected(self, flags, mocker):
        command = mocker.patch.dict(cli.COMMANDS, {"select": mocker.Mock()})
        assert cli.main(SELECT_ARGS + ["--alpha", "0.5", "--k", "3"] +
                        flags) == 2
        command["select"].assert_not_called()

    def test_k_is_required_without_preset(self, capsys):
        assert cli.main(SELECT_ARGS + ["--alpha", "0.5"]) == 2
        assert "--k" in capsys.readouterr().err

    def test_alpha_list(self):
        args = parse("sweep", "--input", "d.jsonl", "--output", "s.csv",
                     "--k", "5", "--alphas", "0, 0.5,1")
        assert args.alphas == [0.0, 0.5, 1.0]

    def test_secrets_are_not_flags(self):
        with pytest.raises(SystemExit):
            parse("embed", "--input", "d.jsonl", "--output", "e.bin",
                  "--api-key", "secret")


class TestSelectCommand:
    def run_select(self, mocker, *flags):
        dataset = mocker.Mock(n=100)
        mocker.patch("qdselect.cli.load_jsonl", return_value=dataset)
        select = mocker.patch("qdselect.cli.select")
        config = SelectionConfig(0.5, 2)
        select.return_value = SelectionResult((0, 1), (0.5, 0.3), 0.4, 0.6,
                                              config)
        write_result = mocker.patch("qdselect.cli.write_result")
        status = cli.main(SELECT_ARGS + list(flags))
        return status, select, write_result

    def test_selection_is_written(self, mocker, capsys):
        status, select, write_result = self.run_select(
            mocker, "--alpha", "0.5", "--k", "2", "--algorithm", "threshold",
            "--threads", "3", "--dense-cap", "10")
        assert status == 0
        config = select.call_args[0][1]
        assert (config.alpha, config.k_select, config.algorithm,
                config.tau) == (0.5, 2, "threshold", 0.5)
        assert select.call_args[1] == {"threads": 3, "dense_cap": 10}
        assert write_result.call_args[0][2] == "r.json"
        assert capsys.readouterr().err.startswith(
            "selected k=2 alpha=0.5 diversity=0.400000 mean_quality=0.600000 "
            "time=")

    def test_preset_gives_alpha_and_k(self, mocker):
        _, select, _ = self.run_select(mocker, "--preset", "mixed-10k")
        config = select.call_args[0][1]
        assert (config.alpha, config.k_select) == (0.9, 10000)

    def test_k_overrides_preset(self, mocker):
        _, select, _ = self.run_select(mocker, "--preset", "mixed-10k",
                                       "--k", "50")
        assert select.call_args[0][1].k_select == 50

    def test_data_error_exits_with_status_1(self, mocker, capsys):
        mocker.patch("qdselect.cli.load_jsonl",
                     side_effect=ValueError("Duplicate record id: 'a'"))
        assert cli.main(SELECT_ARGS + ["--alpha", "0.5", "--k", "2"]) == 1
        assert capsys.readouterr().err == \
            "qdselect: error: Duplicate record id: 'a'\n"


class TestScoreCommand:
    def test_indices_are_scored(self, mocker, capsys):
        dataset = mocker.Mock(n=10)
        mocker.patch("qdselect.cli.load_jsonl", return_value=dataset)
        mocker.patch("qdselect.cli.build_backend")
        metrics = mocker.patch("qdselect.cli.subset_metrics",
                               return_value=(0.25, 0.5))
        assert cli.main(["score", "--input", "d.jsonl", "--subset",
                         "3,1,4"]) == 0
        assert metrics.call_args[0][1] == [3, 1, 4]
        assert capsys.readouterr().out == ('{"diversity": 0.25, "mean_quality": '
                                           '0.5, "n_subset": 3, "n_total": 10}\n')

    @pytest.mark.parametrize("subset", [",", "1,x"])
    def test_bad_subset_exits_with_status_1(self, subset, mocker):
        mocker.patch("qdselect.cli.load_jsonl")
        assert cli.main(["score", "--input", "d.jsonl", "--subset",
                         subset]) == 1


class TestEmbedCommand:
    args = ["embed", "--input", "d.jsonl", "--output", "e.bin"]

    def test_missing_environment_exits_with_status_2(self, mocker, capsys):
        mocker.patch.dict("os.environ", clear=True)
        assert cli.main(self.args) == 2
        assert "QDIT_EMBED_URL" in capsys.readouterr().err

    def test_texts_are_embedded(self, mocker):
        mocker.patch.dict("os.environ", {"QDIT_EMBED_URL": "http://e",
                                         "QDIT_EMBED_KEY": "k"})
        mocker.patch("qdselect.cli.read_records",
                     return_value=[{"text": "a"}, {"text": "b"}])
        embeddings = mocker.MagicMock(shape=(2, 4))
        embed = mocker.patch("qdselect.cli.embed_texts",
                             return_value=embeddings)
        write = mocker.patch("qdselect.cli.write_embeddings_bin")
        assert cli.main(self.args + ["--batch-size", "16"]) == 0
        texts, config = embed.call_args[0]
        assert texts == ["a", "b"]
        assert config.batch_size == 16
        write.assert_called_once_with("e.bin", embeddings)

    @pytest.mark.parametrize("error", [
        EmbeddingServiceError("HTTP 400 for batch at offset 0", 400, 0),
        MissingEnvironmentError("Environment variable QDIT_EMBED_KEY is not "
                                "set")])
    def test_errors_map_to_exit_status(self, error, mocker):
        mocker.patch("qdselect.cli.EmbedClientConfig.from_env",
                     side_effect=error)
        expected = 2 if isinstance(error, MissingEnvironmentError) else 1
        assert cli.main(self.args) == expected

from numpy import array, eye, sqrt
from numpy.random import default_rng
from numpy.testing import assert_almost_equal
import pytest

from qdselect.config import SelectionConfig
from qdselect.dataset import Dataset
from qdselect.facility_location import CoverageState, fl_score
from qdselect.selectors import (LazyQueueEntry, qd_gain, select, select_greedy,
                                select_lazy, select_lazy_stochastic,
                                select_stochastic, stochastic_sample_size)
from qdselect.similarity import DenseSimilarity, build_backend
from qdselect.testing import greedy_oracle, quality_top_k

SELECTORS = [select_greedy, select_lazy, select_stochastic,
             select_lazy_stochastic]


def random_dataset(n, dim=6, seed=0):
    rng = default_rng(seed)
    return Dataset([str(i) for i in range(n)], rng.random(n),
                   rng.normal(size=(n, dim)))


def config(alpha, k_select, algorithm="greedy", **params):
    return SelectionConfig(alpha, k_select, algorithm, **params)


class TestQualityDiversityGain:
    dataset = Dataset(["a", "b", "c"], [0.2, 1.0, 0.6],
                      [[1, 0], [0, 1], [1 / sqrt(2), 1 / sqrt(2)]])

    def test_alpha_one_gives_quality(self):
        state = CoverageState(self.dataset)
        state.commit(1)
        assert qd_gain(state, 2, alpha=1.0) == 0.5

    def test_alpha_zero_gives_marginal_gain(self):
        state = CoverageState(self.dataset)
        state.commit(0)
        assert qd_gain(state, 1, alpha=0.0) == state.marginal_gain(1)

    def test_linear_combination(self, mocker):
        state = CoverageState(self.dataset)
        mocker.patch.object(state, "marginal_gains", return_value=array([0.4]))
        # normalized quality of record 1 is 1.0
        assert_almost_equal(qd_gain(state, 1, alpha=0.5), 0.7)

    def test_error_if_alpha_out_of_range(self):
        with pytest.raises(ValueError):
            qd_gain(CoverageState(self.dataset), 0, alpha=1.5)

    def test_error_if_candidate_selected(self):
        state = CoverageState(self.dataset)
        state.commit(0)
        with pytest.raises(ValueError):
            qd_gain(state, 0, alpha=0.5)


class TestLazyQueueEntry:
    def test_priority_orders_by_gain_then_index(self):
        entries = [LazyQueueEntry(3, 0.5, 0), LazyQueueEntry(1, 0.5, 0),
                   LazyQueueEntry(0, 0.2, 0), LazyQueueEntry(2, 0.9, 1)]
        assert [entry.candidate for entry
                in sorted(entries, key=lambda entry: entry.priority)] == \
            [2, 1, 3, 0]


class TestStochasticSampleSize:
    @pytest.mark.parametrize("n, k_select, epsilon, expected", [
        (1000, 100, 0.01, 47), (100, 100, 0.5, 1), (3000, 100, 0.01, 139),
        (10, 3, 0.1, 8)])
    def test_sample_size(self, n, k_select, epsilon, expected):
        assert stochastic_sample_size(n, k_select, epsilon) == expected


class TestGreedySelection:
    @pytest.mark.parametrize("selector", SELECTORS)
    def test_alpha_one_selects_top_quality(self, selector):
        # K <= ln(1 / epsilon), so stochastic samples cover every candidate
        dataset = random_dataset(40, seed=1)
        result = selector(dataset, config(1.0, 6, epsilon=0.001))
        assert set(result.selected) == set(quality_top_k(dataset, 6))

    def test_alpha_one_order_is_quality_descending(self):
        dataset = Dataset(list("abcd"), [0.3, 0.9, 0.9, 0.1], eye(4) + 0.1)
        result = select_greedy(dataset, config(1.0, 4))
        assert result.selected == (1, 2, 0, 3)

    @pytest.mark.parametrize("selector", SELECTORS)
    def test_selecting_everything_gives_a_permutation(self, selector):
        dataset = random_dataset(12)
        result = selector(dataset, config(0.5, 12))
        assert sorted(result.selected) == list(range(12))
        assert result.diversity == 1.0

    @pytest.mark.parametrize("seed", range(5))
    def test_greedy_matches_oracle(self, seed):
        dataset = random_dataset(8, seed=seed)
        result = select_greedy(dataset, config(0.0, 3))
        assert list(result.selected) == greedy_oracle(dataset, 3, 0.0)

    def test_trace_is_non_increasing(self):
        dataset = random_dataset(80, seed=3)
        trace = select_greedy(dataset, config(0.3, 20)).objective_trace
        assert all(a >= b for a, b in zip(trace, trace[1:]))

    def test_result_metrics(self):
        dataset = random_dataset(30, seed=2)
        result = select_greedy(dataset, config(0.5, 5))
        assert_almost_equal(result.diversity,
                            fl_score(dataset, result.selected), decimal=9)
        assert_almost_equal(
            result.mean_quality,
            dataset.normalized_quality[list(result.selected)].mean())
        assert result.config.alpha == 0.5

    def test_greedy_evaluates_every_remaining_candidate(self):
        result = select_greedy(random_dataset(10), config(0.5, 3))
        assert result.evaluations == 10 + 9 + 8

    @pytest.mark.parametrize("selector", SELECTORS)
    def test_error_if_budget_exceeds_dataset(self, selector):
        with pytest.raises(ValueError) as exception_info:
            selector(random_dataset(5), config(0.5, 6))
        assert str(exception_info.value) == \
            "k_select 6 exceeds dataset size 5"

    @pytest.mark.parametrize("threads", [1, 2, 4])
    def test_threads_do_not_change_result(self, threads):
        dataset = random_dataset(600, seed=8)
        reference = select_greedy(dataset, config(0.3, 10), threads=1)
        assert select_greedy(dataset, config(0.3, 10),
                             threads=threads) == reference


class TestLazySelection:
    @pytest.mark.parametrize("alpha", [0, 0.3, 0.7, 1])
    @pytest.mark.parametrize("seed", range(5))
    def test_lazy_result_is_identical_to_greedy(self, alpha, seed):
        dataset = random_dataset(60, seed=seed)
        backend = DenseSimilarity(dataset.unit_embeddings)
        greedy = select_greedy(dataset, config(alpha, 15), backend)
        lazy = select_lazy(dataset, config(alpha, 15, "lazy"), backend)
        assert lazy.selected == greedy.selected
        assert lazy.objective_trace == greedy.objective_trace
        assert lazy.evaluations <= greedy.evaluations

    def test_orthogonal_equal_quality_selects_in_index_order(self):
        dataset = Dataset(list("abcdef"), [1] * 6, eye(6))
        result = select_lazy(dataset, config(0.5, 4, "lazy"))
        assert result.selected == (0, 1, 2, 3)

    def test_lazy_saves_evaluations(self):
        dataset = random_dataset(200, seed=9)
        greedy = select_greedy(dataset, config(0.0, 20))
        lazy = select_lazy(dataset, config(0.0, 20, "lazy"))
        assert lazy.evaluations < greedy.evaluations


class TestStochasticSelection:
    def test_same_seed_gives_same_result(self):
        dataset = random_dataset(300, seed=4)
        first = select_stochastic(dataset, config(0.2, 10, "stochastic", seed=7))
        second = select_stochastic(dataset, config(0.2, 10, "stochastic", seed=7))
        assert first == second

    def test_different_seeds_sample_differently(self):
        dataset = random_dataset(300, seed=4)
        results = {select_stochastic(dataset, config(0.0, 10, "stochastic",
                                                     seed=seed)).selected
                   for seed in range(5)}
        assert len(results) > 1

    def test_whole_pool_sampling_matches_greedy(self):
        # n / K * ln(1 / epsilon) >= n whenever K <= ln(1 / epsilon)
        dataset = random_dataset(50, seed=5)
        backend = DenseSimilarity(dataset.unit_embeddings)
        greedy = select_greedy(dataset, config(0.4, 4), backend)
        stochastic = select_stochastic(
            dataset, config(0.4, 4, "stochastic", epsilon=0.01), backend)
        assert stochastic.selected == greedy.selected
        assert stochastic.objective_trace == greedy.objective_trace

    def test_evaluations_are_bounded_by_sample_size(self):
        dataset = random_dataset(1000, seed=6)
        result = select_stochastic(dataset, config(0.5, 100, "stochastic"))
        assert result.evaluations == 100 * 47

    @pytest.mark.parametrize("alpha", [0, 0.5, 1])
    @pytest.mark.parametrize("seed", range(3))
    def test_lazy_stochastic_matches_stochastic(self, alpha, seed):
        dataset = random_dataset(400, seed=seed)
        backend = DenseSimilarity(dataset.unit_embeddings)
        stochastic = select_stochastic(
            dataset, config(alpha, 25, "stochastic", seed=seed), backend)
        lazy = select_lazy_stochastic(
            dataset, config(alpha, 25, "lazy_stochastic", seed=seed), backend)
        assert lazy.selected == stochastic.selected
        assert lazy.objective_trace == stochastic.objective_trace
        assert lazy.evaluations <= stochastic.evaluations


class TestDispatching:
    @pytest.mark.parametrize("algorithm, target", [
        ("greedy", "select_greedy"), ("lazy", "select_lazy"),
        ("stochastic", "select_stochastic"),
        ("lazy_stochastic", "select_lazy_stochastic")])
    def test_dispatch_to_selector(self, algorithm, target, mocker):
        mock = mocker.MagicMock(name=target)
        mocker.patch.dict("qdselect.selectors._SELECTORS", {algorithm: mock})
        dataset = random_dataset(10)
        select(dataset, config(0.5, 3, algorithm), threads=2)
        mock.assert_called_once()
        assert mock.call_args[0][3] == 2

    @pytest.mark.parametrize("algorithm, target", [
        ("cluster", "select_cluster"), ("threshold", "select_threshold")])
    def test_dispatch_to_variant(self, algorithm, target, mocker):
        mock = mocker.patch("qdselect.selectors." + target)
        select(random_dataset(10), config(0.5, 3, algorithm, n_clusters=2))
        mock.assert_called_once()

    def test_backend_is_built_with_dense_cap(self, mocker):
        mock = mocker.patch("qdselect.selectors.build_backend",
                            wraps=build_backend)
        dataset = random_dataset(10)
        select(dataset, config(0.5, 3), dense_cap=5)
        assert mock.call_args[0][1] == 5

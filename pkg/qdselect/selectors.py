"""Greedy optimizers of the quality-diversity objective.

At each step every selector picks a candidate maximizing the
:term:`Q-D score`

    f(a | A, alpha) = (1 - alpha) d(a | A) + alpha q(a)

where d(a | A) is the facility-location :term:`marginal gain` and q(a)
the normalized quality. Ties are always broken in favour of the smaller
dataset index, so runs are deterministic.

Functions
---------
select_greedy
    Evaluate every remaining candidate at every step.
select_lazy
    :term:`lazy greedy`; identical output to `select_greedy` with far
    fewer gain evaluations.
select_stochastic
    :term:`stochastic greedy`; evaluate a seeded random sample of the
    remaining candidates at every step.
select_lazy_stochastic
    `select_stochastic` with cached upper bounds used to skip
    evaluations inside each sample; identical output to
    `select_stochastic`.
select
    Dispatch on ``config.algorithm``, variants included.
"""

import heapq
import logging
import math
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .config import SelectionConfig, SelectionResult
from .dataset import Dataset
from .facility_location import CoverageState, thread_pool
from .similarity import DEFAULT_DENSE_CAP, SimilarityBackend, build_backend
from .variants import select_cluster, select_threshold

__all__ = ["LazyQueueEntry", "qd_gain", "stochastic_sample_size",
           "select_greedy", "select_lazy", "select_stochastic",
           "select_lazy_stochastic", "select"]

logger = logging.getLogger(__name__)


class LazyQueueEntry(NamedTuple):
    """A cached upper bound on the gain of a candidate

    Attributes
    ----------
    candidate: int
        Dataset index.
    stale_gain: float
        Q-D gain computed at selection step `epoch`; an upper bound on
        the current gain since marginal gains only shrink and the
        quality term is constant.
    epoch: int
        Selection step at which `stale_gain` was computed.
    """
    candidate: int
    stale_gain: float
    epoch: int

    @property
    def priority(self) -> Tuple[float, int]:
        """Heap key: larger gain first, then smaller index."""
        return (-self.stale_gain, self.candidate)


def qd_gain(state: CoverageState, candidate: int, alpha: float) -> float:
    """Calculate the Q-D gain of a single unselected candidate.

    Examples
    --------
    >>> from qdselect import Dataset, CoverageState
    >>> dataset = Dataset(["a", "b"], [0, 1], [[1, 0], [0, 1]])
    >>> qd_gain(CoverageState(dataset), 0, alpha=1.0)
    0.0
    >>> qd_gain(CoverageState(dataset), 0, alpha=0.0)
    0.5
    """
    if not 0 <= alpha <= 1:
        raise ValueError("Invalid alpha: {0}".format(alpha))
    return float(state.qd_gains([candidate], alpha)[0])


def stochastic_sample_size(n: int, k_select: int, epsilon: float) -> int:
    """Return ``ceil((n / K) ln(1 / epsilon))``, the per-step sample size.

    >>> stochastic_sample_size(1000, 100, 0.01)
    47
    """
    return int(math.ceil(n / k_select * math.log(1 / epsilon)))


def _check_budget(dataset: Dataset, config: SelectionConfig) -> None:
    if config.k_select > dataset.n:
        raise ValueError("k_select {0} exceeds dataset size {1}".format(
            config.k_select, dataset.n))


def _argmax(candidates: np.ndarray, gains: np.ndarray) -> int:
    """Index of the best candidate, the smallest index among equal gains."""
    return int(candidates[gains == gains.max()].min())


def _step_rng(seed: int, step: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, step])))


def _sample(state: CoverageState, size: int, seed: int, step: int) -> np.ndarray:
    remaining = state.remaining
    size = min(remaining.size, size)
    return _step_rng(seed, step).choice(remaining, size=size, replace=False)


def _finish(state: CoverageState,
            config: SelectionConfig,
            trace: list,
            evaluations: int
            ) -> SelectionResult:
    result = SelectionResult.from_state(state, config, trace,
                                        evaluations=evaluations)
    logger.info("Selected %d of %d records with %s (alpha=%g): diversity "
                "%.6f, mean quality %.6f, %d evaluations", len(result),
                state.n, config.algorithm, config.alpha, result.diversity,
                result.mean_quality, evaluations)
    return result


def select_greedy(dataset: Dataset,
                  config: SelectionConfig,
                  backend: Optional[SimilarityBackend] = None,
                  threads: Optional[int] = None
                  ) -> SelectionResult:
    """Select ``config.k_select`` records by exhaustive greedy search.

    Parameters
    ----------
    dataset
        The ground set.
    config
        Selection parameters; only `alpha` and `k_select` are used.
    backend
        Similarity backend; built for `dataset` when omitted.
    threads
        Threads used to evaluate gains; defaults to all cores. Results
        do not depend on it.

    Returns
    -------
    SelectionResult

    Raises
    ------
    ValueError:
        If ``config.k_select`` exceeds the dataset size.
    """
    _check_budget(dataset, config)
    state = CoverageState(dataset, backend)
    trace, evaluations = [], 0
    with thread_pool(threads) as executor:
        for step in range(config.k_select):
            remaining = state.remaining
            gains = state.qd_gains(remaining, config.alpha, executor)
            evaluations += remaining.size
            best = _argmax(remaining, gains)
            trace.append(state.qd_commit(best, config.alpha))
            logger.debug("Step %d: selected %d (gain %.6g)", step, best,
                         trace[-1])
    return _finish(state, config, trace, evaluations)


def select_lazy(dataset: Dataset,
                config: SelectionConfig,
                backend: Optional[SimilarityBackend] = None,
                threads: Optional[int] = None
                ) -> SelectionResult:
    """Select ``config.k_select`` records by lazy greedy search.

    All gains are evaluated once; afterwards only the top of a priority
    queue of :class:`LazyQueueEntry` is re-evaluated, until a freshly
    evaluated entry stays on top. The output is identical to
    :func:`select_greedy`; see there for the parameters.
    """
    _check_budget(dataset, config)
    state = CoverageState(dataset, backend)
    trace = []
    with thread_pool(threads) as executor:
        candidates = state.remaining
        gains = state.qd_gains(candidates, config.alpha, executor)
    evaluations = candidates.size
    queue = [(entry.priority, entry) for entry in
             (LazyQueueEntry(int(candidate), float(gain), 0)
              for candidate, gain in zip(candidates, gains))]
    heapq.heapify(queue)

    for step in range(config.k_select):
        while True:
            _, entry = heapq.heappop(queue)
            if entry.epoch == step:
                break
            fresh = LazyQueueEntry(entry.candidate,
                                   qd_gain(state, entry.candidate, config.alpha),
                                   step)
            evaluations += 1
            heapq.heappush(queue, (fresh.priority, fresh))
        trace.append(state.qd_commit(entry.candidate, config.alpha))
        logger.debug("Step %d: selected %d (gain %.6g)", step,
                     entry.candidate, trace[-1])
    return _finish(state, config, trace, evaluations)


def select_stochastic(dataset: Dataset,
                      config: SelectionConfig,
                      backend: Optional[SimilarityBackend] = None,
                      threads: Optional[int] = None
                      ) -> SelectionResult:
    """Select ``config.k_select`` records by stochastic greedy search.

    At step t a sample of ``stochastic_sample_size(n, K, epsilon)``
    remaining candidates (all of them if fewer remain) is drawn
    uniformly without replacement, using a PCG64 stream seeded from
    ``(config.seed, t)``, and the best of the sample is selected.
    See :func:`select_greedy` for the parameters.
    """
    _check_budget(dataset, config)
    state = CoverageState(dataset, backend)
    size = stochastic_sample_size(dataset.n, config.k_select, config.epsilon)
    trace, evaluations = [], 0
    with thread_pool(threads) as executor:
        for step in range(config.k_select):
            sample = _sample(state, size, config.seed, step)
            gains = state.qd_gains(sample, config.alpha, executor)
            evaluations += sample.size
            best = _argmax(sample, gains)
            trace.append(state.qd_commit(best, config.alpha))
            logger.debug("Step %d: selected %d of %d sampled (gain %.6g)",
                         step, best, sample.size, trace[-1])
    return _finish(state, config, trace, evaluations)


def select_lazy_stochastic(dataset: Dataset,
                           config: SelectionConfig,
                           backend: Optional[SimilarityBackend] = None,
                           threads: Optional[int] = None
                           ) -> SelectionResult:
    """Stochastic greedy search with lazily refreshed gain bounds.

    Each step draws the same sample as :func:`select_stochastic` and
    scans it in order of cached upper bounds, stopping as soon as no
    unscanned bound can beat the best exact gain found. It therefore
    selects exactly what :func:`select_stochastic` selects, with at most
    as many gain evaluations.
    """
    _check_budget(dataset, config)
    state = CoverageState(dataset, backend)
    size = stochastic_sample_size(dataset.n, config.k_select, config.epsilon)
    bounds = np.full(dataset.n, np.inf)
    trace, evaluations = [], 0
    for step in range(config.k_select):
        sample = _sample(state, size, config.seed, step)
        best, best_gain = -1, -np.inf
        for candidate in sample[np.lexsort((sample, -bounds[sample]))]:
            bound = bounds[candidate]
            if bound < best_gain or (bound == best_gain and candidate > best):
                break
            gain = qd_gain(state, candidate, config.alpha)
            bounds[candidate] = gain
            evaluations += 1
            if gain > best_gain or (gain == best_gain and candidate < best):
                best, best_gain = int(candidate), gain
        trace.append(state.qd_commit(best, config.alpha))
        logger.debug("Step %d: selected %d of %d sampled (gain %.6g)",
                     step, best, sample.size, trace[-1])
    return _finish(state, config, trace, evaluations)


_SELECTORS = {
    "greedy": select_greedy,
    "lazy": select_lazy,
    "stochastic": select_stochastic,
    "lazy_stochastic": select_lazy_stochastic,
}


def select(dataset: Dataset,
           config: SelectionConfig,
           backend: Optional[SimilarityBackend] = None,
           threads: Optional[int] = None,
           dense_cap: int = DEFAULT_DENSE_CAP
           ) -> SelectionResult:
    """Run the selection algorithm named by ``config.algorithm``.

    Parameters
    ----------
    dataset
        The ground set.
    config
        Selection parameters.
    backend
        Similarity backend to reuse across runs; when omitted one is
        built with :func:`~qdselect.similarity.build_backend`.
    threads
        Threads for gain evaluation; never changes the result.
    dense_cap
        Largest dataset for which a dense similarity matrix is built.

    Examples
    --------
    >>> from qdselect import Dataset, SelectionConfig, select
    >>> dataset = Dataset(["a", "b", "c"], [0.1, 0.9, 0.5],
    ...                   [[1, 0], [0, 1], [1, 1]])
    >>> select(dataset, SelectionConfig(alpha=1.0, k_select=2)).selected
    (1, 2)
    """
    if backend is None:
        backend = build_backend(dataset.unit_embeddings, dense_cap)
    if config.algorithm == "cluster":
        return select_cluster(dataset, config, backend)
    if config.algorithm == "threshold":
        return select_threshold(dataset, config, backend)
    return _SELECTORS[config.algorithm](dataset, config, backend, threads)

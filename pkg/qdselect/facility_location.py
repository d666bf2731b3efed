"""Incremental evaluation of the facility-location diversity score.

For a ground set V and a subset A the :term:`facility location`
function is

    d(A) = 1/|V| * sum over v in V of max over a in A of sim(a, v)

with ``sim`` the clamped cosine similarity and d(empty set) = 0. The sum
is normalized by |V| so that d lies in [0, 1] and mixes with a [0, 1]
quality term on equal footing.

:class:`CoverageState` keeps, for every v, the running maximum
similarity to the selected set, from which both d(A) and the
:term:`marginal gain` d(a|A) = d(A + a) - d(A) follow in O(|V|) per
candidate.
"""

from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import contextmanager
import os
from typing import Iterable, Iterator, Optional

import numpy as np

from .dataset import Dataset
from .similarity import OnTheFlySimilarity, SimilarityBackend, build_backend

__all__ = ["CoverageState", "fl_score", "thread_pool"]


@contextmanager
def thread_pool(threads: Optional[int] = None) -> Iterator[Optional[Executor]]:
    """Yield a thread pool for gain evaluation, or None when single-threaded.

    `threads` defaults to the number of CPU cores.
    """
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise ValueError("Invalid number of threads: {0}".format(threads))
    if threads == 1:
        yield None
    else:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            yield executor


def fl_score(dataset: Dataset,
             subset: Iterable[int],
             backend: Optional[SimilarityBackend] = None
             ) -> float:
    """Calculate the normalized facility-location score of a subset.

    Parameters
    ----------
    dataset
        The ground set V.
    subset
        Indices of the subset A; order does not matter.
    backend
        Similarity backend to read from. Defaults to computing the
        needed similarities on the fly.

    Returns
    -------
    float:
        d(A) in [0, 1]; 0.0 for an empty subset.

    Raises
    ------
    IndexError:
        If an index is out of range.
    ValueError:
        If an index is repeated.

    Examples
    --------
    >>> dataset = Dataset(["a", "b", "c"], [0, 0, 0],
    ...                   [[1, 0], [0, 1], [1, 1]])
    >>> round(fl_score(dataset, [0]), 8)
    0.56903559
    """
    subset = dataset.check_indices(subset)
    if subset.size == 0:
        return 0.0
    if backend is None:
        backend = OnTheFlySimilarity(dataset.unit_embeddings)
    every_point = np.arange(dataset.n)
    coverage = np.zeros(dataset.n)
    for start in range(0, subset.size, backend.chunk_rows):
        chunk = subset[start:start + backend.chunk_rows]
        np.maximum(coverage, backend.block(chunk, every_point).max(axis=0),
                   out=coverage)
    return float(coverage.sum()) / dataset.n


class CoverageState:
    """Running coverage of the ground set by a growing selection

    Parameters
    ----------
    dataset
        The ground set V.
    backend
        Similarity backend for `dataset`; built with the default dense
        cap when omitted.

    Attributes
    ----------
    cur_max: ndarray
        ``cur_max[v]`` is the largest similarity of v to a selected
        point, 0 while nothing is selected. Entrywise non-decreasing.
    total: float
        Sum of `cur_max`.
    selected_mask: ndarray of bool
        Which points have been committed.
    selected: list of int
        Committed points in commit order.

    Notes
    -----
    :meth:`marginal_gain` and :meth:`marginal_gains` only read the
    state and may run concurrently; :meth:`commit` needs exclusive
    access.
    """

    def __init__(self,
                 dataset: Dataset,
                 backend: Optional[SimilarityBackend] = None
                 ) -> None:
        self.dataset = dataset
        self.backend = (build_backend(dataset.unit_embeddings)
                        if backend is None else backend)
        self.n = dataset.n
        self.cur_max = np.zeros(self.n)
        self.total = 0.0
        self.selected_mask = np.zeros(self.n, dtype=bool)
        self.selected = []

    def __repr__(self) -> str:
        return "{0}(selected={1}, diversity={2:.6f})".format(
            self.__class__.__name__, len(self.selected), self.diversity)

    @property
    def diversity(self) -> float:
        """The normalized facility-location score of the selection."""
        return self.total / self.n

    @property
    def remaining(self) -> np.ndarray:
        """Unselected indices in ascending order."""
        return np.flatnonzero(~self.selected_mask)

    def _check_candidate(self, candidate: int) -> int:
        candidate = int(candidate)
        if not 0 <= candidate < self.n:
            raise IndexError("Invalid index {0} for dataset of size "
                             "{1}".format(candidate, self.n))
        if self.selected_mask[candidate]:
            raise ValueError("Candidate {0} is already selected".format(
                candidate))
        return candidate

    def _gains_from_rows(self, rows: np.ndarray) -> np.ndarray:
        # rows is a fresh array and is overwritten
        np.subtract(rows, self.cur_max, out=rows)
        np.maximum(rows, 0.0, out=rows)
        return rows.sum(axis=1) / self.n

    def _chunk_gains(self, chunk: np.ndarray) -> np.ndarray:
        return self._gains_from_rows(self.backend.rows(chunk))

    def marginal_gain(self, candidate: int) -> float:
        """Calculate d(candidate | A) without modifying the state.

        Raises
        ------
        ValueError:
            If `candidate` is already selected.
        """
        candidate = self._check_candidate(candidate)
        return float(self._chunk_gains(np.array([candidate]))[0])

    def marginal_gains(self,
                       candidates: np.ndarray,
                       executor: Optional[Executor] = None
                       ) -> np.ndarray:
        """Calculate the marginal gains of many unselected candidates.

        Candidates are processed in the chunks chosen by the backend,
        optionally on `executor`. A gain has the same value whatever the
        other candidates and the number of threads.
        """
        candidates = np.asarray(candidates, dtype=np.intp).reshape(-1)
        if np.any((candidates < 0) | (candidates >= self.n)):
            raise IndexError("Invalid index {0} for dataset of size {1}".format(
                int(candidates[(candidates < 0) | (candidates >= self.n)][0]),
                self.n))
        if np.any(self.selected_mask[candidates]):
            raise ValueError("Candidate {0} is already selected".format(
                int(candidates[self.selected_mask[candidates]][0])))
        chunks = self.backend.chunks(candidates)
        if not chunks:
            return np.zeros(0)
        if executor is None:
            gains = [self._chunk_gains(chunk) for chunk in chunks]
        else:
            gains = list(executor.map(self._chunk_gains, chunks))
        return np.concatenate(gains)

    def qd_gains(self,
                 candidates: np.ndarray,
                 alpha: float,
                 executor: Optional[Executor] = None
                 ) -> np.ndarray:
        """Quality-diversity gains ``(1 - alpha) d(a|A) + alpha q(a)``."""
        candidates = np.asarray(candidates, dtype=np.intp).reshape(-1)
        diversity = self.marginal_gains(candidates, executor)
        quality = self.dataset.normalized_quality[candidates]
        return (1 - alpha) * diversity + alpha * quality

    def commit(self, candidate: int) -> float:
        """Add `candidate` to the selection.

        Returns
        -------
        float:
            The realized marginal gain, equal to :meth:`marginal_gain`
            evaluated just before the commit.

        Raises
        ------
        ValueError:
            If `candidate` is already selected.
        """
        candidate = self._check_candidate(candidate)
        row = self.backend.rows(np.array([candidate]))
        gain = float(self._gains_from_rows(row.copy())[0])
        np.maximum(self.cur_max, row[0], out=self.cur_max)
        self.total = float(self.cur_max.sum())
        self.selected_mask[candidate] = True
        self.selected.append(candidate)
        return gain

    def qd_commit(self, candidate: int, alpha: float) -> float:
        """Commit `candidate` and return its realized quality-diversity gain."""
        gain = self.commit(candidate)
        quality = self.dataset.normalized_quality[candidate]
        return float((1 - alpha) * gain + alpha * quality)

"""Reference implementations and synthetic datasets for testing.

The reference functions here are literal, slow transcriptions of the
definitions in plain Python. They share no code with the optimized
selection paths so that the two can be checked against each other.

Functions
---------
brute_fl_score
    Facility-location score by a double loop over the ground set.
greedy_oracle
    Greedy selection recomputing every score from scratch.
exhaustive_optimum
    Best subset of a given size by enumeration.
quality_top_k
    The K highest-quality records.
make_synthetic
    Gaussian-mixture dataset from a :class:`SyntheticSpec`.
"""

from dataclasses import dataclass
import itertools
import math
from typing import List, Sequence, Tuple

import numpy as np

from .dataset import Dataset

__all__ = ["SyntheticSpec", "QUALITY_MODES", "brute_fl_score",
           "greedy_oracle", "exhaustive_optimum", "objective_value",
           "quality_top_k", "make_synthetic"]

QUALITY_MODES = ("uniform_random", "cluster_correlated")

EXHAUSTIVE_BUDGET = 10 ** 6


def _check_subset(dataset: Dataset, subset: Sequence[int]) -> List[int]:
    subset = [int(index) for index in subset]
    for index in subset:
        if not 0 <= index < dataset.n:
            raise IndexError("Invalid index {0} for dataset of size "
                             "{1}".format(index, dataset.n))
    if len(set(subset)) != len(subset):
        raise ValueError("Duplicate indices in subset")
    return subset


def _clamped_cosine(a: Sequence[float], b: Sequence[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    norm_a = math.sqrt(sum(x * x for x in a))
    norm_b = math.sqrt(sum(y * y for y in b))
    return max(0.0, min(1.0, dot / (norm_a * norm_b)))


def _similarity_table(dataset: Dataset) -> List[List[float]]:
    vectors = dataset.embeddings.tolist()
    return [[1.0 if i == j else _clamped_cosine(vectors[i], vectors[j])
             for j in range(dataset.n)] for i in range(dataset.n)]


def _coverage(table: List[List[float]], subset: Sequence[int]) -> float:
    if not subset:
        return 0.0
    total = 0.0
    for v in range(len(table)):
        total += max(table[a][v] for a in subset)
    return total / len(table)


def brute_fl_score(dataset: Dataset, subset: Sequence[int]) -> float:
    """Facility-location score normalized by |V|, by direct evaluation.

    Raises
    ------
    IndexError:
        If an index is out of range.
    """
    subset = _check_subset(dataset, subset)
    if not subset:
        return 0.0
    vectors = dataset.embeddings.tolist()
    total = 0.0
    for v in range(dataset.n):
        best = 0.0
        for a in subset:
            similarity = (1.0 if a == v
                          else _clamped_cosine(vectors[a], vectors[v]))
            best = max(best, similarity)
        total += best
    return total / dataset.n


def _objective(table: List[List[float]],
               quality: List[float],
               subset: Sequence[int],
               alpha: float
               ) -> float:
    return ((1 - alpha) * _coverage(table, subset) +
            alpha * sum(quality[a] for a in subset))


def greedy_oracle(dataset: Dataset, k_select: int, alpha: float) -> List[int]:
    """Greedy selection, recomputing the objective for every candidate.

    Each step adds the candidate with the largest increase of
    ``(1 - alpha) d(A) + alpha sum q``, the smallest index on ties.
    """
    table = _similarity_table(dataset)
    quality = dataset.normalized_quality.tolist()
    selected = []
    for _ in range(k_select):
        current = _objective(table, quality, selected, alpha)
        best, best_gain = None, -math.inf
        for candidate in range(dataset.n):
            if candidate in selected:
                continue
            gain = _objective(table, quality, selected + [candidate],
                              alpha) - current
            if gain > best_gain:
                best, best_gain = candidate, gain
        selected.append(best)
    return selected


def exhaustive_optimum(dataset: Dataset,
                       k_select: int,
                       alpha: float
                       ) -> Tuple[Tuple[int, ...], float]:
    """Find the best subset of size `k_select` by enumeration.

    The objective is ``F(A) = (1 - alpha) d(A) + alpha sum_{a in A} q(a)``,
    the sum of the Q-D gains a greedy run accumulates.

    Returns
    -------
    subset: tuple of int
        The lexicographically smallest maximizer.
    value: float
        Its objective value.

    Raises
    ------
    ValueError:
        If there are more than a million subsets to enumerate.
    """
    count = math.comb(dataset.n, k_select)
    if count > EXHAUSTIVE_BUDGET:
        raise ValueError("{0} subsets exceed the enumeration budget of "
                         "{1}".format(count, EXHAUSTIVE_BUDGET))
    table = _similarity_table(dataset)
    quality = dataset.normalized_quality.tolist()
    best, best_value = None, -math.inf
    for subset in itertools.combinations(range(dataset.n), k_select):
        value = _objective(table, quality, subset, alpha)
        if value > best_value:
            best, best_value = subset, value
    return best, best_value


def objective_value(dataset: Dataset,
                    subset: Sequence[int],
                    alpha: float
                    ) -> float:
    """Evaluate the objective of :func:`exhaustive_optimum` on a subset."""
    subset = _check_subset(dataset, subset)
    quality = dataset.normalized_quality.tolist()
    return ((1 - alpha) * brute_fl_score(dataset, subset) +
            alpha * sum(quality[a] for a in subset))


def quality_top_k(dataset: Dataset, k_select: int) -> List[int]:
    """Indices of the K highest normalized qualities, best first."""
    quality = dataset.normalized_quality.tolist()
    order = sorted(range(dataset.n), key=lambda index: (-quality[index], index))
    return order[:k_select]


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of a synthetic Gaussian-mixture dataset

    Parameters
    ----------
    n: int
        Number of records.
    dim: int
        Embedding dimension.
    n_blobs: int
        Number of mixture components; records are dealt to them in turn.
    blob_sigma: float
        Standard deviation of every component around its unit-norm
        center.
    quality_mode: str
        ``"uniform_random"`` draws qualities uniformly from [0, 1);
        ``"cluster_correlated"`` draws them from [0.5, 1) in blob 0 and
        from [0, 0.5) elsewhere.
    seed: int
        Seed of all random draws.
    """
    n: int
    dim: int = 16
    n_blobs: int = 4
    blob_sigma: float = 0.1
    quality_mode: str = "uniform_random"
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.n >= self.n_blobs >= 1:
            raise ValueError("Invalid blob count {0} for {1} records".format(
                self.n_blobs, self.n))
        if not self.blob_sigma > 0:
            raise ValueError("Invalid blob_sigma: {0}".format(self.blob_sigma))
        if self.dim < 1:
            raise ValueError("Invalid dim: {0}".format(self.dim))
        if self.quality_mode not in QUALITY_MODES:
            raise ValueError("Invalid quality_mode: {0!r}".format(
                self.quality_mode))


def make_synthetic(spec: SyntheticSpec, return_labels: bool = False):
    """Generate a dataset of unit-normalized Gaussian-mixture embeddings.

    The same spec always gives the same dataset.

    Parameters
    ----------
    spec
        Dataset parameters.
    return_labels
        Also return the blob of every record.

    Returns
    -------
    Dataset, or (Dataset, ndarray) when `return_labels` is set.

    Examples
    --------
    >>> spec = SyntheticSpec(n=100, n_blobs=4, seed=7)
    >>> make_synthetic(spec)
    Dataset(n=100, dim=16)
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    centers = rng.normal(size=(spec.n_blobs, spec.dim))
    centers /= np.linalg.norm(centers, axis=1)[:, np.newaxis]
    labels = np.arange(spec.n) % spec.n_blobs
    points = centers[labels] + rng.normal(scale=spec.blob_sigma,
                                          size=(spec.n, spec.dim))
    points /= np.linalg.norm(points, axis=1)[:, np.newaxis]
    draws = rng.random(spec.n)
    if spec.quality_mode == "uniform_random":
        quality = draws
    else:
        quality = np.where(labels == 0, 0.5 + 0.5 * draws, 0.5 * draws)
    ids = ["s{0:06d}".format(index) for index in range(spec.n)]
    dataset = Dataset(ids, quality, points)
    if return_labels:
        return dataset, labels
    return dataset

"""Cluster and threshold selection variants.

Functions
---------
kmeans
    Lloyd's algorithm with k-means++ seeding on unit-normalized
    embeddings.
cluster_quotas
    Split a selection budget evenly over clusters.
select_cluster
    :term:`cluster selection`: equal per-cluster quotas of the highest
    quality records.
select_threshold
    :term:`threshold selection`: scan by quality, rejecting any record
    too similar to one already accepted.

Both variants rank by quality only; the result trace still reports the
Q-D gain of every pick for the configured alpha, so their results are
comparable with the greedy selectors.
"""

from dataclasses import dataclass
import logging
from typing import Iterable, List, Optional, Tuple
import warnings

import numpy as np

from .config import SelectionConfig, SelectionResult
from .dataset import Dataset
from .facility_location import CoverageState
from .similarity import SimilarityBackend, build_backend

__all__ = ["ClusterAssignment", "kmeans", "cluster_quotas",
           "select_cluster", "select_threshold"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    """Result of a k-means fit

    Attributes
    ----------
    labels: ndarray of int
        Cluster id in ``[0, k)`` of every record.
    centroids: ndarray
        The k x dim centroid matrix the labels were assigned against.
    inertia: float
        Sum of squared distances of the records to their centroid.
    iterations: int
        Number of assignment steps performed.
    """
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    iterations: int

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def sizes(self) -> np.ndarray:
        """Number of records in every cluster."""
        return np.bincount(self.labels, minlength=self.k)


def _squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # |x|^2 - 2 x.c + |c|^2 with |x| = 1
    distances = (centroids ** 2).sum(axis=1) - 2 * points.dot(centroids.T) + 1
    return np.maximum(distances, 0.0, out=distances)


def _seed_centroids(points: np.ndarray,
                    k: int,
                    rng: np.random.Generator
                    ) -> np.ndarray:
    """Choose k initial centroids among the points by k-means++."""
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    closest = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            index = int(rng.choice(n, p=closest / total))
        else:
            unchosen = np.setdiff1d(np.arange(n), chosen)
            index = int(rng.choice(unchosen))
        chosen.append(index)
        np.minimum(closest, ((points - points[index]) ** 2).sum(axis=1),
                   out=closest)
    return points[chosen].copy()


def _update_centroids(points: np.ndarray,
                      labels: np.ndarray,
                      k: int,
                      point_distances: np.ndarray
                      ) -> np.ndarray:
    """Move every centroid to the mean of its members.

    An empty cluster is reseeded on the record farthest from its own
    centroid; no record reseeds two clusters.
    """
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, labels, points)
    counts = np.bincount(labels, minlength=k)
    centroids = sums / np.maximum(counts, 1)[:, np.newaxis]
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        logger.debug("Reseeding %d empty clusters", empty.size)
        distances = point_distances.copy()
        for cluster in empty:
            farthest = int(distances.argmax())
            centroids[cluster] = points[farthest]
            distances[farthest] = -1.0
    return centroids


def kmeans(dataset: Dataset,
           k: int,
           seed: int = 0,
           max_iters: int = 100
           ) -> ClusterAssignment:
    """Cluster the unit-normalized embeddings of a dataset.

    Parameters
    ----------
    dataset
        Records to cluster.
    k
        Number of clusters, ``1 <= k <= len(dataset)``.
    seed
        Seed of the k-means++ initialization. Records are seeded and
        iterated in lexicographic order of their unit embeddings, so
        the clustering does not depend on the order of the records.
    max_iters
        Maximum number of assignment steps; iteration also stops as soon
        as no label changes.

    Returns
    -------
    ClusterAssignment

    Raises
    ------
    ValueError:
        If `k` or `max_iters` is out of range.

    Warns
    -----
    UserWarning:
        If the inertia increases between iterations.
    """
    if not 1 <= k <= dataset.n:
        raise ValueError("Invalid number of clusters {0} for dataset of "
                         "size {1}".format(k, dataset.n))
    if max_iters < 1:
        raise ValueError("Invalid max_iters: {0}".format(max_iters))
    points = dataset.unit_embeddings
    # fixed data-derived order, so that the result ignores input order
    order = np.lexsort(points.T[::-1])
    labels, centroids, inertia, iteration = _lloyd(points[order], k, seed,
                                                   max_iters)
    unsorted_labels = np.empty_like(labels)
    unsorted_labels[order] = labels
    logger.info("k-means with k=%d finished after %d iterations, inertia "
                "%.6g", k, iteration, inertia)
    return ClusterAssignment(unsorted_labels, centroids, inertia, iteration)


def _lloyd(points: np.ndarray,
           k: int,
           seed: int,
           max_iters: int
           ) -> Tuple[np.ndarray, np.ndarray, float, int]:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    centroids = _seed_centroids(points, k, rng)
    labels, inertia = None, np.inf

    for iteration in range(1, max_iters + 1):
        new_labels = _squared_distances(points, centroids).argmin(axis=1)
        point_distances = ((points - centroids[new_labels]) ** 2).sum(axis=1)
        new_inertia = float(point_distances.sum())
        if new_inertia > inertia * (1 + 1e-9) + 1e-12:
            warnings.warn("k-means inertia increased from {0} to {1} at "
                          "iteration {2}".format(inertia, new_inertia,
                                                 iteration))
        converged = labels is not None and np.array_equal(labels, new_labels)
        labels, inertia = new_labels, new_inertia
        if converged or iteration == max_iters:
            break
        centroids = _update_centroids(points, labels, k, point_distances)
    return labels, centroids, inertia, iteration


def cluster_quotas(cluster_sizes: Iterable[int],
                   k_select: int
                   ) -> Tuple[np.ndarray, np.ndarray]:
    """Split a budget of `k_select` records over clusters.

    Every cluster gets ``k_select // k``; the ``k_select % k`` largest
    clusters get one more, with ties going to the smaller cluster id.
    A cluster smaller than its quota gives up the shortfall, which is
    handed out one record at a time to the clusters with room left, in
    the same largest-first order.

    Returns
    -------
    base: ndarray
        Quotas before redistribution; they differ by at most one.
    quotas: ndarray
        Final quotas, each at most the cluster size, summing to
        ``min(k_select, sum(cluster_sizes))``.

    Examples
    --------
    >>> base, quotas = cluster_quotas([5, 1, 3], 7)
    >>> base.tolist(), quotas.tolist()
    ([3, 2, 2], [4, 1, 2])
    """
    sizes = np.asarray(list(cluster_sizes), dtype=np.int64)
    k = sizes.size
    order = np.lexsort((np.arange(k), -sizes))
    base = np.full(k, k_select // k, dtype=np.int64)
    base[order[:k_select % k]] += 1

    quotas = np.minimum(base, sizes)
    shortfall = int(base.sum() - quotas.sum())
    while shortfall > 0:
        open_clusters = [cluster for cluster in order
                         if quotas[cluster] < sizes[cluster]]
        if not open_clusters:
            break
        for cluster in open_clusters[:shortfall]:
            quotas[cluster] += 1
        shortfall -= min(shortfall, len(open_clusters))
    return base, quotas


def _top_quality(dataset: Dataset, members: np.ndarray) -> np.ndarray:
    """Sort members by normalized quality descending, index ascending."""
    quality = dataset.normalized_quality[members]
    return members[np.lexsort((members, -quality))]


def _replay(dataset: Dataset,
            config: SelectionConfig,
            selected: List[int],
            backend: SimilarityBackend,
            evaluations: int
            ) -> SelectionResult:
    state = CoverageState(dataset, backend)
    trace = [state.qd_commit(index, config.alpha) for index in selected]
    truncated = len(selected) < config.k_select
    result = SelectionResult.from_state(state, config, trace, truncated,
                                        evaluations)
    logger.info("Selected %d of %d records with %s: diversity %.6f, mean "
                "quality %.6f", len(result), dataset.n, config.algorithm,
                result.diversity, result.mean_quality)
    return result


def select_cluster(dataset: Dataset,
                   config: SelectionConfig,
                   backend: Optional[SimilarityBackend] = None
                   ) -> SelectionResult:
    """Select the highest-quality records of every k-means cluster.

    The dataset is clustered into ``config.n_clusters`` clusters and the
    budget split by :func:`cluster_quotas`. The result lists clusters in
    ascending id, records by descending quality within a cluster.

    Raises
    ------
    ValueError:
        If ``config.n_clusters`` or ``config.k_select`` exceeds the
        dataset size.
    """
    if config.k_select > dataset.n:
        raise ValueError("k_select {0} exceeds dataset size {1}".format(
            config.k_select, dataset.n))
    if config.n_clusters > dataset.n:
        raise ValueError("n_clusters {0} exceeds dataset size {1}".format(
            config.n_clusters, dataset.n))
    if backend is None:
        backend = build_backend(dataset.unit_embeddings)
    assignment = kmeans(dataset, config.n_clusters, config.seed,
                        config.kmeans_max_iters)
    _, quotas = cluster_quotas(assignment.sizes, config.k_select)
    selected = []
    for cluster, quota in enumerate(quotas):
        members = np.flatnonzero(assignment.labels == cluster)
        selected.extend(int(index) for index
                        in _top_quality(dataset, members)[:quota])
    return _replay(dataset, config, selected, backend, evaluations=0)


def select_threshold(dataset: Dataset,
                     config: SelectionConfig,
                     backend: Optional[SimilarityBackend] = None
                     ) -> SelectionResult:
    """Select records by quality, skipping near-duplicates of earlier picks.

    Records are scanned by descending quality (ascending index on ties)
    and accepted unless their clamped similarity to an accepted record
    exceeds ``config.tau``. When the records run out before
    ``config.k_select`` are accepted the shorter selection is returned
    with ``truncated`` set.
    """
    if backend is None:
        backend = build_backend(dataset.unit_embeddings)
    accepted, scanned = [], 0
    for candidate in _top_quality(dataset, np.arange(dataset.n)):
        if len(accepted) == config.k_select:
            break
        scanned += 1
        if accepted and backend.block([candidate], accepted).max() > config.tau:
            continue
        accepted.append(int(candidate))
    if len(accepted) < config.k_select:
        logger.warning("Only %d records pass the similarity threshold %g; "
                       "%d were requested", len(accepted), config.tau,
                       config.k_select)
    return _replay(dataset, config, accepted, backend, evaluations=scanned)

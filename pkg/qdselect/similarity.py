"""Cosine similarity between embeddings and similarity backends.

All facility-location computations use the :term:`clamped similarity`
``max(0, cos(a, b))`` of two embeddings. Embeddings are unit-normalized
once, when a :class:`~qdselect.dataset.Dataset` is built, so that inside
the selection loop the similarity reduces to a clamped dot product.

Functions
---------
cosine_similarity, clamped_similarity
    Similarity of a single pair of vectors.
unit_normalize
    Row-wise normalization of an embedding matrix.
build_backend
    Choose a similarity backend for a dataset.

Classes
-------
SimilarityBackend
    Abstract base class giving rows and blocks of the clamped
    similarity matrix of a dataset.
DenseSimilarity, OnTheFlySimilarity
    A precomputed |V| x |V| matrix, and dot products computed on
    demand against the unit-normalized embeddings.

Examples
--------
>>> from qdselect import cosine_similarity, clamped_similarity
>>> cosine_similarity([1, 1], [1, 0])
0.7071067811865475
>>> clamped_similarity([1, 0], [-1, 0])
0.0
"""

import abc
import logging
from typing import List, Sequence

import numpy as np

__all__ = ["cosine_similarity", "clamped_similarity", "unit_normalize",
           "SimilarityBackend", "DenseSimilarity", "OnTheFlySimilarity",
           "build_backend", "DEFAULT_DENSE_CAP"]

logger = logging.getLogger(__name__)

Vector = Sequence[float]

DEFAULT_DENSE_CAP = 20000


def cosine_similarity(a: Vector, b: Vector) -> float:
    """Calculate the cosine similarity of two vectors.

    Parameters
    ----------
    a, b
        Real vectors of equal length with nonzero norm.

    Returns
    -------
    float:
        ``dot(a, b) / (|a| |b|)``, clamped to [-1, 1] against rounding
        overshoot.

    Raises
    ------
    ValueError:
        If the vectors differ in length or either has zero norm.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("Vector lengths differ: {0} and {1}".format(
            a.size, b.size))
    norm_a, norm_b = np.linalg.norm(a), np.linalg.norm(b)
    if norm_a == 0 or norm_b == 0:
        raise ValueError("degenerate embedding")
    return float(np.clip(a.dot(b) / (norm_a * norm_b), -1.0, 1.0))


def clamped_similarity(a: Vector, b: Vector) -> float:
    """Cosine similarity with negative values clamped to zero."""
    return max(0.0, cosine_similarity(a, b))


def unit_normalize(embeddings: np.ndarray) -> np.ndarray:
    """Return a float64 copy of `embeddings` with unit-norm rows.

    Raises
    ------
    ValueError:
        If any row has zero norm or contains non-finite values.
    """
    matrix = np.array(embeddings, dtype=np.float64, ndmin=2)
    if not np.all(np.isfinite(matrix)):
        row = int(np.flatnonzero(~np.all(np.isfinite(matrix), axis=1))[0])
        raise ValueError("Non-finite embedding component in row {0}".format(row))
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0):
        row = int(np.flatnonzero(norms == 0)[0])
        raise ValueError("degenerate embedding in row {0}".format(row))
    return matrix / norms[:, np.newaxis]


class SimilarityBackend(abc.ABC):
    """Abstract base class for similarity backends.

    A backend serves rows and blocks of the clamped similarity matrix
    ``S[i, j] = max(0, u_i . u_j)`` of a set of unit-normalized
    embeddings, with ``S[i, i] = 1`` exactly.

    Parameters
    ----------
    unit_embeddings
        The n x dim matrix of unit-normalized embeddings.

    Attributes
    ----------
    n: int
        Number of points in the ground set.
    chunk_rows: int
        Largest number of rows processed together; see :meth:`chunks`.
        Chunk boundaries never depend on the number of threads, so
        results do not either.

    Class Attributes
    ----------------
    chunk_rows: int
    """
    chunk_rows = None  # type: int

    def __init__(self, unit_embeddings: np.ndarray) -> None:
        self.unit_embeddings = unit_embeddings
        self.n = unit_embeddings.shape[0]

    @abc.abstractmethod
    def rows(self, indices: np.ndarray) -> np.ndarray:
        """Return a fresh (len(indices), n) array of similarity rows."""
        raise NotImplementedError

    @abc.abstractmethod
    def block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Return the (len(rows), len(cols)) similarity sub-matrix."""
        raise NotImplementedError

    def chunks(self, indices: np.ndarray) -> List[np.ndarray]:
        """Split indices into consecutive runs of at most `chunk_rows`."""
        indices = np.asarray(indices, dtype=np.intp).reshape(-1)
        return [indices[start:start + self.chunk_rows]
                for start in range(0, indices.size, self.chunk_rows)]

    def __repr__(self) -> str:
        return "{0}(n={1})".format(self.__class__.__name__, self.n)


class DenseSimilarity(SimilarityBackend):
    """Backend holding the full |V| x |V| clamped similarity matrix.

    Memory is ``8 |V|^2`` bytes, so it is only built below a cap (see
    :func:`build_backend`).
    """
    chunk_rows = 256

    def __init__(self, unit_embeddings: np.ndarray) -> None:
        super().__init__(unit_embeddings)
        matrix = unit_embeddings.dot(unit_embeddings.T)
        np.clip(matrix, 0.0, 1.0, out=matrix)
        np.fill_diagonal(matrix, 1.0)
        self.matrix = matrix

    def rows(self, indices: np.ndarray) -> np.ndarray:
        return self.matrix[np.asarray(indices, dtype=np.intp)]

    def block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        return self.matrix[np.ix_(np.asarray(rows, dtype=np.intp),
                                  np.asarray(cols, dtype=np.intp))]


class OnTheFlySimilarity(SimilarityBackend):
    """Backend computing similarities on demand.

    Memory stays ``O(|V| dim)``. Rows are computed in fixed blocks
    ``[b * chunk_rows, (b + 1) * chunk_rows)``, whichever rows are asked
    for, so a row has the same bits alone as inside any batch.
    """
    chunk_rows = 32

    def _block_rows(self, block: int) -> np.ndarray:
        start = block * self.chunk_rows
        stop = min(start + self.chunk_rows, self.n)
        rows = self.unit_embeddings[start:stop].dot(self.unit_embeddings.T)
        np.clip(rows, 0.0, 1.0, out=rows)
        rows[np.arange(stop - start), np.arange(start, stop)] = 1.0
        return rows

    def rows(self, indices: np.ndarray) -> np.ndarray:
        indices = np.asarray(indices, dtype=np.intp).reshape(-1)
        rows = np.empty((indices.size, self.n))
        blocks = indices // self.chunk_rows
        for block in np.unique(blocks):
            positions = np.flatnonzero(blocks == block)
            offsets = indices[positions] - block * self.chunk_rows
            rows[positions] = self._block_rows(int(block))[offsets]
        return rows

    def chunks(self, indices: np.ndarray) -> List[np.ndarray]:
        # runs of indices from the same block of rows
        indices = np.asarray(indices, dtype=np.intp).reshape(-1)
        breaks = np.flatnonzero(np.diff(indices // self.chunk_rows)) + 1
        return [chunk for run in np.split(indices, breaks)
                for chunk in SimilarityBackend.chunks(self, run)]

    def block(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.intp)
        cols = np.asarray(cols, dtype=np.intp)
        block = self.unit_embeddings[rows].dot(self.unit_embeddings[cols].T)
        np.clip(block, 0.0, 1.0, out=block)
        block[rows[:, np.newaxis] == cols[np.newaxis, :]] = 1.0
        return block


def build_backend(unit_embeddings: np.ndarray,
                  dense_cap: int = DEFAULT_DENSE_CAP) -> SimilarityBackend:
    """Build a dense backend when |V| <= `dense_cap`, else on-the-fly."""
    n = unit_embeddings.shape[0]
    if n <= dense_cap:
        backend = DenseSimilarity(unit_embeddings)
    else:
        backend = OnTheFlySimilarity(unit_embeddings)
    logger.info("Using %r (dense cap %d)", backend, dense_cap)
    return backend

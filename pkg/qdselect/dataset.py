from dataclasses import dataclass, field
import math
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .similarity import unit_normalize

__all__ = ["DataPoint", "Dataset", "normalize_quality"]


def normalize_quality(raw: Sequence[float]) -> np.ndarray:
    """Min-max normalize raw quality scores to [0, 1].

    Parameters
    ----------
    raw
        Raw quality scores on any scale; at least one entry.

    Returns
    -------
    ndarray:
        ``(x - min) / (max - min)``. If all scores are equal every entry
        maps to 0.0, i.e. no quality signal contributes nothing.

    Raises
    ------
    ValueError:
        If `raw` is empty or has non-finite entries.

    Examples
    --------
    >>> normalize_quality([2, 4, 6])
    array([0. , 0.5, 1. ])
    >>> normalize_quality([5, 5, 5])
    array([0., 0., 0.])
    """
    scores = np.asarray(raw, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("Cannot normalize an empty list of quality scores")
    if not np.all(np.isfinite(scores)):
        raise ValueError("Non-finite quality score at position {0}".format(
            int(np.flatnonzero(~np.isfinite(scores))[0])))
    low, high = scores.min(), scores.max()
    if high == low:
        return np.zeros_like(scores)
    return (scores - low) / (high - low)


@dataclass(frozen=True, eq=False)
class DataPoint:
    """Class to represent a single instruction record

    Parameters
    ----------
    id
        Opaque identifier of the record.
    quality
        Raw quality score, on any scale.
    embedding
        The embedding vector of the instruction.
    text
        The instruction text. May be empty when embeddings are supplied.
    """
    id: str
    quality: float
    embedding: np.ndarray
    text: str = ""

    def __post_init__(self) -> None:
        embedding = np.array(self.embedding, dtype=np.float64)
        embedding.flags.writeable = False
        object.__setattr__(self, "embedding", embedding)
        if not math.isfinite(self.quality):
            raise ValueError("Invalid quality for {0!r}: {1}".format(
                self.id, self.quality))
        if not np.all(np.isfinite(embedding)):
            raise ValueError("Non-finite embedding for {0!r}".format(self.id))

    def __repr__(self) -> str:
        return "{0}({1.id!r}, {1.quality!r}, dim={2})".format(
            self.__class__.__name__, self, self.embedding.size)

    def __eq__(self, other: "DataPoint") -> bool:
        return (self.id == other.id and self.text == other.text and
                self.quality == other.quality and
                np.array_equal(self.embedding, other.embedding))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Class to represent the ground set of candidate records

    The record order is the order given (for files, the on-disk order)
    and every index used by the selectors refers to it.

    Parameters
    ----------
    ids: seq of str
        Unique record identifiers.
    qualities: seq of float
        Raw quality scores.
    embeddings: array_like
        The n x dim embedding matrix, as supplied.
    texts: seq of str, optional
        Instruction texts; empty strings when omitted.

    Attributes
    ----------
    n: int
        Number of records, |V|.
    dim: int
        Embedding dimension.
    normalized_quality: ndarray
        Qualities min-max normalized to [0, 1].
    unit_embeddings: ndarray
        Float64 copy of the embeddings with unit-norm rows.
    points: list of DataPoint
        The records as :class:`DataPoint` objects.

    Examples
    --------
    >>> from qdselect import Dataset
    >>> dataset = Dataset(["a", "b", "c"], [2, 4, 6],
    ...                   [[1, 0], [0, 1], [1, 1]])
    >>> dataset.n, dataset.dim
    (3, 2)
    >>> dataset.normalized_quality
    array([0. , 0.5, 1. ])
    """
    ids: List[str]
    qualities: np.ndarray
    embeddings: np.ndarray
    texts: Optional[List[str]] = None
    normalized_quality: np.ndarray = field(init=False, repr=False)
    unit_embeddings: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        ids = [str(id_) for id_ in self.ids]
        qualities = np.array(self.qualities, dtype=np.float64)
        embeddings = np.array(self.embeddings, ndmin=2)
        if embeddings.dtype.kind not in "fiu":
            raise ValueError("Embeddings must be real numbers")
        texts = ([""] * len(ids) if self.texts is None
                 else [str(text) for text in self.texts])

        if not ids:
            raise ValueError("Dataset must contain at least one record")
        if not len(ids) == qualities.size == embeddings.shape[0] == len(texts):
            raise ValueError(
                "Mismatched record counts: {0} ids, {1} qualities, "
                "{2} embeddings, {3} texts".format(
                    len(ids), qualities.size, embeddings.shape[0], len(texts)))
        seen = set()
        for id_ in ids:
            if id_ in seen:
                raise ValueError("Duplicate record id: {0!r}".format(id_))
            seen.add(id_)

        for array in (qualities, embeddings):
            array.flags.writeable = False
        unit_embeddings = unit_normalize(embeddings)
        unit_embeddings.flags.writeable = False
        normalized_quality = normalize_quality(qualities)
        normalized_quality.flags.writeable = False

        for name, value in [("ids", ids), ("qualities", qualities),
                            ("embeddings", embeddings), ("texts", texts),
                            ("unit_embeddings", unit_embeddings),
                            ("normalized_quality", normalized_quality)]:
            object.__setattr__(self, name, value)

    @classmethod
    def from_points(cls, points: Iterable[DataPoint]) -> "Dataset":
        """Create a Dataset from a sequence of :class:`DataPoint`

        Raises
        ------
        ValueError:
            If the points do not share one embedding dimension.
        """
        points = list(points)
        dims = {point.embedding.size for point in points}
        if len(dims) > 1:
            raise ValueError("Inconsistent embedding dimensions: {0}".format(
                sorted(dims)))
        return cls([point.id for point in points],
                   [point.quality for point in points],
                   np.array([point.embedding for point in points]),
                   [point.text for point in points])

    @classmethod
    def from_jsonl(cls,
                   filepath: str,
                   embeddings_path: Optional[str] = None
                   ) -> "Dataset":
        """Create a Dataset from a JSONL file and optional embedding file

        See :func:`qdselect.io.jsonl.load_jsonl` for the format and the
        errors raised.
        """
        from .io.jsonl import load_jsonl
        return load_jsonl(filepath, embeddings_path)

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    @property
    def points(self) -> List[DataPoint]:
        return [DataPoint(id_, float(quality), embedding, text)
                for id_, quality, embedding, text
                in zip(self.ids, self.qualities, self.embeddings, self.texts)]

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return "{0}(n={1.n}, dim={1.dim})".format(self.__class__.__name__, self)

    def check_indices(self, indices: Iterable[int]) -> np.ndarray:
        """Validate a subset of record indices.

        Returns
        -------
        ndarray:
            The indices as an integer array, in the order given.

        Raises
        ------
        IndexError:
            If any index is outside ``[0, n)``.
        ValueError:
            If any index is repeated.
        """
        subset = np.asarray(list(indices), dtype=np.int64).reshape(-1)
        out_of_range = (subset < 0) | (subset >= self.n)
        if np.any(out_of_range):
            raise IndexError("Invalid index {0} for dataset of size {1}".format(
                int(subset[out_of_range][0]), self.n))
        if np.unique(subset).size != subset.size:
            raise ValueError("Duplicate indices in subset")
        return subset

"""Quality and diversity of selected subsets, and the alpha sweep."""

from dataclasses import dataclass
import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .config import SelectionConfig
from .dataset import Dataset
from .facility_location import fl_score
from .selectors import select
from .similarity import SimilarityBackend, build_backend

__all__ = ["TradeoffPoint", "subset_metrics", "sweep_alpha",
           "random_baseline", "RANDOM_ALGORITHM"]

logger = logging.getLogger(__name__)

RANDOM_ALGORITHM = "random"


@dataclass(frozen=True)
class TradeoffPoint:
    """Quality and diversity of one selection

    Attributes
    ----------
    alpha: float
        Tradeoff used for the selection; NaN for the random baseline.
    diversity: float
        Normalized facility-location score of the selection.
    mean_quality: float
        Mean normalized quality of the selection.
    k_select: int
    algorithm: str
        Selection algorithm, or ``"random"``.
    seed: int
    """
    alpha: float
    diversity: float
    mean_quality: float
    k_select: int
    algorithm: str
    seed: int

    def __post_init__(self) -> None:
        for name in ("diversity", "mean_quality"):
            value = getattr(self, name)
            if not 0 <= value <= 1 + 1e-9:
                raise ValueError("Invalid {0}: {1}".format(name, value))


def subset_metrics(dataset: Dataset,
                   subset: Iterable[int],
                   backend: Optional[SimilarityBackend] = None
                   ) -> Tuple[float, float]:
    """Calculate the diversity and mean quality of a subset.

    Returns
    -------
    diversity: float
        :func:`~qdselect.facility_location.fl_score` of the subset.
    mean_quality: float
        Mean normalized quality, 0.0 for an empty subset.

    Raises
    ------
    IndexError:
        If an index is out of range.
    ValueError:
        If an index is repeated.
    """
    subset = dataset.check_indices(subset)
    diversity = fl_score(dataset, subset, backend)
    if subset.size == 0:
        return diversity, 0.0
    return diversity, float(dataset.normalized_quality[subset].mean())


def sweep_alpha(dataset: Dataset,
                alphas: Sequence[float],
                base_config: SelectionConfig,
                backend: Optional[SimilarityBackend] = None,
                threads: Optional[int] = None
                ) -> List[TradeoffPoint]:
    """Run one selection per alpha and report its quality and diversity.

    Every run uses the algorithm, K and seed of `base_config` and shares
    one similarity backend.

    Parameters
    ----------
    dataset
        The ground set.
    alphas
        Tradeoff values in [0, 1]; at least one.
    base_config
        Configuration of every run except for its alpha.
    backend
        Similarity backend; built once for all runs when omitted.
    threads
        Threads for gain evaluation.

    Returns
    -------
    list of TradeoffPoint
        One point per alpha, in the order given.
    """
    alphas = list(alphas)
    if not alphas:
        raise ValueError("At least one alpha is required")
    if backend is None:
        backend = build_backend(dataset.unit_embeddings)
    points = []
    for alpha in alphas:
        result = select(dataset, base_config.replace(alpha=float(alpha)),
                        backend, threads)
        points.append(TradeoffPoint(float(alpha), result.diversity,
                                    result.mean_quality, len(result),
                                    base_config.algorithm, base_config.seed))
        logger.info("alpha=%g: diversity %.6f, mean quality %.6f", alpha,
                    result.diversity, result.mean_quality)
    return points


def random_baseline(dataset: Dataset,
                    k_select: int,
                    seed: int = 0,
                    backend: Optional[SimilarityBackend] = None
                    ) -> TradeoffPoint:
    """Report the quality and diversity of a uniformly random subset.

    Raises
    ------
    ValueError:
        If `k_select` exceeds the dataset size.
    """
    if k_select < 1:
        raise ValueError("Invalid k_select: {0}".format(k_select))
    if k_select > dataset.n:
        raise ValueError("k_select {0} exceeds dataset size {1}".format(
            k_select, dataset.n))
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    subset = rng.choice(dataset.n, size=k_select, replace=False)
    diversity, mean_quality = subset_metrics(dataset, subset, backend)
    return TradeoffPoint(float("nan"), diversity, mean_quality, k_select,
                         RANDOM_ALGORITHM, seed)

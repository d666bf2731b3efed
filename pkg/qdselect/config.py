"""Selection parameters and the result of a selection run."""

from dataclasses import dataclass, asdict
import math
from typing import Any, Dict, Sequence, Tuple, TYPE_CHECKING

if TYPE_CHECKING:
    from .facility_location import CoverageState

__all__ = ["SelectionConfig", "SelectionResult", "ALGORITHMS",
           "DEFAULT_EPSILON", "DEFAULT_TAU", "DEFAULT_N_CLUSTERS",
           "DEFAULT_KMEANS_MAX_ITERS"]

ALGORITHMS = ("greedy", "lazy", "stochastic", "lazy_stochastic",
              "cluster", "threshold")

DEFAULT_EPSILON = 0.01
DEFAULT_TAU = 0.5
DEFAULT_N_CLUSTERS = 100
DEFAULT_KMEANS_MAX_ITERS = 100


@dataclass(frozen=True)
class SelectionConfig:
    """Parameters of one selection run

    Parameters
    ----------
    alpha: float
        Quality/diversity tradeoff in [0, 1]; 0 is pure diversity,
        1 is pure quality.
    k_select: int
        Number of records to select, K.
    algorithm: str
        One of :data:`ALGORITHMS`.
    epsilon: float
        Sampling accuracy of the stochastic algorithms, in (0, 1).
    tau: float
        Similarity threshold of the threshold variant, in [0, 1].
    n_clusters: int
        Number of k-means clusters of the cluster variant.
    seed: int
        Unsigned 64-bit seed for every random choice of the run.
    kmeans_max_iters: int
        Iteration cap for k-means.

    Raises
    ------
    ValueError:
        If any parameter is outside its range.

    Examples
    --------
    >>> from qdselect import SelectionConfig
    >>> config = SelectionConfig(alpha=0.7, k_select=3000, algorithm="lazy")
    >>> config.tau, config.n_clusters
    (0.5, 100)
    """
    alpha: float
    k_select: int
    algorithm: str = "lazy"
    epsilon: float = DEFAULT_EPSILON
    tau: float = DEFAULT_TAU
    n_clusters: int = DEFAULT_N_CLUSTERS
    seed: int = 0
    kmeans_max_iters: int = DEFAULT_KMEANS_MAX_ITERS

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError("Invalid algorithm: {0!r} (expected one of "
                             "{1})".format(self.algorithm, ", ".join(ALGORITHMS)))
        checks = [
            ("alpha", self.alpha, 0 <= self.alpha <= 1),
            ("k_select", self.k_select, self.k_select >= 1),
            ("epsilon", self.epsilon, 0 < self.epsilon < 1),
            ("tau", self.tau, 0 <= self.tau <= 1),
            ("n_clusters", self.n_clusters, self.n_clusters >= 1),
            ("seed", self.seed, 0 <= self.seed < 2 ** 64),
            ("kmeans_max_iters", self.kmeans_max_iters,
             self.kmeans_max_iters >= 1),
        ]
        for name, value, is_valid in checks:
            if not is_valid:
                raise ValueError("Invalid {0}: {1}".format(name, value))
        for name in ("k_select", "n_clusters", "seed", "kmeans_max_iters"):
            if int(getattr(self, name)) != getattr(self, name):
                raise ValueError("Invalid {0}: {1}".format(
                    name, getattr(self, name)))

    def to_dict(self) -> Dict[str, Any]:
        """The parameters relevant to the configured algorithm."""
        params = {"alpha": self.alpha, "algorithm": self.algorithm,
                  "k": self.k_select, "seed": self.seed}
        if self.algorithm in ("stochastic", "lazy_stochastic"):
            params["epsilon"] = self.epsilon
        elif self.algorithm == "threshold":
            params["tau"] = self.tau
        elif self.algorithm == "cluster":
            params["n_clusters"] = self.n_clusters
        return params

    def replace(self, **changes: Any) -> "SelectionConfig":
        params = asdict(self)
        params.update(changes)
        return SelectionConfig(**params)


@dataclass(frozen=True)
class SelectionResult:
    """The outcome of a selection run

    Attributes
    ----------
    selected: tuple of int
        Dataset indices in selection order.
    objective_trace: tuple of float
        Entry t is the quality-diversity gain of the t-th pick.
    diversity: float
        Facility-location score of the selected set, normalized by |V|.
    mean_quality: float
        Mean normalized quality of the selected set.
    config: SelectionConfig
        The configuration of the run.
    truncated: bool
        True when fewer than K records were selected (threshold variant).
    evaluations: int
        Number of exact gain evaluations performed.
    """
    selected: Tuple[int, ...]
    objective_trace: Tuple[float, ...]
    diversity: float
    mean_quality: float
    config: SelectionConfig
    truncated: bool = False
    evaluations: int = 0

    def __post_init__(self) -> None:
        if len(set(self.selected)) != len(self.selected):
            raise ValueError("Duplicate indices in selection")
        if len(self.selected) != len(self.objective_trace):
            raise ValueError("Trace length {0} does not match {1} selected "
                             "records".format(len(self.objective_trace),
                                              len(self.selected)))
        if not self.truncated and len(self.selected) != self.config.k_select:
            raise ValueError("Selected {0} records, expected {1}".format(
                len(self.selected), self.config.k_select))
        if not (math.isfinite(self.diversity) and
                math.isfinite(self.mean_quality)):
            raise ValueError("Non-finite selection metrics")

    def __len__(self) -> int:
        return len(self.selected)

    @classmethod
    def from_state(cls,
                   state: "CoverageState",
                   config: SelectionConfig,
                   objective_trace: Sequence[float],
                   truncated: bool = False,
                   evaluations: int = 0
                   ) -> "SelectionResult":
        """Create a SelectionResult from the final state of a run."""
        selected = tuple(int(index) for index in state.selected)
        quality = state.dataset.normalized_quality
        mean_quality = (float(quality[list(selected)].mean())
                        if selected else 0.0)
        return cls(selected, tuple(float(gain) for gain in objective_trace),
                   state.diversity, mean_quality, config,
                   truncated, evaluations)

import importlib.resources
import json
from typing import Any, Dict, List

from .config import SelectionConfig

__all__ = ["Preset", "alpha_grid"]


def _load_presets_data() -> Dict[str, Any]:
    """Load the packaged preset file."""
    json_string = (importlib.resources.files(__package__)
                   .joinpath("static/presets.json").read_text())
    return json.loads(json_string)


def alpha_grid() -> List[float]:
    """Return the default alpha values of a tradeoff sweep.

    >>> alpha_grid()
    [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0]
    """
    return list(_load_presets_data()["alpha_grid"])


class Preset:
    """Class to represent a published selection configuration.

    Parameters
    ----------
    name: str
        Name of the preset, one of :meth:`Preset.names`.

    Attributes
    ----------
    name: str
    alpha: float
        The tradeoff used for this dataset and budget.
    k_select: int
        The selection budget.
    description: str
        The kind of dataset the preset was tuned on.

    Examples
    --------
    >>> from qdselect import Preset
    >>> preset = Preset("alpaca-3k")
    >>> preset.alpha, preset.k_select
    (0.7, 3000)
    >>> preset.to_config(algorithm="stochastic").epsilon
    0.01
    """

    def __init__(self, name: str) -> None:
        presets = _load_presets_data()["presets"]
        if name not in presets:
            raise ValueError("Unknown preset: {0!r} (expected one of "
                             "{1})".format(name, ", ".join(sorted(presets))))
        self.name = name
        self.alpha = float(presets[name]["alpha"])
        self.k_select = int(presets[name]["k_select"])
        self.description = presets[name]["description"]

    def __repr__(self) -> str:
        return "{0}({1!r})".format(self.__class__.__name__, self.name)

    @staticmethod
    def names() -> List[str]:
        """Names of all packaged presets, sorted."""
        return sorted(_load_presets_data()["presets"])

    def to_config(self, **overrides: Any) -> SelectionConfig:
        """Create a SelectionConfig with the preset's alpha and budget."""
        params = {"alpha": self.alpha, "k_select": self.k_select}
        params.update(overrides)
        return SelectionConfig(**params)

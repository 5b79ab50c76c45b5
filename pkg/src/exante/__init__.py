"""Distributions of ex ante returns and willingness-to-pay from
probabilistic stated-choice data, via distribution regression."""

__version__ = "0.1.0"

from .curves import Band, ReturnsCurve, SGrid, sup_distance
from .dataset import (
    ChoiceRecord,
    Dataset,
    Scenario,
    SupportSpec,
    load_dataset,
    validate,
)
from .dr import DesignMap, DRModel, ThresholdGrid, fit_dr, rearrange

__all__ = [
    "Band",
    "ChoiceRecord",
    "DRModel",
    "Dataset",
    "DesignMap",
    "ReturnsCurve",
    "SGrid",
    "Scenario",
    "SupportSpec",
    "ThresholdGrid",
    "fit_dr",
    "load_dataset",
    "rearrange",
    "sup_distance",
    "validate",
    "__version__",
]

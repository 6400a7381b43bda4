"""Information-gain driven subgroup discovery."""

from .dataset import (DataError, Dataset, Op, Selector, TargetSpec, load_csv, ovr_passes,
                      resolve_target, selector_universe)
from .measures import Confusion, PatternStats, SetStats, UndefinedMeasureError
from .pipeline import RunResult, run
from .search import SearchConfig

__version__ = "0.1.0"

__all__ = [
    "Confusion", "DataError", "Dataset", "Op", "PatternStats", "RunResult", "SearchConfig",
    "Selector", "SetStats", "TargetSpec", "UndefinedMeasureError", "load_csv", "ovr_passes",
    "resolve_target", "run", "selector_universe",
]

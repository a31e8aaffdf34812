# Base models
from .base import ArrayModel, as_float_array

# Dataset models
from .dataset import QueryGroup, Dataset, FoldSplit, SyntheticSpec

# Network models
from .network import Activation, Architecture, LayerSpec, Mode, architecture_layers

# Ranking / loss models
from .ranking import (
    GradientStrategy, TwinSigmoidSpec, PairwiseState, RankVector,
    LossFamily, LossSpec, LossOutput
)

# Report models
from .reports import (
    EvalReport, EpochRecord, QueryMetrics, RankExperimentRow, METRIC_NAMES, metric_key
)

# Run configuration
from .run import RunConfig

__all__ = [
    # Base
    "ArrayModel", "as_float_array",

    # Dataset
    "QueryGroup", "Dataset", "FoldSplit", "SyntheticSpec",

    # Network
    "Activation", "Architecture", "LayerSpec", "Mode", "architecture_layers",

    # Ranking
    "GradientStrategy", "TwinSigmoidSpec", "PairwiseState", "RankVector",
    "LossFamily", "LossSpec", "LossOutput",

    # Reports
    "EvalReport", "EpochRecord", "QueryMetrics", "RankExperimentRow", "METRIC_NAMES", "metric_key",

    # Run
    "RunConfig",
]

"""Graph node classification with node-feature convolution.

The pipeline: sample a fixed-bandwidth neighborhood per node, convolve
the resulting D x n feature map into a first-level representation, then
propagate through mean-aggregation GCN layers and a softmax classifier,
trained end-to-end with Adam and early stopping.
"""

from .errors import DataError, NumericError
from .graph import (
    DegreeStats,
    Graph,
    NormalizedAdjacency,
    build_graph,
    degree_stats,
    mean_aggregation_matrix,
    normalize_adjacency,
)
from .datasets import (
    ParsedDataset,
    SplitSpec,
    load_canonical,
    make_split,
    parse_linqs,
    save_canonical,
)
from .sampling import (
    FeatureMap,
    FeatureMapBatch,
    SampledNeighborhood,
    build_feature_map,
    sample_all,
    sample_neighborhood,
)
from .ops import ConvSpec, ParamTensor
from .model import (
    ModelParams,
    ModelSpec,
    build_inputs,
    init_params,
    load_checkpoint,
    model_backward,
    model_forward,
    predict,
    save_checkpoint,
)
from .training import AdamState, EpochRecord, RunConfig, RunResult, adam_step, \
    evaluate, train
from .gradcheck import GradCheckReport, check_model, finite_diff_grad

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "ConvSpec",
    "DataError",
    "DegreeStats",
    "EpochRecord",
    "FeatureMap",
    "FeatureMapBatch",
    "GradCheckReport",
    "Graph",
    "ModelParams",
    "ModelSpec",
    "NormalizedAdjacency",
    "NumericError",
    "ParamTensor",
    "ParsedDataset",
    "RunConfig",
    "RunResult",
    "SampledNeighborhood",
    "SplitSpec",
    "adam_step",
    "build_feature_map",
    "build_graph",
    "build_inputs",
    "check_model",
    "degree_stats",
    "evaluate",
    "finite_diff_grad",
    "init_params",
    "load_canonical",
    "load_checkpoint",
    "make_split",
    "mean_aggregation_matrix",
    "model_backward",
    "model_forward",
    "normalize_adjacency",
    "parse_linqs",
    "predict",
    "sample_all",
    "sample_neighborhood",
    "save_canonical",
    "save_checkpoint",
    "train",
]

"""leafsv: conditional Shapley attributions for tree ensembles.

Three reduced-predictor estimators (path-dependent, discrete plug-in, and
leaf-projection), an exact subset-enumeration engine, and a per-leaf game
decomposition whose cost scales with tree depth instead of feature count.
"""

from .cart import fit_cart, fit_forest
from .data import (
    Between,
    Dataset,
    EqualTo,
    FeatureMeta,
    PlayerPartition,
    count_region,
    decode_indicators,
    encode_categorical,
    load_dataset,
    parse_schema,
    quantile_discretize,
)
from .engine import (
    SVReport,
    brute_force_batch,
    brute_force_sv,
    coalition_sv_categorical,
    global_importance,
    multi_games_batch,
    multi_games_sv,
    multi_games_weight,
    shapley_kernel,
)
from .estimators import ReducedValue, discrete_reduced, leaf_reduced, shap_reduced
from .exceptions import (
    ConfigError,
    DatasetError,
    DegenerateQueryError,
    LeafSVError,
    ModelParseError,
    ModelValidationError,
    UnsupportedConditioningError,
)
from .fixtures import demo_model, demo_model_document
from .metrics import MetricReport, r_ae, tpr
from .trees import (
    LeafRegion,
    Tree,
    TreeEnsemble,
    TreeNode,
    dump_model,
    parse_model,
    transform_thresholds,
)

__version__ = "0.1.0"

__all__ = [
    "Between",
    "ConfigError",
    "Dataset",
    "DatasetError",
    "DegenerateQueryError",
    "EqualTo",
    "FeatureMeta",
    "LeafRegion",
    "LeafSVError",
    "MetricReport",
    "ModelParseError",
    "ModelValidationError",
    "PlayerPartition",
    "ReducedValue",
    "SVReport",
    "Tree",
    "TreeEnsemble",
    "TreeNode",
    "UnsupportedConditioningError",
    "brute_force_batch",
    "brute_force_sv",
    "coalition_sv_categorical",
    "count_region",
    "decode_indicators",
    "demo_model",
    "demo_model_document",
    "discrete_reduced",
    "dump_model",
    "encode_categorical",
    "fit_cart",
    "fit_forest",
    "global_importance",
    "leaf_reduced",
    "load_dataset",
    "multi_games_batch",
    "multi_games_sv",
    "multi_games_weight",
    "parse_model",
    "parse_schema",
    "quantile_discretize",
    "r_ae",
    "shap_reduced",
    "shapley_kernel",
    "tpr",
    "transform_thresholds",
]

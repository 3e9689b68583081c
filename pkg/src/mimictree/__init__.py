"""Linear model trees that mimic a black-box regressor.

The pipeline ingests event tables (:mod:`mimictree.dataset`), asks a
teacher for soft labels (:mod:`mimictree.mimic`), grows and prunes a tree
whose leaves are linear models (:mod:`mimictree.tree`) using one of four
threshold heuristics (:mod:`mimictree.breakpoint`), and reads the result
back as importances, rules and graphs (:mod:`mimictree.interpret`).
"""
from .breakpoint import (GMMConfig, SegmentedConfig, SplitCandidate, best_split_gmm,
                         best_split_segmented, best_split_ttest, best_split_variance)
from .dataset import (Dataset, FeatureSpec, NormStats, Schema, apply_norm, lag_expand, load_csv,
                      load_schema, normalize, split_train_test)
from .estimator import LinearModelTreeRegressor
from .exceptions import (AugmentationError, ConfigError, DataError, LevelError, MimicTreeError,
                         OracleError, SchemaError)
from .interpret import ImportanceTable, Rule, export_graph, extract_rules, feature_importance
from .mimic import (AlignedFileOracle, AugmentationPlan, FidelityReport, SubprocessOracle,
                    action_replace, compute_impact, fidelity, null_model, query_oracle)
from .tree import (GrowthConfig, LeafModel, ModelTree, Node, PruneConfig, fit_leaf, grow,
                   load_tree, node_loss, predict, predict_batch, prune, save_tree)

__version__ = "0.1.0"

__all__ = [
    "AlignedFileOracle", "AugmentationError", "AugmentationPlan", "ConfigError", "DataError",
    "Dataset", "FeatureSpec", "FidelityReport", "GMMConfig", "GrowthConfig", "ImportanceTable",
    "LeafModel", "LevelError", "LinearModelTreeRegressor", "MimicTreeError", "ModelTree", "Node",
    "NormStats", "OracleError", "PruneConfig", "Rule", "Schema", "SchemaError", "SegmentedConfig",
    "SplitCandidate", "SubprocessOracle", "action_replace", "apply_norm", "best_split_gmm",
    "best_split_segmented", "best_split_ttest", "best_split_variance", "compute_impact",
    "export_graph", "extract_rules", "feature_importance", "fidelity", "fit_leaf", "grow",
    "lag_expand", "load_csv", "load_schema", "load_tree", "node_loss", "normalize", "null_model",
    "predict", "predict_batch", "prune", "query_oracle", "save_tree", "split_train_test",
]

"""Anomalous node detection in weighted directed networks."""
__version__ = "0.1.0"

from .graph import GraphError, GroundTruth, WeightedDigraph, load_edge_list, load_ground_truth  # noqa: E402
from .generators import generate_accenture, generate_weighted_er, plant_anomalies, training_grid  # noqa: E402
from .combine import FEATURE_NAMES, FeatureMatrix, RegressionForest, feature_sum  # noqa: E402
from .metrics import average_precision, precision_recall_at  # noqa: E402
from .oddball import oddball_scores  # noqa: E402
from .pipeline import PipelineConfig, compute_features, run_detect, run_evaluate, run_train  # noqa: E402

__all__ = [
    "FEATURE_NAMES", "FeatureMatrix", "GraphError", "GroundTruth", "PipelineConfig", "RegressionForest",
    "WeightedDigraph", "average_precision", "compute_features", "feature_sum", "generate_accenture",
    "generate_weighted_er", "load_edge_list", "load_ground_truth", "oddball_scores", "plant_anomalies",
    "precision_recall_at", "run_detect", "run_evaluate", "run_train", "training_grid",
]

"""Direct-demand metro station ridership modelling."""

from .diagnostics import add_hub_dummy, flag_influential, influence_measures
from .features import FEATURE_COLUMNS, FeatureMatrix, assemble_feature_matrix
from .network import betweenness_centrality, build_graph, degree_centrality, distance_to_center
from .regress import DesignMatrix, OlsFit, aic, fit_ols, predict
from .selection import backward_stepwise, cross_validated_r2

__all__ = [
    "DesignMatrix",
    "FEATURE_COLUMNS",
    "FeatureMatrix",
    "OlsFit",
    "add_hub_dummy",
    "aic",
    "assemble_feature_matrix",
    "backward_stepwise",
    "betweenness_centrality",
    "build_graph",
    "cross_validated_r2",
    "degree_centrality",
    "distance_to_center",
    "fit_ols",
    "flag_influential",
    "influence_measures",
    "predict",
]

__version__ = "0.1.0"

"""Forecasting on variable subsets.

A wrapper around any forecast model for the setting where only a fraction
of the trained variables is observed at inference time: retrieve training
windows that match the observed variables, splice them into full-variable
inputs, and combine the resulting forecasts with distance- or
forecast-discrepancy-based weights.
"""

from .dataset import (
    Instance,
    Normalizer,
    RawSeries,
    SplitSpec,
    apply_normalizer,
    fit_normalizer,
    load_csv,
    make_windows,
    scale_values,
    split_chronological,
)
from .ensemble import (
    EnsembleConfig,
    WeightVector,
    ddw_weights,
    ensemble_forecast,
    fdw_weights,
    forecast_distance,
    uniform_weights,
)
from .evaluation import (
    EvalReport,
    ExperimentSettings,
    delta_vs_oracle,
    ideal_neighbor_mrr,
    mae,
    optimal_neighbor_rank,
    rmse,
    run_experiment,
    weighting_mrr,
)
from .forecast import (
    CoupledLinearModel,
    ForecastMatrix,
    ForecastModel,
    HistoryMeanModel,
    PersistenceModel,
    RidgeARModel,
    make_model,
    oracle_forecast,
    partial_forecast,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .retrieval import (
    NeighborSet,
    RetrievalCorpus,
    splice_instance,
    subset_distance,
    top_m_neighbors,
)
from .scalable_index import (
    QueryTable,
    ThresholdVector,
    build_query_table,
    calibrate_thresholds,
    iterative_retrieve,
    range_candidates,
)
from .subset import (
    ClusterAssignment,
    CorrelationDistanceMatrix,
    SubsetMask,
    correlation_distance,
    dbscan_clusters,
    sample_correlated_subset,
    sample_random_subset,
    spearman_matrix,
)

__version__ = "0.1.0"

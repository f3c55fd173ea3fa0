"""Dense and sparse DTW, SoftDTW and 1-NN classification."""

from .dtw import (
    WarpingPath,
    cost_matrix,
    dtw,
    dtw_brute_force,
    dtw_distance,
    path_cost,
    soft_dtw,
    softmin,
    track_dp_allocations,
    warp_map,
)
from .knn import KnnResult, knn_classify, pairwise_distances
from .sparse import (
    SignalFeatures,
    SparseAlignment,
    align_features,
    align_sparse,
    compute_features,
    dense_dtw_map,
    dense_map_from_pairs,
    model_outputs,
)

__all__ = [
    "KnnResult",
    "SignalFeatures",
    "SparseAlignment",
    "WarpingPath",
    "align_features",
    "align_sparse",
    "compute_features",
    "cost_matrix",
    "dense_dtw_map",
    "dense_map_from_pairs",
    "dtw",
    "dtw_brute_force",
    "dtw_distance",
    "knn_classify",
    "model_outputs",
    "pairwise_distances",
    "path_cost",
    "soft_dtw",
    "softmin",
    "track_dp_allocations",
    "warp_map",
]

"""Datasets, perturbations and experiment drivers."""

from .data import (
    BLUR_SIGMA,
    JITTER_SIGMA,
    DatasetError,
    LabeledDataset,
    global_seed,
    load_any,
    load_dataset,
    load_ucr_split,
    load_ucr_tsv,
    perturb,
    resample,
    save_dataset,
    save_ucr_tsv,
)
from .experiments import (
    METHODS,
    REPORT_COLUMNS,
    BenchReport,
    alignment_quality,
    benchmark_runtime,
    classify,
    degradation,
    expected_dp_cells,
    robustness,
    run_classification,
    warped_prototype_benchmark,
)

__all__ = [
    "BLUR_SIGMA",
    "BenchReport",
    "DatasetError",
    "JITTER_SIGMA",
    "LabeledDataset",
    "METHODS",
    "REPORT_COLUMNS",
    "alignment_quality",
    "benchmark_runtime",
    "classify",
    "degradation",
    "expected_dp_cells",
    "global_seed",
    "load_any",
    "load_dataset",
    "load_ucr_split",
    "load_ucr_tsv",
    "perturb",
    "resample",
    "robustness",
    "run_classification",
    "save_dataset",
    "save_ucr_tsv",
    "warped_prototype_benchmark",
]

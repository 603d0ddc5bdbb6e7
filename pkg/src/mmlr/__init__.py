"""Multiple-model linear regression for large numeric datasets.

Partitions a dataset into disjoint row groups, each fitted by its own
linear model, using sampling-size and hypercube-edge planning to keep
model construction time linear in the dataset size.
"""

from .dataset import Dataset, RowIndexSet, center, load_csv, subset_view, write_csv
from .driver import (MmlrConfig, ModelEntry, ModelSet, predict, predict_batch,
                     run_mmlr, training_mse, validate_partition)
from .errors import (CsvFormatError, EmptyLive, MmlrError, NoInteriorSeed,
                     SingularDesign, TooFewRows)
from .estimator import MMLRRegressor
from .evaluate import (EvalReport, ScalingResult, compare_methods, plot_data_csv,
                       reports_to_csv, rmse_mae, scaling_benchmark, train_test_split)
from .linalg import (LinearModel, estimate_noise_variance, f_test_pvalue,
                     f_upper_tail, normal_cdf, normal_quantile, ols_fit,
                     regularized_incomplete_beta, residual_variance)
from .sampling import (Hypercube, SampleSizePlan, fit_direct_sample,
                       fit_grouped_average, plan_edge_length, plan_sample_size,
                       select_subset, size_floor)
from .synth import (RegimeSpec, SynthSpec, generate, oracle_best_partition,
                    oracle_ols_1d, truth_to_dict)
from .validate import (CoverageResult, chebyshev_norm_simulation,
                       coverage_simulation, tiny_delta_simulation)

__version__ = "0.1.0"

__all__ = [
    "Dataset", "RowIndexSet", "center", "load_csv", "subset_view", "write_csv",
    "MmlrConfig", "ModelEntry", "ModelSet", "predict", "predict_batch",
    "run_mmlr", "training_mse", "validate_partition",
    "CsvFormatError", "EmptyLive", "MmlrError", "NoInteriorSeed",
    "SingularDesign", "TooFewRows",
    "MMLRRegressor",
    "EvalReport", "ScalingResult", "compare_methods", "plot_data_csv",
    "reports_to_csv", "rmse_mae", "scaling_benchmark", "train_test_split",
    "LinearModel", "estimate_noise_variance", "f_test_pvalue", "f_upper_tail",
    "normal_cdf", "normal_quantile", "ols_fit", "regularized_incomplete_beta",
    "residual_variance",
    "Hypercube", "SampleSizePlan", "fit_direct_sample", "fit_grouped_average",
    "plan_edge_length", "plan_sample_size", "select_subset", "size_floor",
    "RegimeSpec", "SynthSpec", "generate", "oracle_best_partition",
    "oracle_ols_1d", "truth_to_dict",
    "CoverageResult", "chebyshev_norm_simulation", "coverage_simulation",
    "tiny_delta_simulation",
    "__version__",
]

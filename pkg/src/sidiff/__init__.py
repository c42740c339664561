"""Simulation and rate inference for a logistic growth diffusion.

A bounded growth process on (0, K) driven by a time-varying
transmission intensity and a time-varying noise intensity.  The
package provides its exact transition law, exact path simulation, a
moment-based estimator of both intensity curves, a homogeneous-rates
maximum likelihood baseline, and a replicated-experiment harness with
CSV reporting.
"""

from ._version import __version__
from .rates import (
    RateFunction,
    RatePair,
    adaptive_simpson,
    check_window,
    constant,
    sinusoid,
    exp_saturating,
    tabulated,
    evaluate,
    integrate,
    increment_table,
    rate_to_dict,
    rate_from_dict,
    pair_to_dict,
    pair_from_dict,
)
from .model import (
    DegenerateTimeError,
    TransitionLaw,
    deterministic_solution,
    threshold_time,
    x_to_y,
    y_to_x,
    infinitesimal_moments,
    transition_pdf,
    transition_cdf,
    conditional_median,
    conditional_moment,
)
from .simulate import TimeGrid, PathSet, derive_path_seed, simulate_exact, simulate_em
from .estimate import (
    SplineCurve,
    EstimateResult,
    transform_paths,
    sample_mean,
    sample_lag_cov,
    fit_moment_curves,
    estimate_pipeline,
    mle_homogeneous,
    log_likelihood,
)
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    run_experiment,
    mre,
    mre_curves,
    pointwise_band,
    boxplot_stats,
    standardize,
    kde,
    case_rates,
    case_config,
    table1_config,
    homogeneous_error_rows,
)
from .dataio import (
    RawSeriesTable,
    AnalysisConfig,
    config_hash,
    metadata_line,
    save_paths,
    load_paths,
    save_estimate,
    write_table1,
    write_bands,
    write_boxplot,
    write_kde,
    load_csv,
    restrict_window,
    cumulate_normalize,
    suggest_K,
    analyze_series,
)

__all__ = [
    "__version__",
    "RateFunction",
    "RatePair",
    "adaptive_simpson",
    "check_window",
    "constant",
    "sinusoid",
    "exp_saturating",
    "tabulated",
    "evaluate",
    "integrate",
    "increment_table",
    "rate_to_dict",
    "rate_from_dict",
    "pair_to_dict",
    "pair_from_dict",
    "DegenerateTimeError",
    "TransitionLaw",
    "deterministic_solution",
    "threshold_time",
    "x_to_y",
    "y_to_x",
    "infinitesimal_moments",
    "transition_pdf",
    "transition_cdf",
    "conditional_median",
    "conditional_moment",
    "TimeGrid",
    "PathSet",
    "derive_path_seed",
    "simulate_exact",
    "simulate_em",
    "SplineCurve",
    "EstimateResult",
    "transform_paths",
    "sample_mean",
    "sample_lag_cov",
    "fit_moment_curves",
    "estimate_pipeline",
    "mle_homogeneous",
    "log_likelihood",
    "ExperimentConfig",
    "ExperimentReport",
    "run_experiment",
    "mre",
    "mre_curves",
    "pointwise_band",
    "boxplot_stats",
    "standardize",
    "kde",
    "case_rates",
    "case_config",
    "table1_config",
    "homogeneous_error_rows",
    "RawSeriesTable",
    "AnalysisConfig",
    "save_paths",
    "load_paths",
    "save_estimate",
    "write_table1",
    "write_bands",
    "write_boxplot",
    "write_kde",
    "load_csv",
    "config_hash",
    "metadata_line",
    "restrict_window",
    "cumulate_normalize",
    "suggest_K",
    "analyze_series",
]

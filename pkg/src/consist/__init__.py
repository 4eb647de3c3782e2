"""Consistency screening for 5-point subjective score data.

Fits discrete score models on a parameter grid, scores fit quality with
a parametric-bootstrap G-test per stimulus, and summarizes a whole
experiment as a p-value P-P plot with a significance band.
"""

from .models import (
    ProbabilityGrid,
    build_grid,
    default_gsd_grid,
    default_qnormal_grid,
    gsd_pmf,
    gsd_variance_bounds,
    qnormal_pmf,
    step_axis,
    validate_pmf,
)
from .inference import (
    GofResult,
    bootstrap_p_value,
    fit_mle,
    g_statistic,
    log_likelihood,
    sample_counts,
    stimulus_gof,
    stimulus_seed,
)
from .ppplot import PPSeries, build_series, ecdf_points, render_ppplot, significance_band
from .dataio import (
    FormatError,
    read_grid,
    read_responses,
    read_results,
    write_grid,
    write_results,
)
from .runner import RunSpec, merge_results, partition, run_scenario, select_sample

__version__ = "0.1.0"

__all__ = [
    "FormatError",
    "GofResult",
    "PPSeries",
    "ProbabilityGrid",
    "RunSpec",
    "bootstrap_p_value",
    "build_grid",
    "build_series",
    "default_gsd_grid",
    "default_qnormal_grid",
    "ecdf_points",
    "fit_mle",
    "g_statistic",
    "gsd_pmf",
    "gsd_variance_bounds",
    "log_likelihood",
    "merge_results",
    "partition",
    "qnormal_pmf",
    "read_grid",
    "read_responses",
    "read_results",
    "render_ppplot",
    "run_scenario",
    "sample_counts",
    "select_sample",
    "significance_band",
    "step_axis",
    "stimulus_gof",
    "stimulus_seed",
    "validate_pmf",
    "write_grid",
    "write_results",
]

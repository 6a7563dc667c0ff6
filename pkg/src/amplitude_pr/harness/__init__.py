"""Seeded experiment runners with CSV reports."""
from .config import (
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    build_config,
    default_config,
    read_config,
    sparse_m,
)
from .experiments import (
    RUNNERS,
    cells,
    count_inversions,
    loglog_slope,
    run_degenerate,
    run_error_scaling,
    run_experiment,
    run_moments,
    run_rip_table,
    run_single,
    run_sharpness,
    run_sparse,
    run_sparse_sharpness,
    run_zero_mean,
)
from .report import COLUMNS, ExperimentReport, plot_data, read_report, write_report

"""Experiment runner: configs, sweeps, plots and the self-check gate."""
from .config import ExperimentConfig, load_config, parse_config
from .plot import emit_tradeoff_plot, read_points, render_svg
from .selfcheck import SelfcheckReport, SuiteResult, selfcheck
from .sweep import FIELDS, ResultRow, SweepResult, expand, run_cell, run_sweep, summarize

__all__ = [
    "ExperimentConfig", "load_config", "parse_config", "emit_tradeoff_plot", "read_points",
    "render_svg", "SelfcheckReport", "SuiteResult", "selfcheck", "FIELDS", "ResultRow",
    "SweepResult", "expand", "run_cell", "run_sweep", "summarize",
]

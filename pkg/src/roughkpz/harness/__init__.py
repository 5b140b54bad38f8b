"""Monte Carlo studies, reports and their serialization."""

from .config import DEFAULT_TOLERANCES, StudyConfig, load_config
from .report import Row, StudyReport, Trend, emit_report, load_report
from .studies import (run_block_moment_scan, run_gaussianity_study, run_solver_study,
                      run_variance_study, run_Y_limit_study, run_Z_convergence_study,
                      y_limit_variance)

__all__ = [
    "DEFAULT_TOLERANCES", "Row", "StudyConfig", "StudyReport", "Trend", "emit_report",
    "load_config", "load_report", "run_block_moment_scan", "run_gaussianity_study",
    "run_solver_study", "run_variance_study", "run_Y_limit_study", "run_Z_convergence_study",
    "y_limit_variance",
]

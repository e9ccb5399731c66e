"""Scenario library, configuration, seeded execution, and the CLI."""

from .config import load_config, scenario_from_config
from .runner import (
    CSV_COLUMNS,
    TrialReport,
    compute_box_optimum,
    compute_optimum,
    persist,
    reports_to_csv,
    run_scenario,
    run_trial,
)
from .scenarios import Scenario, brace_validity, builtin_names, get_builtin

__all__ = [
    "CSV_COLUMNS",
    "Scenario",
    "TrialReport",
    "brace_validity",
    "builtin_names",
    "compute_box_optimum",
    "compute_optimum",
    "get_builtin",
    "load_config",
    "persist",
    "reports_to_csv",
    "run_scenario",
    "run_trial",
    "scenario_from_config",
]

"""Experiment configuration, drivers, serialization and the CLI."""
from .config import ConfigError, ExperimentConfig
from .experiments import (
    ExperimentResult,
    TrialRecord,
    run_adversarial_dcs,
    run_bounds_table,
    run_experiment,
    run_gric_curve,
    run_phase_transition,
)

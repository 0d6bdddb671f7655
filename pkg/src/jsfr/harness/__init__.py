"""Experiment configuration, the end-to-end trial, sweeps and the CLI."""

from .config import ConfigError, ExperimentConfig, ReceiverSpec, SweepSpec
from .identities import verify_identities
from .pipeline import run_trial, trial_seed
from .sweep import SweepResult, emit_csv, sweep

__all__ = ["ConfigError", "ExperimentConfig", "ReceiverSpec", "SweepSpec", "SweepResult",
           "emit_csv", "run_trial", "sweep", "trial_seed", "verify_identities"]

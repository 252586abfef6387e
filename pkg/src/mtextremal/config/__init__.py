"""Configuration management for mtextremal."""

from .experiment_config import TOLERANCE_DEFAULTS, ExperimentConfig, RunnerSettings

__all__ = ["ExperimentConfig", "RunnerSettings", "TOLERANCE_DEFAULTS"]

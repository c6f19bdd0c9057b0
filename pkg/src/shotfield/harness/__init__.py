"""Configuration, replicate execution, statistics, reports and the CLI."""

from .config import ConfigError, ExperimentConfig, TestSettings, config_from_dict, load_config
from .experiment import ExperimentResult, replicate_rng, run_experiment, simulate_lambda
from .report import load_report, summarize, write_outputs
from .stats import cf_distance, ecf, fdd_joint_check, fit_stable_sigma, ks_gaussian

__all__ = [
    "ConfigError", "ExperimentConfig", "TestSettings", "config_from_dict", "load_config",
    "ExperimentResult", "replicate_rng", "run_experiment", "simulate_lambda",
    "load_report", "summarize", "write_outputs",
    "cf_distance", "ecf", "fdd_joint_check", "fit_stable_sigma", "ks_gaussian",
]

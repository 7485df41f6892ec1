"""Declarative experiment configs, report emission, and the verification harness."""

from .config import ExperimentConfig, load_experiment
from .runner import run_experiment
from .sweep import sweep
from .verify import CHECK_CATALOG, CheckResult, VerifyReport, verify_theorems

__all__ = [
    "CHECK_CATALOG",
    "CheckResult",
    "ExperimentConfig",
    "VerifyReport",
    "load_experiment",
    "run_experiment",
    "sweep",
    "verify_theorems",
]

"""Config-driven experiment harness."""
from .config import ExperimentConfig, load_config, validate_document
from .experiments import RECIPES, Outcome, run_experiment

__all__ = ["ExperimentConfig", "load_config", "validate_document", "RECIPES", "Outcome", "run_experiment"]

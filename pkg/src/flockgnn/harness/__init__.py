from .config import ExperimentConfig, load_config
from .experiments import MetricSeries, evaluate, extended_run, reduced_radius_run, sweep, train_model

__all__ = ["ExperimentConfig", "load_config", "MetricSeries", "evaluate",
           "extended_run", "reduced_radius_run", "sweep", "train_model"]

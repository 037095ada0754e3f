class ConfigurationError(ValueError):
    """Invalid or unsatisfiable configuration."""


class SimulationFault(RuntimeError):
    """Numerical or geometric fault during a rollout."""


class TrainingFault(RuntimeError):
    """Non-finite gradients or losses during fitting."""

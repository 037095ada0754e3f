"""Frame-invariant complex-valued GNN flocking controllers."""

__version__ = "0.1.0"

"""Quadratic-approximation line searches for mini-batch neural network training."""

__version__ = "0.1.0"

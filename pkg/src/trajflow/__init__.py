"""Conditional flow matching for trajectories."""

__version__ = "0.1.0"

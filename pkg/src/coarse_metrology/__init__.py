"""Precision limits for phase and frequency estimation with coarsened references."""

__version__ = "0.1.0"

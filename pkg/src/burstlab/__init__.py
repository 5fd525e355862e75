"""Burst and inter-burst duration statistics for nonlinear SDE, fBm and
trade-activity series."""

__version__ = "0.1.0"

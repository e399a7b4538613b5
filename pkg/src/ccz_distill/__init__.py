"""Simulation of zero-level CCZ magic-state distillation with the [[8,3,2]] code."""

__version__ = "0.1.0"

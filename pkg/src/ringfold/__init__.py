"""Saddle-node bifurcations of phase-locked states in ring Kuramoto networks."""

__version__ = "0.1.0"

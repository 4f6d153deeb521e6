"""Spectral split-step simulation of damped nonlinear Schrodinger equations."""

__version__ = "0.1.0"

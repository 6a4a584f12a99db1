"""Verification lab for nonlinear diffusion on the hyperbolic plane."""

__version__ = "0.1.0"

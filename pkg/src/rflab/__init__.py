"""Numerical laboratory for random trigonometric and Taylor series with Rademacher signs."""

__version__ = "0.1.0"

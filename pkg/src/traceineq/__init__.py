"""Numerical verification of multivariate trace inequalities and recoverability bounds."""

__version__ = "0.1.0"

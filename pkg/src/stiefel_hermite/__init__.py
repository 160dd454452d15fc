"""Hermite interpolation of curves on the compact Stiefel manifold."""

from . import calculus, errors, experiments, interpolate, linalg, stiefel

__all__ = ["calculus", "errors", "experiments", "interpolate", "linalg", "stiefel"]

__version__ = "0.1.0"

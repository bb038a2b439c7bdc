"""Spectral laboratory for the quasi-Laplacian and the drifted Laplacian on R^m."""

__version__ = "0.1.0"

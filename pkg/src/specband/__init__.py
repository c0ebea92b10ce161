"""Finite-volume spectral data and transport bounds for 1D discrete Schrodinger operators."""

__version__ = "0.1.0"

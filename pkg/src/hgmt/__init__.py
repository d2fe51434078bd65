"""Computational tools for symmetric sets, vertical flatness and singular integrals in the Heisenberg group."""

__version__ = "0.1.0"

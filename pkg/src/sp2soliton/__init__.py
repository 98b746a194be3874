"""Numerical laboratory for Sp(2)-invariant closed G2 Laplacian solitons."""

__version__ = "0.1.0"

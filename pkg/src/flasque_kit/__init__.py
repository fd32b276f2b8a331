"""Exact verification toolkit for flasque resolutions of tori and R-equivalence counts."""

__version__ = "0.1.0"

"""Numerical laboratory for sine-Gordon 2-solitons and their Bäcklund transformations."""

__version__ = "0.1.0"

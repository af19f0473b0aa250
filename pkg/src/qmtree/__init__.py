"""Contextual sigma-algebras, multi-probability spaces and probability metaspaces."""

__version__ = "0.1.0"

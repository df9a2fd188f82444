"""Finite-window toolkit for descendant covers, coarse separators and their certificates."""
__version__ = "0.1.0"

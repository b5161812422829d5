"""Holonomic gates on degenerate dark spaces and dark-state transfer between cavity atoms."""

__version__ = "0.1.0"

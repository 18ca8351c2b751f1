"""Congestion approximators from bottom-up hierarchical partitioning."""

__version__ = "0.1.0"

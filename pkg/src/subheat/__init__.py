"""Solvers for subordinated heat equations with history data."""

__version__ = "0.1.0"

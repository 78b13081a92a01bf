"""Seasonally forced SIR model: chaos diagnosis and phase control of chaos."""

__version__ = "0.1.0"

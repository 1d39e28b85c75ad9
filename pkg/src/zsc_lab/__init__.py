"""Tabular zero-shot coordination lab on small Hanabi-style games."""

__version__ = "0.1.0"

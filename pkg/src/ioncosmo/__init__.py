"""Desk-scale simulator of cosmological particle creation in a time-dependent ion trap."""

__version__ = "0.1.0"

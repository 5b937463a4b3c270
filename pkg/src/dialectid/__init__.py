"""Spoken dialect identification toolkit."""

__version__ = "0.1.0"

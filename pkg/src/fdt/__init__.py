"""Executable finitary bases, approximable mappings and the universal domain."""

__version__ = "0.1.0"

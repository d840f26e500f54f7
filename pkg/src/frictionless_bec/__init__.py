"""Frictionless fast expansions of trapped condensates: design and verification."""

__version__ = "0.1.0"

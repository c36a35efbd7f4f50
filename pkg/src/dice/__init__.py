"""Transparent SQL encryption proxy with property-preserving ciphers."""

__version__ = "0.1.0"

"""Distributed spectrum-footprint repository."""

__version__ = "0.1.0"

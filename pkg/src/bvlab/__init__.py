"""Numerical laboratory for boundary traces of BV functions on discretized
weighted planar domains."""

__version__ = "0.1.0"

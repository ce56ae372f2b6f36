"""Toolkit for curating raw affiliation strings against the ROR registry."""

__version__ = "0.1.0"

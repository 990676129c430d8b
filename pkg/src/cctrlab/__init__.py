"""Simulation and verification tools for the Card-Cyclic-to-Random shuffle."""

__version__ = "0.1.0"
SPEC_VERSION = "1"

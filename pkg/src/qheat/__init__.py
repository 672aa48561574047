"""Desk-scale emulation and cost benchmarking of two quantum heat-equation solvers."""

__version__ = "0.1.0"

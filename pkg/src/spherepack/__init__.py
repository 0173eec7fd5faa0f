"""Sphere-packing lower bounds and random-coding upper bounds for block codes."""

__version__ = "0.1.0"

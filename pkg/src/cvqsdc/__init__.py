"""Continuous-variable direct secure communication with squeezed coherent states."""

__version__ = "0.1.0"

"""Numerics for parameterized families of non-autonomous conformal iterated function systems."""

__version__ = "0.1.0"

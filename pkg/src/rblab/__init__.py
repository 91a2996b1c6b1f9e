"""Numerical laboratory for one-resonant germs and their attracting basins."""

__version__ = "0.1.0"

"""Vortex energetics and Ginzburg-Landau heat flow on surfaces of revolution."""

__version__ = "0.1.0"

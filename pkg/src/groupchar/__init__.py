"""Characteristic functions solving the product equation on finite Abelian groups and tori."""

__version__ = "0.1.0"

"""Numerical workbench for Lax operator algebras on elliptic curves."""

__version__ = "0.1.0"

"""Thermodynamic formalism for the Manneville-Pomeau family, made computable."""

__version__ = "0.1.0"

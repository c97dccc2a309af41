"""Fermionic non-local magic of Gaussian states."""

__version__ = "0.1.0"

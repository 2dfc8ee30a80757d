"""Pseudo-spectral QG_alpha simulator and Littlewood-Paley / Besov toolkit."""

__all__ = ["__version__"]

__version__ = "0.1.0"

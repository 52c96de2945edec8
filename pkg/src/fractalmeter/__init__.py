"""Dyadic measures, energies, entropies and pinned-distance experiments."""

__version__ = "0.1.0"

"""Scattering operators of Schottky groups and quasiconformal rigidity diagnostics."""

__version__ = "0.1.0"

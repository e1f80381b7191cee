"""Computable fractional De Giorgi classes: seminorms, tails, Caccioppoli-type
inequalities, nonlocal energies and regularity probes on grid functions."""

__version__ = "0.1.0"

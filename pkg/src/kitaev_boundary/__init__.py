"""Boundary algebras, quasi-Hopf structure and lattice surgery for Kitaev quantum double models."""

__version__ = "0.1.0"

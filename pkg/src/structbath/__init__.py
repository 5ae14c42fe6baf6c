"""Structured-bath self-energies, Green's functions and gain maps."""
__version__ = "0.1.0"

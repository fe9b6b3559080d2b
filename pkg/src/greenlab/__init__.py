"""Desk-scale numerics for meromorphic surface dynamics: exact map algebra,
Green functions of the invariant currents, grid wedge products and energy
diagnostics, and the Diophantine side of the rotation examples."""

__version__ = "0.1.0"

"""Z2 indices, spectral flow and exact diagonalization for fermionic chains."""

__version__ = "0.1.0"

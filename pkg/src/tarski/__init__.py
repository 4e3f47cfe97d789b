"""Finite lattices, Galois connections, Tarski sheaves and their Laplacian dynamics."""

__version__ = "0.1.0"

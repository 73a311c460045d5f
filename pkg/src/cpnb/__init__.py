"""Berezin transforms for spherical Landau levels on complex projective space."""

__version__ = "0.1.0"

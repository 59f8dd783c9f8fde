"""Dikin walk sampling and projective Las Vegas optimization over convex bodies."""

__version__ = "0.1.0"

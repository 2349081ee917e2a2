"""Periodic Lorentz process with a shrinking hole in a wall, quasi-reflected Brownian motions, and their verification."""

__version__ = "0.1.0"

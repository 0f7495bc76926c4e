"""Numerical laboratory for the inverted harmonic oscillator as a pseudo-Hermitian system."""

__version__ = "0.1.0"

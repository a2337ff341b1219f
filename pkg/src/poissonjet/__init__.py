"""Construction and verification of first-order local models of Poisson
structures around Poisson submanifolds."""

__version__ = "0.1.0"

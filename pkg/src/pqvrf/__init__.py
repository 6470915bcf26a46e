"""pqvrf: a desk-scale lattice-based hybrid verifiable random function."""

__version__ = "0.1.0"

"""Mixed-dimensional finite-volume solver for fractured porous media."""

__version__ = "0.1.0"

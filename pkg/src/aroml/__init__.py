"""Two-stage adaptive robust optimization with learned strategy prediction."""

__version__ = "0.1.0"

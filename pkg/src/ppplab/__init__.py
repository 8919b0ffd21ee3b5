"""Pricing laboratory for goods whose per-use value evolves with consumption."""

__version__ = "0.1.0"

"""Monte Carlo engine, exact grid oracle and statistical checks."""

from .oracle import dp_oracle

__all__ = ["dp_oracle"]

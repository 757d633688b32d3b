"""Exact conditioning for linear-Gaussian and finite probabilistic programs."""

from .cond import BOTTOM
from .lang import parse, pretty

__all__ = ["BOTTOM", "parse", "pretty"]
__version__ = "0.1.0"

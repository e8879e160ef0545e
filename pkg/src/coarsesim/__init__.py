"""Exact density computations for subsets of ω and the coarse similarity metric."""

from .seq import BitSequence, BudgetExceeded, prefix
from .speclang import build, parse_spec

__all__ = ["BitSequence", "BudgetExceeded", "build", "parse_spec", "prefix"]
__version__ = "0.1.0"

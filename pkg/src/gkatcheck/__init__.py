"""Symbolic trace-equivalence checking for guarded control-flow programs."""

__version__ = "0.1.0"

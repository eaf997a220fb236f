"""Synthetic first-order logic reasoning benchmark with a built-in entailment checker."""

__version__ = "0.1.0"
GENERATOR_VERSION = "1.0"

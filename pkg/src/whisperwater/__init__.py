"""Whispering-water engine: speech decomposition, agent dialogue, tank simulation."""

__version__ = "0.1.0"

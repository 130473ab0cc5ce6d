"""Streamable regular transductions with cost register automata."""

__version__ = "0.1.0"

"""Relative Turaev-Viro invariants and hyperideal geometry."""
__version__ = "0.1.0"

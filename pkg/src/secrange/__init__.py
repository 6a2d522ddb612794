"""Exact verification tools for secrecy capacity regions of degraded
broadcast channels with secrecy outside a bounded range."""

__version__ = "0.1.0"

"""Exact convex-roof entanglement for symmetric two-qutrit facet states."""

__version__ = "0.1.0"

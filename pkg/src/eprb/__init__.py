"""Discrete EPRB data: generation, analysis and the quadruple bound."""

__version__ = "0.1.0"

"""Time-periodic solutions of hyperbolic boundary value problems by integration along characteristics."""

__version__ = "0.1.0"

"""Discovery, verification and analysis of quadratic first integrals."""

__version__ = "0.1.0"

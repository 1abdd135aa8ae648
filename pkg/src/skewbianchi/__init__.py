"""Verification engine for metric connections with totally skew-symmetric torsion."""

__version__ = "0.1.0"

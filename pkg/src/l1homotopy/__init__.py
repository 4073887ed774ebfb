"""Warm-started l1 homotopy solvers: BPDN, Dantzig selector, l1 decoding."""
__version__ = "0.1.0"

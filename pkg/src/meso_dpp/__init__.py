"""Determinantal point processes of unitary-invariant ensembles: kernels, samplers, statistics."""

__version__ = "0.1.0"

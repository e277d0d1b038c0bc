"""Stabilizer simulation of monitored Clifford circuits with noise and
quantum-enhanced operations, probed by conditional entanglement entropy."""
from ._backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]

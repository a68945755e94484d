"""Quantum information processing with coherent-state qubits and cat states."""

__version__ = "0.1.0"

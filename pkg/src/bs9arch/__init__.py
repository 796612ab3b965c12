"""Fault-tolerant memory workbench for the 21-qubit Bacon-Shor code on
double-quantum-dot hardware."""

__version__ = "0.1.0"

"""Numerical laboratory for short-path quantum optimization of MAX-D-LIN-2
objectives: exact spectral analysis, Brillouin-Wigner resummation, entropy
bounds, and theorem verification at desk scale (N up to ~26 qubits)."""

__version__ = "0.1.0"

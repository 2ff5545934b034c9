"""otoclab: quantum-chaos diagnostics for the u(3) boson model.

Exact diagonalization, microcanonical out-of-time-ordered correlators and
their long-time relative oscillations, classical Lyapunov exponents and
Poincare-section regularity, a GOE baseline, and a reproducible CLI for the
experiment recipes built on top of them.
"""

__version__ = "0.1.0"

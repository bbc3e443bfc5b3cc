"""Desk-scale simulation toolkit for long trapped-ion strings.

Subpackages cover chain mechanics (equilibrium positions, normal modes,
Lamb-Dicke factors), effective spin-spin couplings and addressing
crosstalk, exact few-qubit spin dynamics, entanglement certification,
pulse-sequence noise spectroscopy with feedforward compensation,
spin-motion wavefront probes, and stochastic estimators for heating,
collisions, and phase noise.
"""

from ionstring import (
    chain,
    coupling,
    dynamics,
    entanglement,
    motion,
    sequences,
    stochastics,
)

__version__ = "0.1.0"

__all__ = [
    "chain",
    "coupling",
    "dynamics",
    "entanglement",
    "motion",
    "sequences",
    "stochastics",
    "__version__",
]

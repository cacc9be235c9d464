"""Operational subsystems of finite-dimensional quantum systems.

Given a set of operations on a d-dimensional quantum system (an "agent"),
this package computes the commutant of those operations (the maximal
"adversary"), the induced subsystem (its states, transformations, and
partial trace), and checks the structural facts that make the construction
tick: operator-algebra duality and Wedderburn block decompositions, the
multiphase-covariant / basis-preserving duality and the classical-subsystem
classification of coherence monoids, the adversarial-group canonical form
for finite group representations, and purification with its essential
uniqueness.
"""

from .numerics import Tolerance, DEFAULT_TOL, NumericalFailure

__version__ = "0.1.0"

__all__ = ["Tolerance", "DEFAULT_TOL", "NumericalFailure", "__version__"]

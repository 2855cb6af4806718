"""Kustaanheimo-Stiefel regularization toolkit.

Quaternion algebra, the Levi-Civita and KS maps, the quadratic observables
of the 4-D oscillator, Projective Euler and Andoyer charts, the Hamiltonians
linking the oscillator to the Kepler problem, an adaptive integrator with
physical-time bookkeeping, and seeded verification suites.
"""

from .errors import DomainError

__version__ = "0.1.0"

__all__ = ["DomainError", "__version__"]

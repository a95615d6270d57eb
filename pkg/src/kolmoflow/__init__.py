"""Pseudo-spectral solver for the Kolmogorov two-equation turbulence model.

The package simulates the coupled (velocity, turbulent frequency,
turbulent kinetic energy) system on the periodic torus in the square-root
formulation that stays regular where the kinetic energy vanishes, and
ships a Littlewood-Paley diagnostic layer that monitors the quantities
controlling well-posedness: pointwise envelopes, energy budgets, dyadic
Sobolev energies, the continuation integrand, and twin-run stability.
"""

__version__ = "0.1.0"

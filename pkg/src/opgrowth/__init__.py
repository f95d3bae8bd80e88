"""Operator-size dynamics in noisy Brownian spin circuits.

Public surface re-exported here: model parameters, the finite-N weight
master equation, the large-N generating-function solver, scrambling
observables, and the small-system Monte Carlo oracle.
"""

__version__ = "0.1.0"

"""Stochastic-approximation toolkit for tracking time-varying optima.

Subpackages and modules:

* :mod:`satrack.core` - gradient estimators and (projected) SA steps
* :mod:`satrack.gains` - slack/gain admissible regions and step coefficients
* :mod:`satrack.bounds` - tracking-error bounds and deviation probabilities
* :mod:`satrack.detect` - windowed mean-shift detection with unequal covariances
* :mod:`satrack.adapt` - phase detection and multiplicative gain adaptation
* :mod:`satrack.agents` - Kalman-filter target tracking and swarm coordination
* :mod:`satrack.matfac` - symmetric indefinite factorization with updates
* :mod:`satrack.second_order` - factored simultaneous-perturbation Newton-like loop
* :mod:`satrack.harness` - scenario registry, replicate runner, CLI
"""

from satrack import streams
from satrack.streams import stream

__all__ = ["stream", "streams"]
__version__ = "0.1.0"

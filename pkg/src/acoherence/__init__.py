"""Counting statistics of radiation fields seen by resonant harmonic detectors.

The package computes detector excitation probabilities for coherent, Fock,
thermal, squeezed and general Gaussian field states along several independent
routes (perturbative series, P-representation closed forms, BCH measurement
operators, Gaussian Wigner overlaps and a brute-force truncated Fock
simulation), the ratio tests that discriminate coherent fields from everything
else, a seeded click sampler with a coherent-null hypothesis test, and a few
gravitational-wave scenario calculators.
"""

from acoherence.core import (
    CountDistribution,
    DetectorCoupling,
    NoPFunctionError,
    TruncationError,
    UndefinedStatisticError,
    ValidityWarning,
)
from acoherence.states import (
    Coherent,
    Custom,
    Fock,
    Gaussian,
    GaussianPhaseSpace,
    SqueezedVacuum,
    Thermal,
    make_state,
)

__version__ = "0.1.0"

__all__ = [
    "Coherent",
    "CountDistribution",
    "Custom",
    "DetectorCoupling",
    "Fock",
    "Gaussian",
    "GaussianPhaseSpace",
    "NoPFunctionError",
    "SqueezedVacuum",
    "Thermal",
    "TruncationError",
    "UndefinedStatisticError",
    "ValidityWarning",
    "make_state",
]

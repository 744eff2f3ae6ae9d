"""Shared value types and exceptions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

METHODS = ("perturbative", "p-representation", "gaussian-overlap", "oracle", "bch")

# Probability bookkeeping tolerance for exact routes.
PROB_TOL = 1e-9


class TruncationError(RuntimeError):
    """Fock-space truncation left more probability outside the basis than allowed."""

    def __init__(self, message: str, tail: float, suggested_dim: int | None = None):
        super().__init__(message)
        self.tail = tail
        self.suggested_dim = suggested_dim


class UndefinedStatisticError(ValueError):
    """A statistic is mathematically undefined for the given input (e.g. Q of vacuum)."""


class ValidityWarning(UserWarning):
    """A series or approximation is being used outside its stated regime."""


@dataclass(frozen=True)
class DetectorCoupling:
    """Field-detector coupling over one observation window.

    Parameters
    ----------
    gamma0 : float
        Spontaneous emission rate of the detector, in 1/s.
    dt : float
        Duration of the window, in s.
    eta : float
        Detection efficiency in [0, 1].
    """

    gamma0: float
    dt: float
    eta: float = 1.0

    def __post_init__(self):
        for name in ("gamma0", "dt", "eta"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.gamma0 < 0 or self.dt < 0:
            raise ValueError("gamma0 and dt must be non-negative")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")

    @classmethod
    def from_kappa(cls, kappa: float, eta: float = 1.0) -> DetectorCoupling:
        """Coupling with unit window length, so that gamma0*dt == kappa**2."""
        if not math.isfinite(kappa) or kappa < 0:
            raise ValueError(f"kappa must be finite and non-negative, got {kappa!r}")
        return cls(gamma0=kappa * kappa, dt=1.0, eta=eta)

    @property
    def lam(self) -> float:
        """Dimensionless exposure gamma0*dt."""
        return self.gamma0 * self.dt

    @property
    def kappa(self) -> float:
        return math.sqrt(self.lam)

    def transfer(self, small_angle: bool = False) -> float:
        """Single-quantum transfer probability eta*sin^2(kappa) (or eta*gamma0*dt)."""
        s = self.lam if small_angle else math.sin(self.kappa) ** 2
        return self.eta * s


@dataclass
class CountDistribution:
    """Detector excitation probabilities P_0..P_nmax from one computational route."""

    probs: np.ndarray
    method: str
    tail: float = 0.0
    dim: int | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        self.probs = np.asarray(self.probs, dtype=float)

    def __getitem__(self, n):
        return self.probs[n]

    def __len__(self):
        return len(self.probs)

    @property
    def n_max(self) -> int:
        return len(self.probs) - 1

    def total(self) -> float:
        return float(self.probs.sum())


class NoPFunctionError(ValueError):
    """The state has no closed-form P function; use the oracle or Gaussian route."""

"""Global counting statistics and the ratio tests for acoherence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from acoherence.core import CountDistribution, DetectorCoupling, UndefinedStatisticError
from acoherence.detectors import gaussian_p0_lam, gaussian_p1_p2_lam
from acoherence.states import (
    FieldState,
    Fock,
    GaussianPhaseSpace,
    SqueezedVacuum,
    analytic_moments,
    p_function,
    PDelta,
    PThermal,
)

CLASSIFY_TOL = 1e-9


def mean_counts(state: FieldState, coupling: DetectorCoupling, small_angle: bool = False) -> float:
    """Mean number of detector quanta, eta sin^2(kappa) <a^dag a>."""
    return coupling.transfer(small_angle) * analytic_moments(state, 1)


def variance_counts(state: FieldState, coupling: DetectorCoupling, small_angle: bool = False) -> float:
    """Count variance n_bar + s^2 (<a^dag^2 a^2> - <a^dag a>^2).

    ``small_angle`` replaces s = eta sin^2(kappa) by eta gamma0 dt, which gives
    the familiar n_bar + (gamma0 dt)^2 Q <n>.
    """
    s = coupling.transfer(small_angle)
    m1 = analytic_moments(state, 1)
    m2 = analytic_moments(state, 2)
    return s * m1 + s * s * (m2 - m1 * m1)


def mandel_q(state: FieldState) -> float:
    """Q = (<dN^2> - <N>) / <N> of the field."""
    m1 = analytic_moments(state, 1)
    if m1 <= 0:
        raise UndefinedStatisticError("Mandel Q is undefined when <n> = 0")
    m2 = analytic_moments(state, 2)
    return (m2 - m1 * m1) / m1


def classify_q(q: float) -> str:
    if q < -CLASSIFY_TOL:
        return "sub-Poissonian"
    if q > CLASSIFY_TOL:
        return "super-Poissonian"
    return "Poissonian"


@dataclass(frozen=True)
class StatSummary:
    mean: float
    variance: float
    q: float | None
    classification: str | None


def summarize(state: FieldState, coupling: DetectorCoupling, small_angle: bool = False) -> StatSummary:
    try:
        q = mandel_q(state)
    except UndefinedStatisticError:
        q = None
    return StatSummary(mean_counts(state, coupling, small_angle),
                       variance_counts(state, coupling, small_angle),
                       q, None if q is None else classify_q(q))


@dataclass(frozen=True)
class RatioResult:
    """R = 2 P2 P0 / P1^2 and R' = 3 P3 P1 / (2 P2^2).

    An undefined ratio is ``None`` with the reason recorded alongside.
    """

    r: float | None
    r_prime: float | None
    probs: tuple
    method: str | None = None
    r_reason: str | None = None
    r_prime_reason: str | None = None
    notes: dict = field(default_factory=dict)

    @property
    def r_defined(self) -> bool:
        return self.r is not None

    @property
    def r_prime_defined(self) -> bool:
        return self.r_prime is not None


def ratio_R(probs, method: str | None = None) -> RatioResult:
    """Ratio tests from P_0..P_3 (a sequence or a :class:`CountDistribution`)."""
    if isinstance(probs, CountDistribution):
        method = method or probs.method
        probs = probs.probs
    p = [float(x) for x in probs]
    if len(p) < 3:
        raise ValueError("ratio tests need at least P0, P1, P2")
    r = rp = None
    r_reason = rp_reason = None
    if p[1] == 0:
        r_reason = "P1 = 0"
    else:
        r = 2.0 * p[2] * p[0] / (p[1] * p[1])
    if len(p) < 4:
        rp_reason = "P3 not available"
    elif p[2] == 0:
        rp_reason = "P2 = 0"
    else:
        rp = 3.0 * p[3] * p[1] / (2.0 * p[2] * p[2])
    return RatioResult(r, rp, tuple(p[:4]), method, r_reason, rp_reason)


def leading_ratios(state: FieldState) -> tuple[float | None, float | None]:
    """Leading-order R = m2/m1^2 and R' = m3 m1/m2^2 from normally ordered moments."""
    m1, m2, m3 = (analytic_moments(state, j) for j in (1, 2, 3))
    r = m2 / (m1 * m1) if m1 > 0 else None
    rp = m3 * m1 / (m2 * m2) if m2 > 0 else None
    return r, rp


def reference_ratios(state: FieldState) -> tuple[float | None, float | None]:
    """Closed-form R, R' for the state families with known values."""
    pf = p_function(state)
    if isinstance(pf, PDelta) and not (isinstance(state, Fock) or abs(pf.alpha) == 0):
        return 1.0, 1.0
    if isinstance(pf, PThermal):
        return 2.0, 1.5
    if isinstance(state, Fock):
        n = state.n
        return (1.0 - 1.0 / n if n >= 1 else None,
                1.0 - 1.0 / (n - 1) if n >= 2 else None)
    if isinstance(state, SqueezedVacuum):
        r, rp = leading_ratios(state)
        return 2.0 + 1.0 / math.tanh(state.r) ** 2, rp
    return leading_ratios(state)


def ratio_R_gaussian(x0: float, r: float, phi: float, n_th: float) -> float:
    """Leading-order R for a thermal state squeezed by (r, phi) and displaced by x0."""
    ch2, sh2 = math.cosh(2 * r), math.sinh(2 * r)
    cphi = math.cos(phi)
    base = (2 * n_th + 1) * ch2 + x0 ** 2 - 1
    if base == 0:
        raise UndefinedStatisticError("R is undefined for the vacuum")
    den = 2 * base ** 2
    first = (4 * n_th ** 2 - 8 * n_th * x0 ** 2 * cphi * sh2
             + 8 * (2 * n_th + 1) * (x0 ** 2 - 1) * ch2)
    second = (3 * (2 * n_th + 1) ** 2 * math.cosh(4 * r) + 4 * n_th
              - 8 * x0 ** 2 * cphi * math.sinh(r) * math.cosh(r) + 2 * x0 ** 4 - 8 * x0 ** 2 + 5)
    return first / den + second / den


def ratio_R_gaussian_bch(gauss: GaussianPhaseSpace, lam: float) -> float:
    """R from the Gaussian-overlap P_0 and its derivatives, all orders in lam."""
    p0 = gaussian_p0_lam(gauss, lam)
    p1, p2 = gaussian_p1_p2_lam(gauss, lam)
    if p1 == 0:
        raise UndefinedStatisticError("P1 = 0")
    return 2.0 * p2 * p0 / (p1 * p1)


def r_from_q(q: float, mean_n: float) -> float:
    """Leading-order link R ~ 1 + Q/<n>."""
    if mean_n <= 0:
        raise UndefinedStatisticError("<n> must be positive")
    return 1.0 + q / mean_n

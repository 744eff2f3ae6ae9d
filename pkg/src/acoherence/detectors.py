"""Analytic routes to detector excitation probabilities.

Four routes are implemented:

* ``perturbative``: the kappa^6 series in field moments, valid for any state
  while kappa^2 <n> is small.
* ``p-representation``: exact Poisson transforms of closed-form P functions
  (coherent and thermal fields), with finite efficiency.
* ``bch``: the split-operator measurement operators
  M_n ~ (-i kappa)^n / sqrt(n!) a^n exp(-kappa^2 a^dag a / 2).
* ``gaussian-overlap``: P_0 = <exp(-lam a^dag a)> for any Gaussian state from
  the overlap of two Gaussian Wigner functions, with P_1, P_2 obtained by
  differentiating in lam = gamma0*dt.
"""

from __future__ import annotations

import math
import warnings
from fractions import Fraction

import numpy as np
from scipy.stats import poisson

from acoherence.core import (
    CountDistribution,
    DetectorCoupling,
    NoPFunctionError,
    ValidityWarning,
)
from acoherence.states import (
    FieldState,
    GaussianPhaseSpace,
    PDelta,
    PThermal,
    analytic_moments,
    mean_occupation,
    p_function,
)

VALIDITY_THRESHOLD = 0.1

# Operator strings appearing in the kappa^6 series, rewritten as sums of
# normally ordered moments m_j = <a^dag^j a^j> using [a, a^dag] = 1:
#   N = a^dag a,  A2 = a^dag^2 a^2,  A3 = a^dag^3 a^3
#   N^2 = A2 + N,  N^3 = A3 + 3 A2 + N,
#   N A2 = A2 N = A3 + 2 A2,  a^dag^2 a a^dag a^2 = A3 + A2.
REDUCTION = {
    "1": {0: 1},
    "N": {1: 1},
    "A2": {2: 1},
    "A3": {3: 1},
    "N^2": {1: 1, 2: 1},
    "N^3": {1: 1, 2: 3, 3: 1},
    "N A2": {2: 2, 3: 1},
    "A2 N": {2: 2, 3: 1},
    "ad2 a ad a2": {2: 1, 3: 1},
}

F = Fraction
SERIES = {
    0: {
        0: [("1", F(1))],
        2: [("N", F(-1))],
        4: [("A2", F(1, 6)), ("N^2", F(1, 3))],
        6: [("N A2", F(-17, 360)), ("A2 N", F(-17, 360)), ("N^3", F(-2, 45)),
            ("A3", F(-1, 60)), ("ad2 a ad a2", F(-1, 90))],
    },
    1: {
        2: [("N", F(1))],
        4: [("N^2", F(-1, 3)), ("A2", F(-2, 3))],
        6: [("ad2 a ad a2", F(8, 45)), ("A2 N", F(4, 45)), ("N A2", F(4, 45)),
            ("N^3", F(2, 45)), ("A3", F(1, 10))],
    },
    2: {
        4: [("A2", F(1, 2))],
        6: [("A3", F(-1, 4)), ("ad2 a ad a2", F(-1, 6)), ("A2 N", F(-1, 24)),
            ("N A2", F(-1, 24))],
    },
    3: {
        6: [("A3", F(1, 6))],
    },
}


def _reduced_table() -> dict:
    table = {}
    for n, powers in SERIES.items():
        table[n] = {}
        for p, terms in powers.items():
            coeffs = {}
            for name, c in terms:
                for j, mult in REDUCTION[name].items():
                    coeffs[j] = coeffs.get(j, F(0)) + c * mult
            table[n][p] = {j: c for j, c in coeffs.items() if c != 0}
    return table


# NORMAL_TABLE[n][power of kappa][j] = coefficient of m_j
NORMAL_TABLE = _reduced_table()


def _unit_efficiency(coupling: DetectorCoupling, route: str):
    if coupling.eta != 1.0:
        raise ValueError(f"the {route} route has no efficiency model; use the exact or oracle route")


def _warn_validity(scale: float, route: str):
    if scale > VALIDITY_THRESHOLD:
        warnings.warn(f"{route}: kappa^2 <n> = {scale:.3g} exceeds {VALIDITY_THRESHOLD}; "
                      "the expansion may be inaccurate", ValidityWarning, stacklevel=3)


def pn_perturbative(state: FieldState, coupling: DetectorCoupling, n: int,
                    leading_only: bool = False, moments=None) -> float:
    """P_n (n = 0..3) from the kappa^6 series.

    With ``leading_only`` only the lowest non-vanishing power of kappa is kept
    (1 for P_0, kappa^(2n) <a^dag^n a^n>/n! otherwise). The series value is
    returned as is, negative values included.
    """
    if n not in NORMAL_TABLE:
        raise ValueError(f"the perturbative series covers n = 0..3, got {n}")
    _unit_efficiency(coupling, "perturbative")
    k2 = coupling.lam
    if moments is None:
        moments = {j: analytic_moments(state, j) for j in range(4)}
        _warn_validity(k2 * moments[1], "perturbative series")
    powers = NORMAL_TABLE[n]
    if leading_only:
        lowest = min(powers)
        powers = {lowest: powers[lowest]}
    total = 0.0
    for p, coeffs in powers.items():
        total += k2 ** (p // 2) * sum(float(c) * moments[j] for j, c in coeffs.items())
    return total


def perturbative_distribution(state: FieldState, coupling: DetectorCoupling,
                              leading_only: bool = False) -> CountDistribution:
    _unit_efficiency(coupling, "perturbative")
    moments = {j: analytic_moments(state, j) for j in range(4)}
    _warn_validity(coupling.lam * moments[1], "perturbative series")
    probs = np.array([pn_perturbative(state, coupling, n, leading_only, moments) for n in range(4)])
    notes = {"leading_only": leading_only}
    if np.any(probs < 0):
        notes["negative"] = True
    return CountDistribution(probs, "perturbative", tail=1.0 - float(probs.sum()), notes=notes)


def pn_exact(state: FieldState, coupling: DetectorCoupling, n: int,
             small_angle: bool = False) -> float:
    """P_n from the Poisson transform of a closed-form P function.

    Coherent fields give Poisson counts with mean |alpha|^2 s and thermal fields
    (s n_th)^n / (1 + s n_th)^(n+1), where s = eta sin^2(kappa), or
    eta gamma0 dt when ``small_angle`` is set.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    s = coupling.transfer(small_angle)
    pf = p_function(state)
    if isinstance(pf, PDelta):
        return float(poisson.pmf(n, abs(pf.alpha) ** 2 * s))
    if isinstance(pf, PThermal):
        q = s * pf.n_th
        return math.exp(n * math.log(q) - (n + 1) * math.log1p(q)) if q > 0 else float(n == 0)
    raise NoPFunctionError(
        f"{state.kind} state has no closed-form P function; use the oracle, "
        "perturbative or gaussian route")


def exact_distribution(state: FieldState, coupling: DetectorCoupling, n_max: int = 3,
                       small_angle: bool = False) -> CountDistribution:
    probs = np.array([pn_exact(state, coupling, n, small_angle) for n in range(n_max + 1)])
    return CountDistribution(probs, "p-representation", tail=max(0.0, 1.0 - float(probs.sum())),
                             notes={"small_angle": small_angle})


def pn_bch(state: FieldState, coupling: DetectorCoupling, n: int) -> float:
    """P_n = lam^n/n! <exp(-lam N/2) a^dag^n a^n exp(-lam N/2)>, lam = gamma0*dt.

    Both operators are diagonal in the number basis, so the expectation is a
    weighted sum over the truncated photon-number distribution.
    """
    from acoherence.oracle import field_number_distribution

    if n < 0:
        raise ValueError("n must be non-negative")
    _unit_efficiency(coupling, "bch")
    lam = coupling.lam
    _warn_validity(lam * mean_occupation(state), "BCH measurement operators")
    p, _, dim = field_number_distribution(state)
    m = np.arange(dim)
    falling = np.zeros(dim)
    ok = m >= n
    falling[ok] = np.exp(_log_falling(m[ok], n))
    return float(lam ** n / math.factorial(n) * np.sum(p * np.exp(-lam * m) * falling))


def _log_falling(m: np.ndarray, n: int) -> np.ndarray:
    from scipy.special import gammaln

    return gammaln(m + 1) - gammaln(m - n + 1)


def bch_distribution(state: FieldState, coupling: DetectorCoupling, n_max: int = 3) -> CountDistribution:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ValidityWarning)
        probs = np.array([pn_bch(state, coupling, n) for n in range(n_max + 1)])
    _warn_validity(coupling.lam * mean_occupation(state), "BCH measurement operators")
    return CountDistribution(probs, "bch", tail=1.0 - float(probs.sum()))


# ---------------------------------------------------------------------------
# Gaussian overlap route
#
# With s = 1 - exp(-lam) and W = V - I/2 the overlap formula reduces to
#   P_0 = exp(-(s/2) X0^T (I + sW)^-1 X0) / sqrt(det(I + sW)),
# which stays regular as lam -> 0. Writing E(s) = det(I + sW) and
# h(s) = (s |X0|^2 + s^2 X0^T adj(W) X0) / E(s), log P_0 = -ln(E)/2 - h/2.


def _log_p0_derivs(gauss: GaussianPhaseSpace, lam: float):
    """log P_0 and its first two derivatives with respect to lam."""
    x0 = gauss.mean
    w = gauss.cov - 0.5 * np.eye(2)
    tw = w[0, 0] + w[1, 1]
    dw = w[0, 0] * w[1, 1] - w[0, 1] * w[1, 0]
    adj = np.array([[w[1, 1], -w[0, 1]], [-w[1, 0], w[0, 0]]])
    b = float(x0 @ x0)
    a = float(x0 @ adj @ x0)

    s = -math.expm1(-lam)
    e = 1.0 + s * tw + s * s * dw
    e1 = tw + 2.0 * s * dw
    e2 = 2.0 * dw
    if e <= 0:
        raise ValueError("covariance matrix is singular for this exposure")
    u = s * b + s * s * a
    u1 = b + 2.0 * s * a
    u2 = 2.0 * a
    h = u / e
    h1 = u1 / e - u * e1 / e ** 2
    h2 = u2 / e - 2.0 * u1 * e1 / e ** 2 - u * e2 / e ** 2 + 2.0 * u * e1 ** 2 / e ** 3

    log_p0 = -0.5 * math.log(e) - 0.5 * h
    l_s = -0.5 * e1 / e - 0.5 * h1
    l_ss = -0.5 * (e2 / e - (e1 / e) ** 2) - 0.5 * h2

    ds = 1.0 - s  # ds/dlam = exp(-lam); d2s/dlam2 = -exp(-lam)
    l_lam = l_s * ds
    l_lamlam = l_ss * ds * ds - l_s * ds
    return log_p0, l_lam, l_lamlam


def gaussian_p0_lam(gauss: GaussianPhaseSpace, lam: float) -> float:
    """<exp(-lam a^dag a)> for a Gaussian state."""
    if not math.isfinite(lam) or lam < 0:
        raise ValueError(f"lam must be finite and non-negative, got {lam!r}")
    return math.exp(_log_p0_derivs(gauss, lam)[0])


def gaussian_p0(gauss: GaussianPhaseSpace, coupling: DetectorCoupling) -> float:
    _unit_efficiency(coupling, "gaussian-overlap")
    return gaussian_p0_lam(gauss, coupling.lam)


def gaussian_p1_p2_lam(gauss: GaussianPhaseSpace, lam: float) -> tuple[float, float]:
    log_p0, d1, d2 = _log_p0_derivs(gauss, lam)
    p0 = math.exp(log_p0)
    # P0' = P0 L', P0'' = P0 (L'' + L'^2)
    p1 = -lam * p0 * d1
    p2 = 0.5 * lam * lam * p0 * (d2 + d1 * d1 + d1)
    return p1, p2


def gaussian_p1_p2(gauss: GaussianPhaseSpace, coupling: DetectorCoupling) -> tuple[float, float]:
    """P_1 = -lam dP_0/dlam and P_2 = (lam^2/2)(d^2/dlam^2 + d/dlam) P_0."""
    _unit_efficiency(coupling, "gaussian-overlap")
    return gaussian_p1_p2_lam(gauss, coupling.lam)


def gaussian_distribution(gauss: GaussianPhaseSpace, coupling: DetectorCoupling) -> CountDistribution:
    p0 = gaussian_p0(gauss, coupling)
    p1, p2 = gaussian_p1_p2(gauss, coupling)
    probs = np.array([p0, p1, p2])
    return CountDistribution(probs, "gaussian-overlap", tail=max(0.0, 1.0 - float(probs.sum())))


ROUTES = {
    "perturbative": "perturbative",
    "exact": "p-representation",
    "bch": "bch",
    "gaussian": "gaussian-overlap",
    "oracle": "oracle",
}


def distribution(state: FieldState, coupling: DetectorCoupling, method: str,
                 n_max: int = 3, small_angle: bool = False) -> CountDistribution:
    """Dispatch to one route by its short name (see ``ROUTES``)."""
    from acoherence.oracle import detector_pn_oracle
    from acoherence.states import to_gaussian

    if method == "perturbative":
        if n_max > 3:
            raise ValueError("the perturbative series covers n = 0..3")
        dist = perturbative_distribution(state, coupling)
        dist.probs = dist.probs[: n_max + 1]
        return dist
    if method == "exact":
        return exact_distribution(state, coupling, n_max, small_angle)
    if method == "bch":
        return bch_distribution(state, coupling, n_max)
    if method == "gaussian":
        if n_max > 2:
            n_max = 2
        dist = gaussian_distribution(to_gaussian(state), coupling)
        dist.probs = dist.probs[: n_max + 1]
        return dist
    if method == "oracle":
        return detector_pn_oracle(state, coupling, n_max)
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(ROUTES)}")

"""Brute-force reference values from the truncated Fock simulation.

These functions accept :mod:`acoherence.states` objects, pick a truncation
adaptively and evaluate everything with explicit number-basis matrices. They
are slow compared with the closed forms in :mod:`acoherence.detectors` and are
meant as the ground truth those are tested against.
"""

from __future__ import annotations

import math

import numpy as np

from acoherence import fock
from acoherence.core import CountDistribution, DetectorCoupling
from acoherence.states import MAX_DIM, TAIL_BOUND, FieldState, auto_fock, to_fock

MOMENT_RTOL = 1e-12


def field_number_distribution(state: FieldState, tail_bound: float = TAIL_BOUND):
    """Photon-number probabilities of the field, with truncation tail and dimension."""
    rep = auto_fock(state, tail_bound)
    return rep.probabilities(), rep.tail, rep.dim


def detector_pn_oracle(state: FieldState, coupling: DetectorCoupling, n_max: int = 3,
                       tail_bound: float = TAIL_BOUND) -> CountDistribution:
    """P_n = tr_F <n| U (rho (x) |0><0|) U^dag |n> by exact block evolution.

    Finite efficiency is simulated with a second beam splitter of transmission
    ``eta`` between the detector mode and the observed port.

    The returned ``tail`` is everything missing from ``probs``: the field
    truncation tail (also in ``notes['truncation_tail']``) plus the detector
    weight above ``n_max``.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    p_field, trunc_tail, dim = field_number_distribution(state, tail_bound)
    kappa = coupling.kappa
    if coupling.eta == 1.0:
        t = fock.transfer_matrix(kappa, dim - 1, n_max + 1)
        probs = p_field @ t
    else:
        t = fock.transfer_matrix(kappa, dim - 1, dim)
        p_det = p_field @ t
        theta = math.asin(math.sqrt(coupling.eta))
        thin = fock.transfer_matrix(theta, dim - 1, n_max + 1)
        probs = p_det @ thin
    probs = np.clip(probs[: n_max + 1], 0.0, None)
    if probs.size < n_max + 1:
        probs = np.concatenate([probs, np.zeros(n_max + 1 - probs.size)])
    tail = max(0.0, 1.0 - float(probs.sum()))
    return CountDistribution(probs, "oracle", tail=tail, dim=dim,
                             notes={"truncation_tail": trunc_tail})


def normal_ordered_moment(state: FieldState, j: int, tail_bound: float = TAIL_BOUND) -> float:
    """<a^dag^j a^j> from ladder matrices, doubling the basis until it converges."""
    if not 1 <= j <= 4:
        raise ValueError(f"moment order must be in 1..4, got {j}")
    rep = auto_fock(state, tail_bound)
    value = fock.moment(rep, j)
    dim = rep.dim
    while dim < MAX_DIM and not _is_custom(state):
        dim = min(2 * dim, MAX_DIM)
        nxt = fock.moment(to_fock(state, dim, tail_bound), j)
        if abs(nxt - value) <= MOMENT_RTOL * max(abs(nxt), 1e-300):
            return nxt
        value = nxt
    return value


def _is_custom(state) -> bool:
    return getattr(state, "kind", None) == "custom"


def exp_number_expectation(state: FieldState, lam: float, tail_bound: float = TAIL_BOUND) -> float:
    """<exp(-lam a^dag a)> in the truncated basis."""
    if not math.isfinite(lam) or lam < 0:
        raise ValueError(f"lambda must be finite and non-negative, got {lam!r}")
    return fock.exp_number(auto_fock(state, tail_bound), lam)

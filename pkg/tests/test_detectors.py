import math
import warnings
from fractions import Fraction

import numpy as np
import pytest

from acoherence.core import DetectorCoupling, NoPFunctionError, ValidityWarning
from acoherence.detectors import (
    NORMAL_TABLE,
    bch_distribution,
    distribution,
    exact_distribution,
    gaussian_distribution,
    gaussian_p0,
    gaussian_p0_lam,
    gaussian_p1_p2_lam,
    pn_bch,
    pn_exact,
    pn_perturbative,
    perturbative_distribution,
)
from acoherence.fock import ladder_ops
from acoherence.oracle import detector_pn_oracle, exp_number_expectation
from acoherence.states import Coherent, Fock, Gaussian, SqueezedVacuum, Thermal, to_gaussian


def _series_mul(p, q, order=3):
    out = [Fraction(0)] * (order + 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            if i + j <= order:
                out[i + j] += a * b
    return out


def _series_pow(p, k, order=3):
    out = [Fraction(1)] + [Fraction(0)] * order
    for _ in range(k):
        out = _series_mul(out, p, order)
    return out


# sin^2 and cos^2 as power series in x = kappa^2, through x^3
SIN2 = [Fraction(0), Fraction(1), Fraction(-1, 3), Fraction(2, 45)]
COS2 = [Fraction(1), Fraction(-1), Fraction(1, 3), Fraction(-2, 45)]


@pytest.mark.parametrize("m", range(0, 9))
def test_series_table_reproduces_fock_taylor_coefficients(m):
    # Fock moments m!/(m-j)! are polynomials of distinct degree in m, so
    # agreement for m = 0..8 pins down every coefficient of the table.
    moments = {j: Fraction(math.perm(m, j)) if m >= j else Fraction(0) for j in range(4)}
    for n in range(4):
        exact = [c * math.comb(m, n) for c in
                 _series_mul(_series_pow(SIN2, n), _series_pow(COS2, max(m - n, 0)))]
        if m < n:
            exact = [Fraction(0)] * 4
        table = [Fraction(0)] * 4
        for power, coeffs in NORMAL_TABLE[n].items():
            table[power // 2] += sum(c * moments[j] for j, c in coeffs.items())
        assert table == exact


def test_operator_reductions_hold_as_matrices():
    a, ad = ladder_ops(14)
    n = ad @ a
    a2 = ad @ ad @ a @ a
    a3 = ad @ ad @ ad @ a @ a @ a
    keep = slice(0, 8)  # away from the truncation edge

    def same(x, y):
        return np.allclose(x[keep, keep], y[keep, keep])

    assert same(n @ n, a2 + n)
    assert same(n @ n @ n, a3 + 3 * a2 + n)
    assert same(n @ a2, a3 + 2 * a2)
    assert same(a2 @ n, a3 + 2 * a2)
    assert same(ad @ ad @ a @ ad @ a @ a, a3 + a2)


def test_coherent_p1_series():
    a, kappa = 1.7, 0.03
    x = kappa ** 2
    expected = a * x - (a / 3 + a * a) * x ** 2 + (2 * a / 45 + 2 * a * a / 3 + a ** 3 / 2) * x ** 3
    got = pn_perturbative(Coherent(math.sqrt(a)), DetectorCoupling.from_kappa(kappa), 1)
    assert got == pytest.approx(expected, rel=1e-13)


def test_leading_only_keeps_lowest_power():
    c = DetectorCoupling.from_kappa(0.01)
    f = Fock(4)
    assert pn_perturbative(f, c, 0, leading_only=True) == 1.0
    assert pn_perturbative(f, c, 2, leading_only=True) == pytest.approx(1e-8 * 12 / 2)
    assert pn_perturbative(f, c, 3, leading_only=True) == pytest.approx(1e-12 * 24 / 6)


def test_perturbative_guards():
    with pytest.warns(ValidityWarning):
        pn_perturbative(Thermal(5), DetectorCoupling.from_kappa(0.3), 1)
    with pytest.raises(ValueError):
        pn_perturbative(Thermal(1), DetectorCoupling.from_kappa(0.1, eta=0.5), 1)
    with pytest.raises(ValueError):
        pn_perturbative(Thermal(1), DetectorCoupling.from_kappa(0.1), 4)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        pn_perturbative(Thermal(1), DetectorCoupling.from_kappa(0.1), 1)


def test_perturbative_distribution_flags_negative_values():
    with pytest.warns(ValidityWarning):
        d = perturbative_distribution(Thermal(50), DetectorCoupling.from_kappa(0.5))
    assert d.notes.get("negative") or np.all(d.probs >= 0)


@pytest.mark.parametrize("state", [SqueezedVacuum(0.4), Fock(2), Gaussian(0.8, 0.3, 0.7, 0.2)])
def test_perturbative_tracks_oracle_at_small_kappa(state):
    c = DetectorCoupling.from_kappa(0.05)
    pert = perturbative_distribution(state, c).probs
    orc = detector_pn_oracle(state, c, 3).probs
    assert np.max(np.abs(pert - orc)) < 1e-9


def test_exact_route_closed_forms():
    c = DetectorCoupling(0.2, 0.5, eta=0.8)
    s = 0.8 * math.sin(math.sqrt(0.1)) ** 2
    assert pn_exact(Coherent(1.5j), c, 2) == pytest.approx(math.exp(-2.25 * s) * (2.25 * s) ** 2 / 2)
    q = 3 * s
    assert pn_exact(Thermal(3), c, 1) == pytest.approx(q / (1 + q) ** 2)
    assert pn_exact(Thermal(3), c, 1, small_angle=True) == pytest.approx(0.24 / 1.24 ** 2)
    assert pn_exact(Fock(0), c, 0) == 1.0
    with pytest.raises(NoPFunctionError):
        pn_exact(Fock(2), c, 1)
    with pytest.raises(NoPFunctionError):
        exact_distribution(SqueezedVacuum(0.3), c)


def test_exact_matches_oracle_with_efficiency():
    for state in (Coherent(1.2), Thermal(0.7)):
        c = DetectorCoupling.from_kappa(0.6, eta=0.35)
        assert np.allclose(exact_distribution(state, c, 5).probs, detector_pn_oracle(state, c, 5).probs,
                           atol=1e-12)


@pytest.mark.filterwarnings("ignore::acoherence.core.ValidityWarning")
def test_bch_coherent_closed_form():
    a, lam = 1.4, 0.2
    c = DetectorCoupling(lam, 1.0)
    s = 1 - math.exp(-lam)
    for n in range(4):
        expected = (lam * a * math.exp(-lam)) ** n / math.factorial(n) * math.exp(-a * s)
        assert pn_bch(Coherent(math.sqrt(a)), c, n) == pytest.approx(expected, rel=1e-10)


@pytest.mark.filterwarnings("ignore::acoherence.core.ValidityWarning")
@pytest.mark.parametrize("state", [Thermal(0.8), SqueezedVacuum(0.6), Gaussian(1.1, 0.4, 0.5, 0.3),
                                   Coherent(0.9)])
def test_gaussian_overlap_equals_bch_route(state):
    c = DetectorCoupling(0.15, 1.0)
    g = gaussian_distribution(to_gaussian(state), c).probs
    b = bch_distribution(state, c, 2).probs
    assert np.allclose(g, b, rtol=1e-9, atol=0)


def test_gaussian_p0_is_exp_number_expectation():
    state = Gaussian(1.3, 0.5, 2.0, 0.4)
    c = DetectorCoupling(0.3, 0.5)
    assert gaussian_p0(to_gaussian(state), c) == pytest.approx(exp_number_expectation(state, 0.15), rel=1e-10)
    assert gaussian_p0_lam(to_gaussian(state), 0.0) == 1.0
    with pytest.raises(ValueError):
        gaussian_p0_lam(to_gaussian(state), -1.0)


def test_gaussian_derivatives_match_finite_differences():
    g = to_gaussian(Gaussian(0.9, 0.35, 1.2, 0.6))
    lam, h = 0.2, 1e-4
    f = [gaussian_p0_lam(g, lam + k * h) for k in (-2, -1, 0, 1, 2)]
    d1 = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h)
    d2 = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)
    p1, p2 = gaussian_p1_p2_lam(g, lam)
    assert p1 == pytest.approx(-lam * d1, rel=1e-8)
    assert p2 == pytest.approx(lam ** 2 / 2 * (d2 + d1), rel=1e-6)


def test_distribution_dispatch():
    c = DetectorCoupling.from_kappa(0.1)
    assert distribution(Thermal(1), c, "exact").method == "p-representation"
    assert distribution(Thermal(1), c, "gaussian", n_max=3).n_max == 2
    assert distribution(Thermal(1), c, "oracle", n_max=5).n_max == 5
    with pytest.raises(ValueError):
        distribution(Thermal(1), c, "perturbative", n_max=4)
    with pytest.raises(ValueError):
        distribution(Thermal(1), c, "magic")

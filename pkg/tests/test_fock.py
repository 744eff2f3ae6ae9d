import math

import numpy as np
import pytest
from scipy.special import comb

from acoherence.fock import (
    FockDensity,
    FockVector,
    beamsplitter_generator,
    beamsplitter_unitary,
    evolve_joint,
    excitation_columns,
    exp_number,
    ladder_ops,
    moment,
    number_op,
    transfer_matrix,
)
from acoherence.states import Coherent, to_fock


def test_ladder_commutator_is_identity_except_last_level():
    a, ad = ladder_ops(6)
    comm = a @ ad - ad @ a
    expected = np.eye(6)
    expected[-1, -1] = 1 - 6
    assert np.allclose(comm, expected)
    assert np.allclose(ad @ a, number_op(6))


def test_ladder_rejects_tiny_dimension():
    with pytest.raises(ValueError):
        ladder_ops(1)


@pytest.mark.parametrize("kappa", [0.0, 0.05, 0.7, 2.0])
def test_beamsplitter_is_unitary(kappa):
    u = beamsplitter_unitary(kappa, 7, 5)
    assert np.max(np.abs(u.conj().T @ u - np.eye(35))) < 1e-10


def test_generator_conserves_total_number():
    h = beamsplitter_generator(5, 5)
    n_tot = np.kron(number_op(5), np.eye(5)) + np.kron(np.eye(5), number_op(5))
    # the truncation only breaks conservation at the edges of the box
    comm = h @ n_tot - n_tot @ h
    assert np.allclose(comm, 0)


@pytest.mark.parametrize("bad", [-0.1, math.inf, math.nan])
def test_beamsplitter_rejects_bad_kappa(bad):
    with pytest.raises(ValueError):
        beamsplitter_unitary(bad, 3, 3)


def test_block_columns_match_binomial_law():
    kappa = 0.37
    t = transfer_matrix(kappa, 40, 41)
    c, s = math.cos(kappa) ** 2, math.sin(kappa) ** 2
    for m in (0, 1, 7, 40):
        k = np.arange(m + 1)
        assert np.allclose(t[m, : m + 1], comb(m, k) * s ** k * c ** (m - k), atol=1e-14)
        assert np.all(t[m, m + 1:] == 0)


def test_block_columns_match_dense_propagator():
    kappa, d = 0.6, 8
    u = beamsplitter_unitary(kappa, d, d)
    cols = excitation_columns(kappa, d - 1, d)
    for m in range(d):
        for k in range(m + 1):
            dense = u[(m - k) * d + k, m * d + 0]
            assert abs(dense - cols[m, k]) < 1e-12


def test_coherent_input_factorizes_into_product_of_coherent_states():
    alpha, kappa, dim = 1.1 + 0.3j, 0.4, 30
    psi = to_fock(Coherent(alpha), dim)
    joint = evolve_joint(psi, kappa, dim)
    det = joint.detector_marginal()
    assert abs(np.trace(det @ det).real - 1.0) < 1e-8
    target = to_fock(Coherent(-1j * alpha * math.sin(kappa)), dim).amplitudes
    assert abs(np.vdot(target, det @ target).real - 1.0) < 1e-8
    fld = joint.field_marginal()
    target = to_fock(Coherent(alpha * math.cos(kappa)), dim).amplitudes
    assert abs(np.vdot(target, fld @ target).real - 1.0) < 1e-8


def test_fock_vector_and_density_validation():
    with pytest.raises(ValueError):
        FockVector([1.0, 1.0])
    with pytest.raises(ValueError):
        FockDensity(np.array([[0.5, 0.4], [0.0, 0.5]]))
    with pytest.raises(ValueError):
        FockDensity(np.diag([1.2, -0.2]))
    rho = FockDensity(np.diag([0.5, 0.5 - 1e-12]), tail=1e-12)
    assert rho.dim == 2


def test_moments_and_exp_number_of_fock_state():
    psi = FockVector(np.eye(6)[3])
    assert moment(psi, 1) == pytest.approx(3)
    assert moment(psi, 2) == pytest.approx(6)
    assert moment(psi, 3) == pytest.approx(6)
    assert moment(psi, 4) == pytest.approx(0)
    assert moment(psi.density(), 2) == pytest.approx(6)
    assert exp_number(psi, 0.2) == pytest.approx(math.exp(-0.6))

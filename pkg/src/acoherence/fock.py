"""Truncated Fock-space primitives for the field mode and the detector mode.

Everything here works with explicit matrices in the number basis. The
field-detector coupling kappa*(a^dag b + a b^dag) conserves the total number of
quanta, which :func:`excitation_columns` uses to evolve every block
``{|m-k, k>}`` exactly; :func:`beamsplitter_unitary` builds the same propagator
as one dense matrix on the full tensor product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal, expm
from scipy.sparse.linalg import expm_multiply

HERMITIAN_TOL = 1e-9
EIGEN_BLOCK_LIMIT = 160  # cached eigensystems up to here use about 11 MB


def ladder_ops(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Lowering and raising operators truncated to ``dim`` levels.

    ``a[n-1, n] = sqrt(n)``. The commutator ``[a, a^dag]`` equals the identity
    except in the last diagonal entry, where truncation leaves ``1 - dim``.
    """
    dim = int(dim)
    if dim < 2:
        raise ValueError(f"ladder operators need dim >= 2, got {dim}")
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    return a, a.conj().T


def number_op(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


@dataclass
class FockVector:
    """Pure state amplitudes in the number basis, plus the truncated tail mass."""

    amplitudes: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).ravel()
        if self.dim < 1:
            raise ValueError("FockVector needs at least one amplitude")
        norm = float(np.vdot(self.amplitudes, self.amplitudes).real)
        if abs(norm + self.tail - 1.0) > HERMITIAN_TOL:
            raise ValueError(f"squared norm {norm:.12g} plus tail {self.tail:.3g} is not 1")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def density(self) -> FockDensity:
        psi = self.amplitudes
        return FockDensity(np.outer(psi, psi.conj()), tail=self.tail)


@dataclass
class FockDensity:
    """Density matrix in the number basis, plus the truncated tail mass."""

    matrix: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        tr = float(np.trace(m).real)
        if abs(tr + self.tail - 1.0) > HERMITIAN_TOL:
            raise ValueError(f"trace {tr:.12g} plus tail {self.tail:.3g} is not 1")
        off = m - np.diag(np.diag(m))
        lowest = np.diag(m).real.min() if not off.any() else np.linalg.eigvalsh(m).min()
        if lowest < -HERMITIAN_TOL:
            raise ValueError("density matrix has negative eigenvalues")
        self.matrix = m

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def probabilities(self) -> np.ndarray:
        return np.clip(np.diag(self.matrix).real, 0.0, None)


def as_density(state: FockVector | FockDensity) -> FockDensity:
    return state.density() if isinstance(state, FockVector) else state


def moment(state: FockVector | FockDensity, j: int) -> float:
    """<a^dag^j a^j> = sum_n n!/(n-j)! p_n, since a^dag^j a^j is diagonal."""
    if j == 0:
        return 1.0 - state.tail
    n = np.arange(state.dim, dtype=float)
    falling = np.ones(state.dim)
    for i in range(j):
        falling *= np.clip(n - i, 0.0, None)
    return float(np.dot(falling, state.probabilities()))


def exp_number(state: FockVector | FockDensity, lam: float) -> float:
    """<exp(-lam a^dag a)> in the truncated basis."""
    weights = np.exp(-lam * np.arange(state.dim))
    return float(np.dot(weights, state.probabilities()))


def beamsplitter_generator(d_f: int, d_d: int) -> np.ndarray:
    """a^dag (x) b + a (x) b^dag on the field (x) detector product space."""
    a, ad = ladder_ops(d_f)
    b, bd = ladder_ops(d_d)
    return np.kron(ad, b) + np.kron(a, bd)


def beamsplitter_unitary(kappa: float, d_f: int, d_d: int) -> np.ndarray:
    """Dense propagator exp(-i kappa (a^dag b + a b^dag)), Pade-13 scaling and squaring."""
    if not math.isfinite(kappa):
        raise ValueError(f"kappa must be finite, got {kappa!r}")
    if kappa < 0:
        raise ValueError(f"kappa must be non-negative, got {kappa!r}")
    return expm(-1j * kappa * beamsplitter_generator(d_f, d_d))


@dataclass
class JointState:
    """Density matrix on field (x) detector, field index major."""

    matrix: np.ndarray
    dims: tuple[int, int]

    def __post_init__(self):
        d_f, d_d = self.dims
        if self.matrix.shape != (d_f * d_d, d_f * d_d):
            raise ValueError("matrix shape does not match dims")

    def _tensor(self) -> np.ndarray:
        d_f, d_d = self.dims
        return self.matrix.reshape(d_f, d_d, d_f, d_d)

    def field_marginal(self) -> np.ndarray:
        return np.einsum("ikjk->ij", self._tensor())

    def detector_marginal(self) -> np.ndarray:
        return np.einsum("kikj->ij", self._tensor())

    def detector_probabilities(self) -> np.ndarray:
        return np.clip(np.diag(self.detector_marginal()).real, 0.0, None)


def evolve_joint(state: FockVector | FockDensity, kappa: float, d_d: int) -> JointState:
    """U (rho (x) |0><0|) U^dag with the dense propagator."""
    rho = as_density(state).matrix
    d_f = rho.shape[0]
    vac = np.zeros((d_d, d_d), dtype=complex)
    vac[0, 0] = 1.0
    u = beamsplitter_unitary(kappa, d_f, d_d)
    return JointState(u @ np.kron(rho, vac) @ u.conj().T, (d_f, d_d))


def _block_generator(m_max: int) -> sp.csr_matrix:
    # Direct sum over m = 0..m_max of the (m+1)-dim blocks {|m-k, k>}; block m
    # starts at offset m(m+1)/2.
    rows, cols, vals = [], [], []
    for m in range(1, m_max + 1):
        off = m * (m + 1) // 2
        k = np.arange(m)
        v = np.sqrt((m - k) * (k + 1.0))
        rows.append(off + k + 1)
        cols.append(off + k)
        vals.append(v)
    size = (m_max + 1) * (m_max + 2) // 2
    if not rows:
        return sp.csr_matrix((size, size))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    h = sp.coo_matrix((np.concatenate([v, v]), (np.concatenate([r, c]), np.concatenate([c, r]))),
                      shape=(size, size))
    return h.tocsr()


def excitation_columns(kappa: float, m_max: int, n_rows: int) -> np.ndarray:
    """Amplitudes <m-k, k| U |m, 0> for m = 0..m_max and k = 0..n_rows-1.

    Each number-conserving block is complete, so the result carries no
    truncation error in either mode. Entries with k > m are zero. Small
    problems diagonalize every (tridiagonal) block; large ones apply
    ``expm_multiply`` to the direct sum of blocks.
    """
    if not math.isfinite(kappa) or kappa < 0:
        raise ValueError(f"kappa must be finite and non-negative, got {kappa!r}")
    out = np.zeros((m_max + 1, n_rows), dtype=complex)
    if kappa == 0.0 or m_max == 0:
        out[:, 0] = 1.0
        return out
    if m_max <= EIGEN_BLOCK_LIMIT:
        for m in range(m_max + 1):
            top = min(m, n_rows - 1)
            out[m, : top + 1] = _block_column(kappa, m)[: top + 1]
        return out
    h = _block_generator(m_max)
    offsets = np.array([m * (m + 1) // 2 for m in range(m_max + 1)])
    v0 = np.zeros(h.shape[0], dtype=complex)
    v0[offsets] = 1.0
    w = expm_multiply(-1j * kappa * h, v0)
    for m in range(m_max + 1):
        top = min(m, n_rows - 1)
        out[m, : top + 1] = w[offsets[m] : offsets[m] + top + 1]
    return out


@lru_cache(maxsize=None)
def _block_eigensystem(m: int) -> tuple[np.ndarray, np.ndarray]:
    # H_m, the tridiagonal block on {|m-k, k>}, does not depend on kappa
    k = np.arange(m)
    w, v = eigh_tridiagonal(np.zeros(m + 1), np.sqrt((m - k) * (k + 1.0)))
    w.flags.writeable = False
    v.flags.writeable = False
    return w, v


def _block_column(kappa: float, m: int) -> np.ndarray:
    # exp(-i kappa H_m)|m, 0>
    if m == 0:
        return np.ones(1, dtype=complex)
    w, v = _block_eigensystem(m)
    return v @ (np.exp(-1j * kappa * w) * v[0])


def transfer_matrix(kappa: float, m_max: int, n_rows: int) -> np.ndarray:
    """Probabilities T[m, k] that m input quanta leave k quanta in the detector."""
    return np.abs(excitation_columns(kappa, m_max, n_rows)) ** 2

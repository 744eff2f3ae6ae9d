"""Field states, their Fock and phase-space representations, and closed-form moments.

Quadratures follow x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)), so the
vacuum has covariance I/2. A :class:`Gaussian` state is a thermal state that is
squeezed by ``r e^{i phi}`` and then displaced by ``x0`` along the x axis.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from acoherence.core import TruncationError
from acoherence.fock import FockDensity, FockVector, ladder_ops

TAIL_BOUND = 1e-10
ACCURACY_TAIL = 1e-16
MAX_DIM = 4096
SCHEMA_VERSION = 1


def _check_real(name, value, nonneg=False):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if nonneg and value < 0:
        raise ValueError(f"{name} must be non-negative, got {value!r}")


@dataclass(frozen=True)
class Coherent:
    alpha: complex = 0j
    kind = "coherent"

    def __post_init__(self):
        a = complex(self.alpha)
        if not (math.isfinite(a.real) and math.isfinite(a.imag)):
            raise ValueError(f"alpha must be finite, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)


@dataclass(frozen=True)
class Fock:
    n: int = 0
    kind = "fock"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"Fock level must be a non-negative integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class Thermal:
    n_th: float
    kind = "thermal"

    def __post_init__(self):
        _check_real("n_th", self.n_th, nonneg=True)


@dataclass(frozen=True)
class SqueezedVacuum:
    r: float
    kind = "squeezed"

    def __post_init__(self):
        _check_real("r", self.r, nonneg=True)


@dataclass(frozen=True)
class Gaussian:
    """Displaced (along x by ``x0``), squeezed (``r``, ``phi``) thermal (``n_th``) state."""

    x0: float = 0.0
    r: float = 0.0
    phi: float = 0.0
    n_th: float = 0.0
    kind = "gaussian"

    def __post_init__(self):
        _check_real("x0", self.x0)
        _check_real("r", self.r, nonneg=True)
        _check_real("phi", self.phi)
        _check_real("n_th", self.n_th, nonneg=True)


@dataclass(frozen=True, eq=False)
class Custom:
    """Pure state given by explicit Fock amplitudes (normalized on construction)."""

    amplitudes: tuple
    kind = "custom"

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amps.size == 0 or not np.all(np.isfinite(amps)):
            raise ValueError("custom amplitudes must be a non-empty list of finite numbers")
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("custom amplitudes are all zero")
        object.__setattr__(self, "amplitudes", tuple(complex(a) for a in amps / norm))

    def vector(self) -> np.ndarray:
        return np.array(self.amplitudes, dtype=complex)


FieldState = Union[Coherent, Fock, Thermal, SqueezedVacuum, Gaussian, Custom]
STATE_TYPES = (Coherent, Fock, Thermal, SqueezedVacuum, Gaussian, Custom)


# ---------------------------------------------------------------------------
# construction


def _parse_complex(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))


def _parse_shorthand(text: str) -> dict:
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    args = [s for s in rest.split(",") if s.strip()] if rest else []
    if kind in ("coherent", "coh"):
        return {"kind": "coherent", "alpha": _parse_complex(args[0]) if args else 0j}
    if kind == "fock":
        return {"kind": "fock", "n": int(args[0]) if args else 0}
    if kind == "vacuum":
        return {"kind": "fock", "n": 0}
    if kind == "thermal":
        return {"kind": "thermal", "n_th": float(args[0])}
    if kind in ("squeezed", "squeezed_vacuum", "sqv"):
        return {"kind": "squeezed", "r": float(args[0])}
    if kind == "gaussian":
        names = ("x0", "r", "phi", "n_th")
        if len(args) > 4:
            raise ValueError("gaussian takes at most x0,r,phi,n_th")
        return {"kind": "gaussian", **{n: float(v) for n, v in zip(names, args)}}
    if kind == "custom":
        return {"kind": "custom", "amplitudes": [_parse_complex(a) for a in args]}
    raise ValueError(f"unknown state kind {kind!r}")


def make_state(spec) -> FieldState:
    """Validate a state description and return its canonical form.

    ``spec`` may be a state object, a ``kind:params`` shorthand string
    (``thermal:0.5``, ``coherent:1+0.5i``, ``gaussian:x0,r,phi,n_th``), a JSON
    string, or a dict with a ``kind`` key. Degenerate Gaussians and the
    unsqueezed vacuum are reduced to the simpler kinds they equal.
    """
    if isinstance(spec, STATE_TYPES):
        state = spec
    else:
        if isinstance(spec, str):
            text = spec.strip()
            spec = json.loads(text) if text.startswith("{") else _parse_shorthand(text)
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ValueError("state document needs a 'kind'")
        spec = dict(spec)
        version = spec.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported state schema version {version}")
        kind = str(spec.pop("kind")).lower()
        try:
            if kind == "coherent":
                a = spec.get("alpha", 0j)
                if isinstance(a, str):
                    a = _parse_complex(a)
                elif isinstance(a, (list, tuple)):
                    a = complex(a[0], a[1])
                state = Coherent(complex(a))
            elif kind == "fock":
                state = Fock(spec["n"])
            elif kind == "thermal":
                state = Thermal(float(spec["n_th"]))
            elif kind in ("squeezed", "squeezed_vacuum"):
                state = SqueezedVacuum(float(spec["r"]))
            elif kind == "gaussian":
                state = Gaussian(**{k: float(v) for k, v in spec.items()})
            elif kind == "custom":
                amps = [_parse_complex(a) if isinstance(a, str) else
                        complex(*a) if isinstance(a, (list, tuple)) else complex(a)
                        for a in spec["amplitudes"]]
                state = Custom(tuple(amps))
            else:
                raise ValueError(f"unknown state kind {kind!r}")
        except (KeyError, TypeError) as exc:
            raise ValueError(f"bad parameters for {kind} state: {exc}") from None
    return _reduce(state)


def _reduce(state: FieldState) -> FieldState:
    if isinstance(state, Gaussian):
        if state.r == 0 and state.x0 == 0:
            return Thermal(state.n_th)
        if state.r == 0 and state.n_th == 0:
            return Coherent(complex(state.x0 / math.sqrt(2), 0.0))
        if state.x0 == 0 and state.n_th == 0:
            return _reduce(SqueezedVacuum(state.r))
    if isinstance(state, SqueezedVacuum) and state.r == 0:
        return Fock(0)
    return state


def state_to_dict(state: FieldState) -> dict:
    """JSON-ready description that :func:`make_state` reads back."""
    d = {"schema_version": SCHEMA_VERSION, "kind": state.kind}
    if isinstance(state, Coherent):
        d["alpha"] = [state.alpha.real, state.alpha.imag]
    elif isinstance(state, Fock):
        d["n"] = state.n
    elif isinstance(state, Thermal):
        d["n_th"] = state.n_th
    elif isinstance(state, SqueezedVacuum):
        d["r"] = state.r
    elif isinstance(state, Gaussian):
        d.update(x0=state.x0, r=state.r, phi=state.phi, n_th=state.n_th)
    else:
        d["amplitudes"] = [[c.real, c.imag] for c in state.amplitudes]
    return d


# ---------------------------------------------------------------------------
# P representation


@dataclass(frozen=True)
class PDelta:
    """P(beta) = delta^2(beta - alpha)."""

    alpha: complex


@dataclass(frozen=True)
class PThermal:
    """P(beta) = exp(-|beta|^2 / n_th) / (pi n_th)."""

    n_th: float


def p_function(state: FieldState) -> PDelta | PThermal | None:
    """Closed-form P function when one exists, else ``None``."""
    state = _reduce(state)
    if isinstance(state, Coherent):
        return PDelta(state.alpha)
    if isinstance(state, Fock) and state.n == 0:
        return PDelta(0j)
    if isinstance(state, Thermal):
        return PDelta(0j) if state.n_th == 0 else PThermal(state.n_th)
    return None


# ---------------------------------------------------------------------------
# phase space


@dataclass(frozen=True)
class GaussianPhaseSpace:
    """Mean quadrature vector (x, p) and covariance matrix, vacuum covariance I/2."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(2)
        cov = np.asarray(self.cov, dtype=float).reshape(2, 2)
        if not np.allclose(cov, cov.T, atol=1e-12, rtol=0):
            raise ValueError("covariance matrix must be symmetric")
        if np.linalg.eigvalsh(cov).min() <= 0:
            raise ValueError("covariance matrix must be positive definite")
        if np.linalg.det(cov) < 0.25 - 1e-9:
            raise ValueError("covariance violates the uncertainty bound det V >= 1/4")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))

    @property
    def alpha(self) -> complex:
        return complex(self.mean[0], self.mean[1]) / math.sqrt(2)

    @property
    def thermal_part(self) -> float:
        """<da^dag da> of the fluctuations."""
        return 0.5 * (self.cov[0, 0] + self.cov[1, 1] - 1.0)

    @property
    def anomalous_part(self) -> complex:
        """<da da> of the fluctuations."""
        v = self.cov
        return 0.5 * complex(v[0, 0] - v[1, 1], 2.0 * v[0, 1])

    def mean_occupation(self) -> float:
        return abs(self.alpha) ** 2 + self.thermal_part

    def normal_moment(self, j: int) -> float:
        """<a^dag^j a^j> via Wick's theorem on the normally ordered fluctuations."""
        a = self.alpha
        nbar = self.thermal_part
        m = self.anomalous_part
        total = 0j
        for k in range(j + 1):
            for l in range(j + 1):
                e = _wick_normal(k, l, nbar, m)
                if e != 0:
                    total += (math.comb(j, k) * math.comb(j, l)
                              * a.conjugate() ** (j - k) * a ** (j - l) * e)
        return float(total.real)


def _double_factorial_odd(n: int) -> int:
    # (n-1)!! for even n, the number of perfect matchings of n items
    out = 1
    for i in range(n - 1, 0, -2):
        out *= i
    return out


def _wick_normal(k: int, l: int, nbar: float, m: complex) -> complex:
    # E[da^dag^k da^l] for zero-mean Gaussian fluctuations, normally ordered.
    total = 0j
    for c in range(min(k, l) + 1):
        if (k - c) % 2 or (l - c) % 2:
            continue
        count = (math.comb(k, c) * math.comb(l, c) * math.factorial(c)
                 * _double_factorial_odd(k - c) * _double_factorial_odd(l - c))
        total += count * m.conjugate() ** ((k - c) // 2) * m ** ((l - c) // 2) * nbar ** c
    return total


def squeezed_thermal_cov(r: float, phi: float, n_th: float) -> np.ndarray:
    ch, sh = math.cosh(2 * r), math.sinh(2 * r)
    c, s = math.cos(phi), math.sin(phi)
    return (2 * n_th + 1) / 2 * np.array([[ch - c * sh, -s * sh], [-s * sh, ch + c * sh]])


def to_gaussian(state: FieldState) -> GaussianPhaseSpace:
    """Phase-space form of a Gaussian state; coherent displacements are rotated onto x."""
    if isinstance(state, Coherent):
        return GaussianPhaseSpace([math.sqrt(2) * abs(state.alpha), 0.0], 0.5 * np.eye(2))
    if isinstance(state, Fock) and state.n == 0:
        return GaussianPhaseSpace([0.0, 0.0], 0.5 * np.eye(2))
    if isinstance(state, Thermal):
        return GaussianPhaseSpace([0.0, 0.0], squeezed_thermal_cov(0.0, 0.0, state.n_th))
    if isinstance(state, SqueezedVacuum):
        return GaussianPhaseSpace([0.0, 0.0], squeezed_thermal_cov(state.r, 0.0, 0.0))
    if isinstance(state, Gaussian):
        return GaussianPhaseSpace([state.x0, 0.0], squeezed_thermal_cov(state.r, state.phi, state.n_th))
    raise ValueError(f"{state.kind} state is not Gaussian")


# ---------------------------------------------------------------------------
# moments


def mean_occupation(state: FieldState) -> float:
    if isinstance(state, Coherent):
        return abs(state.alpha) ** 2
    if isinstance(state, Fock):
        return float(state.n)
    if isinstance(state, Thermal):
        return state.n_th
    if isinstance(state, SqueezedVacuum):
        return math.sinh(state.r) ** 2
    if isinstance(state, Gaussian):
        return to_gaussian(state).mean_occupation()
    v = state.vector()
    return float(np.dot(np.arange(v.size), np.abs(v) ** 2))


def analytic_moments(state: FieldState, j: int) -> float:
    """Normally ordered moment <a^dag^j a^j> in closed form (j = 0..4)."""
    if not 0 <= j <= 4:
        raise ValueError(f"moment order must be in 0..4, got {j}")
    if j == 0:
        return 1.0
    if isinstance(state, Coherent):
        return abs(state.alpha) ** (2 * j)
    if isinstance(state, Fock):
        return float(math.perm(state.n, j)) if state.n >= j else 0.0
    if isinstance(state, Thermal):
        return math.factorial(j) * state.n_th ** j
    if isinstance(state, (SqueezedVacuum, Gaussian)):
        return to_gaussian(state).normal_moment(j)
    from acoherence.oracle import normal_ordered_moment

    return normal_ordered_moment(state, j)


def mandel_q_field(state: FieldState) -> float:
    from acoherence.core import UndefinedStatisticError

    m1 = analytic_moments(state, 1)
    if m1 <= 0:
        raise UndefinedStatisticError("Mandel Q is undefined for the vacuum (<n> = 0)")
    return (analytic_moments(state, 2) - m1 * m1) / m1


# ---------------------------------------------------------------------------
# Fock representation


def initial_dim(state: FieldState, tail_bound: float = TAIL_BOUND) -> int:
    """Starting truncation for :func:`auto_fock`.

    Aims for a tail near double precision (``ACCURACY_TAIL``) so truncation
    does not show up in oracle comparisons, falling back to ``tail_bound`` when
    that would exceed ``MAX_DIM``. Thermal and coherent tails are known
    exactly; other Gaussian number distributions decay geometrically with
    ratio (v - 1/2)/(v + 1/2), v the largest covariance eigenvalue.
    """
    for target in (min(ACCURACY_TAIL, tail_bound), tail_bound):
        dim = _dim_for_tail(state, target)
        if dim <= MAX_DIM:
            return dim
    return dim


def _dim_for_tail(state: FieldState, target: float) -> int:
    nbar = mean_occupation(state)
    generic = int(math.ceil(nbar + 8.0 * math.sqrt(nbar + 1.0) + 12.0))
    if isinstance(state, Thermal) and state.n_th > 0:
        q = state.n_th / (1.0 + state.n_th)
        return max(2, int(math.ceil(math.log(target) / math.log(q))))
    if isinstance(state, Coherent):
        return max(2, int(poisson.isf(target, abs(state.alpha) ** 2)) + 2)
    if isinstance(state, (SqueezedVacuum, Gaussian)):
        g = to_gaussian(state)
        v = float(np.linalg.eigvalsh(g.cov).max())
        q = (v - 0.5) / (v + 0.5)
        if q > 0:
            shift = abs(g.alpha) ** 2
            geometric = math.log(target * (1.0 - q) / 10.0) / math.log(q)
            return max(generic, int(math.ceil(shift + 4.0 * math.sqrt(shift) + geometric)))
    return generic


def _coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    if alpha == 0:
        out = np.zeros(dim, dtype=complex)
        out[0] = 1.0
        return out
    mag = abs(alpha)
    logmag = -0.5 * mag * mag + n * math.log(mag) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * cmath.phase(alpha))


def _squeezed_amplitudes(r: float, phi: float, dim: int) -> np.ndarray:
    out = np.zeros(dim, dtype=complex)
    m = np.arange((dim + 1) // 2)
    t = math.tanh(r)
    if t == 0:
        out[0] = 1.0
        return out
    logmag = (-0.5 * math.log(math.cosh(r)) + m * math.log(t)
              + 0.5 * gammaln(2 * m + 1) - m * math.log(2.0) - gammaln(m + 1))
    out[2 * m] = np.exp(logmag) * (-cmath.exp(1j * phi)) ** m
    return out


def _unitary_from_antihermitian(g: np.ndarray) -> np.ndarray:
    # exp(g) for anti-Hermitian g via the eigenbasis of the Hermitian matrix i*g
    w, v = np.linalg.eigh(1j * g)
    return (v * np.exp(-1j * w)) @ v.conj().T


def _gaussian_density(state: Gaussian, dim: int) -> np.ndarray:
    # Built in a padded space so edge artefacts of the truncated generators stay
    # far above the returned block.
    big = dim + dim // 4 + 40
    a, ad = ladder_ops(big)
    k = np.arange(big)
    nt = state.n_th
    if nt > 0:
        p = np.exp(k * math.log(nt) - (k + 1) * math.log1p(nt))
    else:
        p = (k == 0).astype(float)
    zeta = state.r * cmath.exp(1j * state.phi)
    s = _unitary_from_antihermitian(0.5 * (zeta.conjugate() * a @ a - zeta * ad @ ad))
    alpha = state.x0 / math.sqrt(2)
    d = _unitary_from_antihermitian(alpha * ad - alpha * a)
    u = d @ s
    rho = (u * p) @ u.conj().T
    block = rho[:dim, :dim]
    return 0.5 * (block + block.conj().T)


def to_fock(state: FieldState, dim: int, tail_bound: float = TAIL_BOUND) -> FockVector | FockDensity:
    """Number-basis representation on ``dim`` levels.

    Raises :class:`TruncationError` when more than ``tail_bound`` of the
    probability lies at or above level ``dim``.
    """
    dim = int(dim)
    if dim < 1:
        raise ValueError("dim must be positive")
    if isinstance(state, Coherent):
        amps = _coherent_amplitudes(state.alpha, dim)
        tail = float(poisson.sf(dim - 1, abs(state.alpha) ** 2))
        out = FockVector(amps, tail=_check_tail(tail, tail_bound, state, dim))
    elif isinstance(state, Fock):
        if state.n >= dim:
            raise TruncationError(f"Fock level {state.n} needs dim > {state.n}", 1.0, state.n + 1)
        amps = np.zeros(dim, dtype=complex)
        amps[state.n] = 1.0
        out = FockVector(amps)
    elif isinstance(state, Thermal):
        k = np.arange(dim)
        nt = state.n_th
        if nt == 0:
            p, tail = (k == 0).astype(float), 0.0
        else:
            q = nt / (1.0 + nt)
            p = q ** k / (1.0 + nt)
            tail = q ** dim
        out = FockDensity(np.diag(p).astype(complex), tail=_check_tail(tail, tail_bound, state, dim))
    elif isinstance(state, SqueezedVacuum):
        amps = _squeezed_amplitudes(state.r, 0.0, dim)
        tail = max(0.0, 1.0 - float(np.sum(np.abs(amps) ** 2)))
        out = FockVector(amps, tail=_check_tail(tail, tail_bound, state, dim))
    elif isinstance(state, Gaussian):
        rho = _gaussian_density(state, dim)
        tail = max(0.0, 1.0 - float(np.trace(rho).real))
        _check_tail(tail, tail_bound, state, dim)
        out = FockDensity(rho, tail=tail)
    else:
        v = state.vector()
        if v.size > dim:
            tail = float(np.sum(np.abs(v[dim:]) ** 2))
            _check_tail(tail, tail_bound, state, dim)
            out = FockVector(v[:dim], tail=tail)
        else:
            out = FockVector(np.concatenate([v, np.zeros(dim - v.size)]))
    return out


def _check_tail(tail: float, bound: float, state, dim: int) -> float:
    if tail > bound:
        raise TruncationError(
            f"{state.kind} state leaves tail mass {tail:.3g} above level {dim}; "
            f"try dim >= {2 * dim}", tail, 2 * dim)
    return tail


def auto_fock(state: FieldState, tail_bound: float = TAIL_BOUND, max_dim: int = MAX_DIM):
    """:func:`to_fock` at an adaptively chosen dimension.

    Starts at :func:`initial_dim` and doubles until the tail mass
    drops below ``tail_bound``.
    """
    if isinstance(state, Custom):
        return to_fock(state, max(2, len(state.amplitudes)), tail_bound)
    dim = max(initial_dim(state, tail_bound), state.n + 2 if isinstance(state, Fock) else 2)
    dim = min(dim, max(max_dim, state.n + 2 if isinstance(state, Fock) else 2))
    while True:
        try:
            return to_fock(state, dim, tail_bound)
        except TruncationError as exc:
            if dim >= max_dim:
                raise TruncationError(
                    f"tail mass {exc.tail:.3g} still above {tail_bound:g} at dim {dim}",
                    exc.tail, 2 * dim) from None
            dim = min(2 * dim, max_dim)

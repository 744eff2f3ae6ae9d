"""Click statistics of a chain of detectors and a seeded Monte Carlo sampler.

A window of length T = N dt is read out by N short interactions of strength
eps = gamma0 dt. For a coherent field each step clicks independently with
probability eps |alpha|^2, giving binomial counts that become Poisson as
N -> infinity; other fields are Poisson mixtures over their P function.

Windows are independent. Random numbers come from PCG64 streams keyed by
(seed, chunk index), so a record depends only on the seed and never on how
chunks are scheduled across threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom, poisson

from acoherence.states import (
    Coherent,
    FieldState,
    PDelta,
    PThermal,
    mean_occupation,
    p_function,
    state_to_dict,
)

CHUNK = 8192
PMF_TAIL = 1e-15


def pjN_binomial(alpha_sq: float, eps: float, j, n_steps: int):
    """Probability of j clicks in N steps, C(N,j) p^j (1-p)^(N-j) with p = eps |alpha|^2."""
    p = eps * alpha_sq
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"eps*|alpha|^2 = {p:.4g} must lie in [0, 1]; the step model breaks down")
    if n_steps < 1:
        raise ValueError("N must be at least 1")
    return binom.pmf(j, n_steps, p)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    n = max(len(p), len(q))
    p = np.pad(np.asarray(p, float), (0, n - len(p)))
    q = np.pad(np.asarray(q, float), (0, n - len(q)))
    return 0.5 * float(np.abs(p - q).sum()) + 0.5 * abs(float(p.sum() - q.sum()))


def count_pmf(state: FieldState, mu: float, j_max: int | None = None) -> np.ndarray:
    """P(j) for j = 0..j_max of the Poisson mixture with exposure mu = gamma0*T.

    Without ``j_max`` the support is extended until the remaining mass is
    below 1e-15.
    """
    if not math.isfinite(mu) or mu < 0:
        raise ValueError("gamma0*T must be finite and non-negative")
    pf = p_function(state)
    if j_max is None:
        mean = mu * mean_occupation(state)
        j_max = int(mean + 12 * math.sqrt(mean + 1) + 20)
        grow = True
    else:
        grow = False
    while True:
        j = np.arange(j_max + 1)
        if isinstance(pf, PDelta):
            pmf = poisson.pmf(j, abs(pf.alpha) ** 2 * mu)
        elif isinstance(pf, PThermal):
            q = mu * pf.n_th
            pmf = np.exp(j * math.log(q) - (j + 1) * math.log1p(q)) if q > 0 else (j == 0).astype(float)
        else:
            pmf = _number_mixture(state, mu, j_max)
        if not grow or 1.0 - pmf.sum() < PMF_TAIL or j_max > 100000:
            return pmf
        j_max *= 2


def _number_mixture(state, mu, j_max):
    # Normally ordered Poisson transform over the photon-number distribution:
    # a field with m quanta gives Binomial(m, mu) counts.
    from acoherence.oracle import field_number_distribution

    if mu > 1:
        raise ValueError(f"gamma0*T = {mu:.4g} > 1: the {state.kind} count law needs gamma0*T <= 1")
    p, _, dim = field_number_distribution(state)
    m = np.arange(dim)[:, None]
    j = np.arange(j_max + 1)[None, :]
    return p @ binom.pmf(j, m, mu)


def pjT_poisson_mixture(state: FieldState, gamma0: float, T: float, j: int) -> float:
    """P(j, T) = int d^2b P(b) (gamma0 |b|^2 T)^j exp(-gamma0 |b|^2 T) / j!."""
    if j < 0:
        return 0.0
    return float(count_pmf(state, gamma0 * T, j_max=max(j, 0))[j])


@dataclass(frozen=True)
class ClickExperiment:
    """M independent windows, each made of N steps of length dt."""

    state: FieldState
    gamma0: float
    dt: float
    n_steps: int = 1
    windows: int = 1
    seed: int = 0
    mode: str = "poisson"

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("N must be at least 1")
        if self.windows < 1:
            raise ValueError("at least one window is required")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"eps = gamma0*dt = {self.eps:.4g} must lie in [0, 1]")
        if self.mode not in ("poisson", "binomial"):
            raise ValueError("mode must be 'poisson' or 'binomial'")
        if self.mode == "binomial" and not isinstance(self.state, Coherent):
            raise ValueError("the binomial step chain is defined for coherent fields only")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def eps(self) -> float:
        return self.gamma0 * self.dt

    @property
    def T(self) -> float:
        return self.n_steps * self.dt

    @property
    def exposure(self) -> float:
        return self.gamma0 * self.T

    def describe(self) -> dict:
        return {"state": state_to_dict(self.state), "gamma0": self.gamma0, "dt": self.dt,
                "n_steps": self.n_steps, "windows": self.windows, "seed": int(self.seed),
                "mode": self.mode}


def _chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(index,))))


def sample_clicks(experiment: ClickExperiment, workers: int = 1) -> CountRecord:
    """Draw one click count per window; identical output for a given seed."""
    m = experiment.windows
    n_chunks = -(-m // CHUNK)
    if experiment.mode == "binomial":
        p = experiment.eps * abs(experiment.state.alpha) ** 2
        if p > 1:
            raise ValueError(f"eps*|alpha|^2 = {p:.4g} > 1")

        def draw(i):
            size = min(CHUNK, m - i * CHUNK)
            return _chunk_rng(experiment.seed, i).binomial(experiment.n_steps, p, size)
    else:
        cdf = np.cumsum(count_pmf(experiment.state, experiment.exposure))
        cdf /= cdf[-1]

        def draw(i):
            size = min(CHUNK, m - i * CHUNK)
            u = _chunk_rng(experiment.seed, i).random(size)
            return np.searchsorted(cdf, u, side="right")

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(draw, range(n_chunks)))
    else:
        parts = [draw(i) for i in range(n_chunks)]
    counts = np.concatenate(parts).astype(np.int64)
    return CountRecord(counts, experiment.describe())


# ---------------------------------------------------------------------------
# empirical statistics


def _stats_from_hist(h: np.ndarray) -> dict:
    # h[..., v] = number of windows with v clicks; works on stacked histograms.
    v = np.arange(h.shape[-1])
    m = h.sum(axis=-1)
    mean = (h * v).sum(axis=-1) / m
    with np.errstate(divide="ignore", invalid="ignore"):
        var = ((h * v * v).sum(axis=-1) - m * mean * mean) / (m - 1)
        excess = var - mean
        q = excess / mean
        h0 = h[..., 0]
        h1 = h[..., 1] if h.shape[-1] > 1 else np.zeros_like(h0)
        h2 = h[..., 2] if h.shape[-1] > 2 else np.zeros_like(h0)
        r = 2.0 * h2 * h0 / (h1 * h1)
    return {"mean": mean, "variance": var, "excess": excess, "q": q, "r": r}


def _jackknife(h: np.ndarray) -> dict:
    # Leave-one-out replicates are identical within a count value, so one
    # replicate per distinct value, weighted by its multiplicity, suffices.
    m = h.sum()
    vals = np.nonzero(h)[0]
    loo = np.repeat(h[None, :], vals.size, axis=0)
    loo[np.arange(vals.size), vals] -= 1
    reps = _stats_from_hist(loo)
    w = h[vals]
    out = {}
    for name, theta in reps.items():
        if not np.all(np.isfinite(theta)):
            out[name] = None
            continue
        mean_rep = np.dot(w, theta) / m
        out[name] = float(math.sqrt((m - 1) / m * np.dot(w, (theta - mean_rep) ** 2)))
    return out


def _finite(x):
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass
class CountRecord:
    """Per-window click counts with empirical statistics and jackknife errors.

    Statistics that are undefined for the data (R with no single-click
    windows, anything needing a variance from one window) are ``None``.
    """

    counts: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 1 or self.counts.size == 0:
            raise ValueError("counts must be a non-empty 1-d array")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")
        self.histogram = np.bincount(self.counts, minlength=3)
        self.windows = int(self.counts.size)
        self.probs = self.histogram / self.windows
        est = _stats_from_hist(self.histogram.astype(float))
        self.mean = float(est["mean"])
        if self.windows > 1:
            self.variance = _finite(est["variance"])
            self.excess = _finite(est["excess"])
            self.q = _finite(est["q"])
            se = _jackknife(self.histogram.astype(float))
        else:
            self.variance = self.excess = self.q = None
            se = {}
        self.r = _finite(est["r"])
        self.se = {k: se.get(k) for k in ("mean", "variance", "excess", "q", "r")}

    def summary(self) -> dict:
        return {
            "windows": self.windows,
            "probs": [float(p) for p in self.probs],
            "mean": self.mean,
            "variance": self.variance,
            "excess": self.excess,
            "q": self.q,
            "r": self.r,
            "standard_errors": self.se,
            "experiment": self.meta,
        }

    def to_csv(self, fh=None) -> str | None:
        """Write ``window_index,j`` rows; returns the text when no file is given."""
        buf = io.StringIO() if fh is None else fh
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["window_index", "j"])
        w.writerows(zip(range(self.windows), self.counts.tolist()))
        return buf.getvalue() if fh is None else None

    @classmethod
    def from_csv(cls, fh, meta: dict | None = None) -> CountRecord:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["window_index", "j"]:
            raise ValueError("expected header 'window_index,j'")
        rows = sorted((int(r["window_index"]), int(r["j"])) for r in reader)
        return cls(np.array([j for _, j in rows], dtype=np.int64), meta or {})

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2)

"""Two-Wasserstein geometry of probability measures on the real line.

A measure is stored through its quantile function sampled at the cell
midpoints ``(i - 1/2)/K``. In these coordinates W2 is the root mean square
difference, geodesics are linear interpolations, barycenters are weighted
averages, and the optimal map between two measures is the monotone
rearrangement, whose slope gives the strong convexity of the potential.
"""

import csv
import json
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .exceptions import DegenerateMeasureError, DomainError

VARIANCE_TOL = 1e-8
DEFAULT_K = 1024


def quantile_grid(K=DEFAULT_K):
    return (np.arange(int(K)) + 0.5) / int(K)


@dataclass(frozen=True)
class QuantileMeasure:
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 1 or len(q) == 0:
            raise ValueError("quantiles must be a nonempty vector")
        if not np.all(np.isfinite(q)):
            raise DomainError("quantiles must be finite")
        if np.any(np.diff(q) < 0):
            raise DomainError("quantiles must be nondecreasing")
        object.__setattr__(self, "q", q)

    @property
    def K(self):
        return len(self.q)

    @classmethod
    def from_samples(cls, x, K=DEFAULT_K):
        return cls(np.quantile(np.asarray(x, dtype=float), quantile_grid(K)))

    @classmethod
    def from_ppf(cls, ppf, K=DEFAULT_K):
        return cls(ppf(quantile_grid(K)))

    @classmethod
    def dirac(cls, x, K=DEFAULT_K):
        return cls(np.full(int(K), float(x)))

    def shifted(self, c):
        return QuantileMeasure(self.q + c)

    def mean(self):
        return float(np.mean(self.q))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["q"])
            for v in self.q:
                w.writerow([repr(float(v))])

    @classmethod
    def from_csv(cls, path):
        return cls(np.loadtxt(path, delimiter=",", skiprows=1, ndmin=1))


def _q(mu):
    return mu.q if isinstance(mu, QuantileMeasure) else np.asarray(mu, dtype=float)


def w2(mu, nu):
    a, b = _q(mu), _q(nu)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"quantile lengths differ: {a.shape[-1]} vs {b.shape[-1]}")
    return np.sqrt(np.mean((a - b) ** 2, axis=-1))


def w2_sq(mu, nu):
    a, b = _q(mu), _q(nu)
    if a.shape[-1] != b.shape[-1]:
        raise ValueError(f"quantile lengths differ: {a.shape[-1]} vs {b.shape[-1]}")
    return np.mean((a - b) ** 2, axis=-1)


@dataclass(frozen=True)
class MetaMeasure:
    """Finite mixture of Dirac masses on quantile vectors: ``quantiles`` has
    one row per atom and ``weights`` sums to one."""

    quantiles: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.quantiles, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(q),):
            raise ValueError("one weight per atom is required")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        s = w.sum()
        if not s > 0:
            raise DegenerateMeasureError("all weights are zero")
        if np.any(np.diff(q, axis=1) < 0):
            raise DomainError("every atom must have nondecreasing quantiles")
        object.__setattr__(self, "quantiles", q)
        object.__setattr__(self, "weights", w / s)

    @classmethod
    def from_measures(cls, mus, weights=None):
        q = np.stack([_q(m) for m in mus])
        w = np.ones(len(q)) if weights is None else weights
        return cls(q, w)

    def __len__(self):
        return len(self.weights)

    @property
    def K(self):
        return self.quantiles.shape[1]

    def atom(self, i):
        return QuantileMeasure(self.quantiles[i])

    @property
    def delta(self):
        """Largest W2 distance between two atoms."""
        q = self.quantiles
        d2 = np.mean((q[:, None, :] - q[None, :, :]) ** 2, axis=-1)
        return float(np.sqrt(np.max(d2)))

    def save(self, directory):
        os.makedirs(directory, exist_ok=True)
        files = []
        for i in range(len(self)):
            name = f"atom_{i:04d}.csv"
            self.atom(i).to_csv(os.path.join(directory, name))
            files.append(name)
        with open(os.path.join(directory, "weights.json"), "w") as fh:
            json.dump({"files": files, "weights": [float(w) for w in self.weights]}, fh, indent=2)

    @classmethod
    def load(cls, directory):
        with open(os.path.join(directory, "weights.json")) as fh:
            meta = json.load(fh)
        mus = [QuantileMeasure.from_csv(os.path.join(directory, f)) for f in meta["files"]]
        return cls.from_measures(mus, meta["weights"])


def w2_barycenter(P):
    return QuantileMeasure(P.weights @ P.quantiles)


def barycentric_variance(P, mu_star=None):
    mu_star = w2_barycenter(P) if mu_star is None else mu_star
    return float(P.weights @ w2_sq(P.quantiles, mu_star))


def potential_strong_convexity(mu_star, nu):
    """Smallest cell slope of the monotone map from ``mu_star`` to ``nu``."""
    a, b = _q(mu_star), _q(nu)
    if a.shape != b.shape:
        raise ValueError("quantile lengths differ")
    da = np.diff(a)
    if np.any(da <= 0):
        raise DegenerateMeasureError("mu_star has an atom (a zero-length quantile cell)")
    return float(max(np.min(np.diff(b) / da), 0.0))


def _in_support(P, mu, tol=1e-12):
    return bool(np.min(w2(P.quantiles, mu)) <= tol * (1.0 + np.max(np.abs(_q(mu)))))


def max_beta(P):
    """Upper end 8 V*_P / Delta^4 of the admissible temperature range."""
    delta = P.delta
    if delta == 0:
        return math.inf
    return 8.0 * barycentric_variance(P) / delta**4


@dataclass(frozen=True)
class VarianceReport:
    lhs: float
    rhs: float
    C_var: float
    V_star: float
    Delta: float
    passed: bool
    conclusive: bool = True
    in_support: bool = True

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "C_var": self.C_var, "V_star": self.V_star,
                "Delta": self.Delta, "pass": self.passed, "conclusive": self.conclusive,
                "in_support": self.in_support}


def _cvar(P, mu_star):
    return float(sum(w * potential_strong_convexity(mu_star, q) for w, q in zip(P.weights, P.quantiles)))


def variance_inequality_check(P, mu, beta, tol=VARIANCE_TOL):
    """Mixability surrogate W2^2(mu*, mu) <= -(1/(C_var beta)) ln sum_i w_i exp(-beta W2^2(mu, mu_i)).

    ``beta`` must not exceed 8 V*_P / Delta^4 (up to rounding).
    """
    if not beta > 0:
        raise DomainError("beta must be positive")
    mu_star = w2_barycenter(P)
    v_star = barycentric_variance(P, mu_star)
    delta = P.delta
    if delta > 0 and beta > max_beta(P) * (1.0 + 1e-12):
        raise DomainError(f"beta {beta} exceeds 8 V*/Delta^4 = {max_beta(P)}")
    c_var = _cvar(P, mu_star)
    lhs = float(w2_sq(mu_star, mu))
    e = w2_sq(P.quantiles, mu)
    inside = _in_support(P, mu)
    if c_var <= 0:
        return VarianceReport(lhs, math.nan, c_var, v_star, delta, False, False, inside)
    rhs = -float(logsumexp(-beta * e, b=P.weights)) / (c_var * beta)
    return VarianceReport(lhs, rhs, c_var, v_star, delta, bool(lhs <= rhs + tol), True, inside)


def variance_stability_check(P, mu, tol=VARIANCE_TOL):
    """C_var W2^2(mu*, mu) <= sum_i w_i W2^2(mu, mu_i) - V*_P.

    Returns ``(violation, passed)``; the violation is measured after the
    tolerance scale ``1 + rhs``.
    """
    mu_star = w2_barycenter(P)
    v_star = barycentric_variance(P, mu_star)
    c_var = _cvar(P, mu_star)
    lhs = c_var * float(w2_sq(mu_star, mu))
    rhs = float(P.weights @ w2_sq(P.quantiles, mu)) - v_star
    viol = lhs - rhs
    return viol, bool(viol <= tol)


def hoeffding_check(P, mu, beta, tol=VARIANCE_TOL):
    """(1/beta) ln sum_i w_i exp(-beta E_i) <= beta Delta^4 / 8 for the centered
    energies E_i = W2^2(mu, mu_i) - sum_j w_j W2^2(mu, mu_j).

    The bound uses the spread Delta^2 of W2^2(mu, .), which holds for mu in
    the support. Returns ``(lhs, rhs, passed)``.
    """
    e = w2_sq(P.quantiles, mu)
    e = e - P.weights @ e
    lhs = float(logsumexp(-beta * e, b=P.weights)) / beta
    rhs = beta * P.delta**4 / 8.0
    return lhs, rhs, bool(lhs <= rhs + tol)


def random_meta_measure(rng, m=None, K=DEFAULT_K, m_range=(2, 8)):
    """Random mixture of strictly increasing quantile vectors (location,
    scale and shape all vary)."""
    m = int(rng.integers(m_range[0], m_range[1] + 1)) if m is None else int(m)
    inc = rng.exponential(1.0, size=(m, K)) * rng.uniform(0.2, 2.0, size=(m, 1)) / K
    q = np.cumsum(inc, axis=1) + rng.normal(0.0, 1.0, size=(m, 1))
    w = rng.dirichlet(np.ones(m))
    return MetaMeasure(q, w)


def random_quantile_measure(rng, K=DEFAULT_K):
    inc = rng.exponential(1.0, size=K) * rng.uniform(0.2, 2.0) / K
    return QuantileMeasure(np.cumsum(inc) + rng.normal())

"""Weighted atom clouds standing in for the exponential-weights measures.

Atoms are drawn once from the prior and never moved; every measure the
forecaster builds is a Gibbs reweighting of that fixed cloud. Weights are
kept as normalized log-weights.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .exceptions import DegenerateMeasureError, LossEvaluationError


@dataclass(frozen=True)
class ParticleMeasure:
    atoms: np.ndarray
    log_weights: np.ndarray

    def __post_init__(self):
        lw = np.asarray(self.log_weights, dtype=float)
        if lw.ndim != 1 or len(lw) != len(self.atoms):
            raise ValueError("log_weights must be a vector aligned with atoms")
        if np.any(np.isnan(lw)):
            raise ValueError("log_weights contain NaN")
        object.__setattr__(self, "log_weights", lw)

    def __len__(self):
        return len(self.log_weights)

    @property
    def weights(self):
        return np.exp(self.log_weights)

    def to_csv(self, path):
        """One row per atom: flattened coordinates then the log-weight."""
        flat = np.asarray(self.atoms, dtype=float).reshape(len(self), -1)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{j}" for j in range(flat.shape[1])] + ["log_weight"])
            for row, lw in zip(flat, self.log_weights):
                w.writerow([repr(float(v)) for v in row] + [repr(float(lw))])

    @classmethod
    def from_csv(cls, path, point_shape):
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        atoms = data[:, :-1].reshape((len(data),) + tuple(point_shape))
        return cls(atoms, data[:, -1])


def _normalize(log_w):
    total = logsumexp(log_w)
    if not np.isfinite(total):
        raise DegenerateMeasureError("measure has no mass")
    return log_w - total


def _check_losses(loss_values, n):
    loss_values = np.asarray(loss_values, dtype=float)
    if loss_values.shape != (n,):
        raise ValueError(f"expected {n} loss values, got shape {loss_values.shape}")
    bad = np.flatnonzero(~np.isfinite(loss_values))
    if len(bad):
        raise LossEvaluationError(f"non-finite loss at atom {bad[0]}", index=int(bad[0]))
    return loss_values


def from_atoms(atoms, weights):
    atoms = np.asarray(atoms, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if len(weights) != len(atoms):
        raise ValueError("atoms and weights differ in length")
    if np.any(weights < 0) or np.any(~np.isfinite(weights)):
        raise ValueError("weights must be finite and nonnegative")
    if not np.any(weights > 0):
        raise DegenerateMeasureError("all weights are zero")
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    return ParticleMeasure(atoms, _normalize(log_w))


def uniform(atoms):
    n = len(atoms)
    if n == 0:
        raise DegenerateMeasureError("no atoms")
    return ParticleMeasure(np.asarray(atoms, dtype=float), np.full(n, -np.log(n)))


def reweight(pm, loss_values, beta):
    """Multiply weights by exp(-beta * loss) and renormalize."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    loss_values = _check_losses(loss_values, len(pm))
    return ParticleMeasure(pm.atoms, _normalize(pm.log_weights - beta * loss_values))


def rebase_cumulative(prior, cumulative_losses, beta_t):
    """Gibbs measure prior * exp(-beta_t * L) built from the prior directly.

    With a constant beta this equals the recursive reweighting; with a
    time-varying schedule it is the measure the telescoping argument uses.
    """
    return reweight(prior, cumulative_losses, beta_t)


def log_partition(pm, values, beta):
    """ln sum_i w_i exp(-beta * values_i)."""
    return float(logsumexp(pm.log_weights - beta * np.asarray(values, dtype=float)))


def relative_entropy(mu, m):
    """Kullback-Leibler divergence of ``mu`` from ``m`` on a shared atom list."""
    if len(mu) != len(m):
        raise ValueError("measures must share the atom list")
    mw = mu.weights
    support = mw > 0
    if np.any(np.isneginf(m.log_weights[support])):
        return float("inf")
    terms = mw[support] * (mu.log_weights[support] - m.log_weights[support])
    return max(float(np.sum(terms)), 0.0)


def effective_sample_size(pm):
    return float(np.exp(-logsumexp(2.0 * pm.log_weights)))

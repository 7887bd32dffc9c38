"""Weighted Frechet means of particle measures and Jensen gap checks."""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateMeasureError
from .measures import ParticleMeasure

JENSEN_TOL = 1e-8


@dataclass(frozen=True)
class BarycenterResult:
    point: np.ndarray
    variance: float
    iterations: int
    converged: bool
    gradient_norm_final: float

    def to_dict(self):
        return {
            "point": np.asarray(self.point).tolist(),
            "variance": self.variance,
            "iterations": self.iterations,
            "converged": self.converged,
            "gradient_norm_final": self.gradient_norm_final,
        }


def variance_at(space, pm, x):
    """Weighted mean squared distance from ``x`` to the atoms."""
    d = space._dist(pm.atoms, np.asarray(x, dtype=float))
    return float(np.sum(pm.weights * d * d))


def tangent_mean(space, pm, x):
    w = pm.weights
    logs = space.log(x, pm.atoms)
    return np.sum(w[:, None] * logs, axis=0)


def barycenter(space, pm, tol=1e-9, max_iter=200):
    """Minimize the variance functional of ``pm`` over ``space``.

    Flat spaces use the closed form (weighted mean in the flat chart). The
    sphere and hyperbolic disk run the fixed-point iteration
    ``x <- Exp_x(sum_i w_i Log_x(a_i))`` from the heaviest atom until the
    tangent mean has norm at most ``tol``.
    """
    if len(pm) == 0:
        raise DegenerateMeasureError("empty measure")
    w = pm.weights
    keep = w > 0
    if not np.all(keep):
        lw = pm.log_weights[keep]
        pm = ParticleMeasure(pm.atoms[keep], lw)
        w = w[keep]

    if space.flat:
        flat = space.to_flat(pm.atoms)
        point = space.from_flat(np.sum(w[:, None] * flat, axis=0))
        return BarycenterResult(point, variance_at(space, pm, point), 0, True, 0.0)

    x = pm.atoms[int(np.argmax(w))]
    grad_norm = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = tangent_mean(space, pm, x)
        grad_norm = float(space.norm(g))
        if grad_norm <= tol:
            break
        x = space.exp(x, g)
    else:
        g = tangent_mean(space, pm, x)
        grad_norm = float(space.norm(g))
    return BarycenterResult(x, variance_at(space, pm, x), it, grad_norm <= tol, grad_norm)


@dataclass(frozen=True)
class JensenReport:
    lhs: float
    rhs: float
    slack: float
    passed: bool
    conclusive: bool = True

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "slack": self.slack, "pass": self.passed,
                "conclusive": self.conclusive}


def jensen_check(space, pm, f, alpha=0.0, tol=1e-12, max_iter=500):
    """Compare f at the barycenter with the weighted mean of f minus
    (alpha/2) times the barycentric variance."""
    res = barycenter(space, pm, tol=tol, max_iter=max_iter)
    lhs = float(f(res.point))
    rhs = float(np.sum(pm.weights * f(pm.atoms)) - 0.5 * alpha * res.variance)
    slack = rhs - lhs
    if not res.converged:
        return JensenReport(lhs, rhs, slack, False, conclusive=False)
    return JensenReport(lhs, rhs, slack, bool(lhs <= rhs + JENSEN_TOL))

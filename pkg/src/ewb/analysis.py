"""Randomized checkers for the geometric hypotheses and closed-form regret
bounds.

Convexity-type hypotheses are semi-infinite, so they are refuted rather than
certified: each checker samples geodesics or triangles from the prior,
evaluates the inequality on a grid, and reports the worst violation with a
witness.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .exceptions import DomainError
from .geometry import comparison_distance, model_diameter
from .losses import LossFn  # noqa: F401  (re-exported)
from .rng import as_generator

C1 = 1.5**0.25
N_GRID = 33


@dataclass
class CheckReport:
    n_trials: int
    n_failures: int
    worst_violation: float
    tolerance: float
    witness: Optional[Any] = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.worst_violation <= self.tolerance)

    def to_dict(self):
        w = self.witness
        if isinstance(w, dict):
            w = {k: np.asarray(v).tolist() for k, v in w.items()}
        return {
            "n_trials": self.n_trials,
            "n_failures": self.n_failures,
            "worst_violation": float(self.worst_violation),
            "tolerance": self.tolerance,
            "pass": self.passed,
            "witness": w,
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def merge_reports(reports):
    """Associative reduction: counts add, worst violation is the max."""
    reports = list(reports)
    worst = max(reports, key=lambda r: r.worst_violation - r.tolerance)
    return CheckReport(
        n_trials=sum(r.n_trials for r in reports),
        n_failures=sum(r.n_failures for r in reports),
        worst_violation=worst.worst_violation,
        tolerance=worst.tolerance,
        witness=worst.witness,
    )


def _geodesic_grid(space, n_pairs, rng, n_grid):
    x = space._sample(n_pairs, rng)
    y = space._sample(n_pairs, rng)
    t = np.linspace(0.0, 1.0, n_grid)
    xe = x[:, None]
    g = space._geodesic(xe, y[:, None], t[None, :])
    return x, y, t, g


def _midpoint_report(viol, scale, x, y, t, n_pairs, rtol=1e-8):
    """Midpoint-convexity violations on consecutive grid triples.

    ``viol`` has shape (pairs, grid - 2); the tolerance is
    ``rtol * (1 + |value|)``. The reported violation is the excess over the
    relative part, so that ``pass`` means ``worst <= rtol``.
    """
    excess = viol - rtol * np.abs(scale)
    flat = int(np.argmax(excess))
    i, j = np.unravel_index(flat, excess.shape)
    fails = excess > rtol
    return CheckReport(
        n_trials=n_pairs,
        n_failures=int(np.count_nonzero(np.any(fails, axis=1))),
        worst_violation=float(excess[i, j]),
        tolerance=rtol,
        witness={"x": x[i], "y": y[i], "t": t[j + 1]},
    )


def check_alpha_convex(space, f, alpha, n_pairs=500, seed=0, n_grid=N_GRID):
    """Refute geodesic alpha-convexity of ``f`` on random geodesics."""
    rng = as_generator(seed)
    x, y, t, g = _geodesic_grid(space, n_pairs, rng, n_grid)
    fv = f(g)
    d0 = space._dist(x[:, None], g)
    h = fv - 0.5 * alpha * d0 * d0
    viol = h[:, 1:-1] - 0.5 * (h[:, :-2] + h[:, 2:])
    return _midpoint_report(viol, np.abs(fv[:, 1:-1]), x, y, t, n_pairs)


def check_expconcave(space, f, beta, n_pairs=500, seed=0, n_grid=N_GRID):
    """Refute concavity of exp(-beta f) along random geodesics."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    rng = as_generator(seed)
    x, y, t, g = _geodesic_grid(space, n_pairs, rng, n_grid)
    h = np.exp(-beta * f(g))
    viol = 0.5 * (h[:, :-2] + h[:, 2:]) - h[:, 1:-1]
    return _midpoint_report(viol, np.abs(h[:, 1:-1]), x, y, t, n_pairs)


def sharpness_probe(space, f, beta, factor=10.0, n_pairs=500, seed=0):
    """Expconcavity reports at ``beta`` and at ``factor * beta``.

    Only sufficiency of beta <= alpha / L^2 is known, so failure at the
    inflated value is an expectation rather than a guarantee.
    """
    return (
        check_expconcave(space, f, beta, n_pairs, seed),
        check_expconcave(space, f, factor * beta, n_pairs, seed),
    )


def _sample_triangles(space, n, rng, kappa, max_rounds=50):
    keep_p, keep_x, keep_y = [], [], []
    got = 0
    for _ in range(max_rounds):
        m = 2 * (n - got) + 8
        p, x, y = (space._sample(m, rng) for _ in range(3))
        a = space._dist(p, x)
        b = space._dist(p, y)
        c = space._dist(x, y)
        peri = a + b + c
        gap = np.minimum(np.minimum(a + b - c, a + c - b), b + c - a)
        ok = gap > 1e-12 * np.maximum(peri, 1e-300)
        if kappa > 0:
            ok &= peri < 2.0 * model_diameter(kappa)
        idx = np.flatnonzero(ok)[: n - got]
        keep_p.append(p[idx])
        keep_x.append(x[idx])
        keep_y.append(y[idx])
        got += len(idx)
        if got >= n:
            break
    if got < n:
        raise DomainError("could not sample enough admissible triangles")
    return np.concatenate(keep_p), np.concatenate(keep_x), np.concatenate(keep_y)


def check_curvature_bound(space, kappa, side="lower", n_triangles=1000, seed=0,
                          n_grid=N_GRID, tol=1e-9):
    """Triangle comparison against the constant-curvature plane.

    ``side`` is ``"lower"`` (distances at least the model ones),
    ``"upper"`` (at most) or ``"equal"`` (absolute difference).
    """
    if side not in ("lower", "upper", "equal"):
        raise ValueError("side must be lower, upper or equal")
    rng = as_generator(seed)
    p, x, y = _sample_triangles(space, n_triangles, rng, kappa)
    a = space._dist(p, x)
    b = space._dist(p, y)
    c = space._dist(x, y)
    t = np.linspace(0.0, 1.0, n_grid)
    g = space._geodesic(x[:, None], y[:, None], t[None, :])
    actual = space._dist(p[:, None], g)
    model = comparison_distance(kappa, a[:, None], b[:, None], c[:, None], t[None, :])
    if side == "lower":
        viol = model - actual
    elif side == "upper":
        viol = actual - model
    else:
        viol = np.abs(actual - model)
    i, j = np.unravel_index(int(np.argmax(viol)), viol.shape)
    return CheckReport(
        n_trials=n_triangles,
        n_failures=int(np.count_nonzero(np.any(viol > tol, axis=1))),
        worst_violation=float(viol[i, j]),
        tolerance=tol,
        witness={"p": p[i], "x": x[i], "y": y[i], "t": t[j]},
    )


def check_geodesic_scaling(space, n_pairs=1000, seed=0, n_grid=N_GRID, rtol=1e-8):
    """d(g(s), g(t)) = (t - s) d(x, y) for all grid pairs s <= t."""
    rng = as_generator(seed)
    x, y, t, g = _geodesic_grid(space, n_pairs, rng, n_grid)
    dxy = space._dist(x, y)
    s_idx, t_idx = np.triu_indices(n_grid, k=1)
    lhs = space._dist(g[:, s_idx], g[:, t_idx])
    rhs = (t[t_idx] - t[s_idx])[None, :] * dxy[:, None]
    rel = np.abs(lhs - rhs) / np.maximum(dxy[:, None], 1e-300)
    i, j = np.unravel_index(int(np.argmax(rel)), rel.shape)
    return CheckReport(
        n_trials=n_pairs,
        n_failures=int(np.count_nonzero(np.any(rel > rtol, axis=1))),
        worst_violation=float(rel[i, j]),
        tolerance=rtol,
        witness={"x": x[i], "y": y[i], "s": t[s_idx[j]], "t": t[t_idx[j]]},
    )


# -- psi and the prior constant ---------------------------------------------


def r_coth_r(r):
    r = np.asarray(r, dtype=float)
    small = r < 1e-4
    safe = np.where(small, 1.0, r)
    return np.where(small, 1.0 + r * r / 3.0 - r**4 / 45.0, safe / np.tanh(safe))


def psi(r):
    """(r coth r) exp(-r coth r), equal to 1/e at r = 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("psi needs r >= 0")
    u = r_coth_r(r)
    out = u * np.exp(-u)
    return out if out.ndim else float(out)


def _c_from_distances(d, kappa, p):
    return psi(np.asarray(d) * math.sqrt(-kappa / (p - 1.0)))


def c_kappa_p(space, x, kappa, p, n_mc=100_000, seed=0, chunk=1_000_000):
    """Prior constant of the negative-curvature regret bound.

    Returns ``(estimate, stderr)``: exactly ``(1, 0)`` when ``kappa >= 0``,
    otherwise the Monte Carlo mean of psi(d(x, Y) sqrt(-kappa / (p - 1)))
    over prior draws ``Y``.
    """
    if not p > 1:
        raise DomainError("p must exceed 1")
    if kappa >= 0:
        return 1.0, 0.0
    rng = as_generator(seed)
    x = np.asarray(x, dtype=float)
    total = 0.0
    total_sq = 0.0
    left = int(n_mc)
    while left > 0:
        m = min(chunk, left)
        v = _c_from_distances(space._dist(x, space._sample(m, rng)), kappa, p)
        total += float(np.sum(v))
        total_sq += float(np.sum(v * v))
        left -= m
    mean = total / n_mc
    var = max(total_sq / n_mc - mean * mean, 0.0)
    return mean, math.sqrt(var / n_mc)


def c_kappa_p_sample(space, x, kappa, p, sample):
    """Plug-in version of :func:`c_kappa_p` on a fixed prior sample."""
    if kappa >= 0:
        return 1.0
    return float(np.mean(_c_from_distances(space._dist(np.asarray(x), sample), kappa, p)))


def uniform_c_lower_bound(space, kappa, p):
    """psi(diam sqrt(-kappa/(p-1))), a lower bound on c over a bounded space."""
    if kappa >= 0:
        return 1.0
    return psi(space.diameter * math.sqrt(-kappa / (p - 1.0)))


# -- regret bounds ----------------------------------------------------------


def _check_bound_args(n, c_value):
    n = np.asarray(n, dtype=float)
    if np.any(n < 2):
        raise DomainError("bounds need n >= 2")
    if not 0.0 < c_value <= 1.0:
        raise DomainError("c must lie in (0, 1]")
    return n


def regret_bound_thm1(beta, p, n, c_value=1.0):
    """Logarithmic regret bound for beta-expconcave losses at constant beta."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    n = _check_bound_args(n, c_value)
    out = (2.0 + math.log(1.0 / c_value)) / beta + p * np.log(n) / beta
    return out if out.ndim else float(out)


def regret_bound_thm2(a, b, p, n, c_value=1.0):
    """sqrt(n log n) regret bound for convex [a, b]-valued losses under the
    adaptive schedule."""
    if not b > a:
        raise DomainError("need a < b")
    n = _check_bound_args(n, c_value)
    out = (b - a) * (1.0 + C1 * (1.0 + math.log(1.0 / c_value)) * np.sqrt(p * n * np.log(n)))
    return out if out.ndim else float(out)


def ball_constant(kappa, p, r0):
    """Multiplier c(kappa, p, r0) in the ball-mass lower bound."""
    if kappa >= 0:
        return 1.0
    return psi(2.0 * r0 * math.sqrt(-kappa / (p - 1.0))) ** (p - 1.0)


def ball_mass_check(space, x, r, r0, p, kappa, n_mc=100_000, seed=0):
    """Monte Carlo test of m(B(x, r)) >= c(x) r^p with
    c(x) = c(kappa, p, r0) m(B(x, 2 r0)) / (2 r0)^p.

    The inequality is the ratio statement
    m(B(x, r)) / m(B(x, 2 r0)) >= c(kappa, p, r0) (r / 2 r0)^p. Spaces with an
    exact local sampler draw uniformly from B(x, 2 r0) itself, which keeps
    small radii resolvable, with the binomial standard error taken at the
    bound. Otherwise both masses share prior draws and the standard error is
    that of the paired difference of indicators.
    """
    if not 0 < r <= r0:
        raise DomainError("need 0 < r <= r0")
    if not p > 1:
        raise DomainError("p must exceed 1")
    if kappa > 0 and 2.0 * r0 > math.pi * math.sqrt((p - 1.0) / kappa):
        raise DomainError("2 r0 exceeds the Bonnet-Myers radius")
    rng = as_generator(seed)
    x = np.asarray(x, dtype=float)
    cst = ball_constant(kappa, p, r0)
    factor = cst * (r / (2.0 * r0)) ** p
    sampler = getattr(space, "_sample_ball", None)
    if sampler is not None:
        pts, vol = sampler(x, 2.0 * r0, int(n_mc), rng)
        inside = space.contains(pts, tol=0.0)
        d = space._dist(x, pts[inside])
        n_in = len(d)
        q = float(np.mean(d < r)) if n_in else 0.0
        # score-test error at the null value; the plug-in one is 0 with no hits
        se_q = math.sqrt(factor * (1.0 - factor) / n_in) if n_in else math.inf
        mass_2r0 = vol * n_in / int(n_mc)
        mass_r = q * mass_2r0
        se = se_q * mass_2r0
    else:
        d = space._dist(x, space._sample(int(n_mc), rng))
        in_r = (d < r).astype(float)
        in_2r0 = (d < 2.0 * r0).astype(float)
        se = float(np.std(in_r - factor * in_2r0) / math.sqrt(n_mc))
        mass_r = float(np.mean(in_r))
        mass_2r0 = float(np.mean(in_2r0))
    c_x = cst * mass_2r0 / (2.0 * r0) ** p
    bound = c_x * r**p
    viol = bound - mass_r
    return CheckReport(
        n_trials=int(n_mc),
        n_failures=int(viol > 3.0 * se),
        worst_violation=viol,
        tolerance=3.0 * se,
        witness={"x": x, "r": r, "r0": r0},
        details={"mass_r": mass_r, "mass_2r0": mass_2r0, "c_x": c_x, "bound": bound, "stderr": se},
    )


def _log_sinh(x):
    return x + np.log(-np.expm1(-2.0 * x)) - math.log(2.0)


def lemma43_check(grid_r, grid_eps, part=None, tol=1e-12):
    """Sine and sinh ratio inequalities on an (r, eps) grid.

    part 1: sin(eps r) / sin(r) >= eps for r in [0, pi], eps in (0, 1).
    part 2: sinh(eps r) / sinh(r) >= eps psi(r) for r >= 0, eps in (0, 1/2].
    Ratios at r = 0 are 1 by convention. With ``part=None`` both are run on
    the admissible parts of the grid.
    """
    grid_r = np.asarray(grid_r, dtype=float)
    grid_eps = np.asarray(grid_eps, dtype=float)
    parts = (1, 2) if part is None else (part,)
    reports = {}
    for k in parts:
        if k == 1:
            r = grid_r[(grid_r >= 0) & (grid_r <= math.pi)]
            e = grid_eps[(grid_eps > 0) & (grid_eps < 1)]
        else:
            r = grid_r[grid_r >= 0]
            e = grid_eps[(grid_eps > 0) & (grid_eps <= 0.5)]
        R, E = np.meshgrid(r, e, indexing="ij")
        zero = R == 0
        Rs = np.where(zero, 1.0, R)
        if k == 1:
            ratio = np.where(zero, 1.0, np.sin(E * Rs) / np.sin(Rs))
            viol = E - ratio
        else:
            ratio = np.where(zero, 1.0, np.exp(_log_sinh(E * Rs) - _log_sinh(Rs)))
            viol = E * psi(R) - ratio
        if viol.size == 0:
            reports[k] = CheckReport(0, 0, -math.inf, tol)
            continue
        i, j = np.unravel_index(int(np.argmax(viol)), viol.shape)
        reports[k] = CheckReport(
            n_trials=int(viol.size),
            n_failures=int(np.count_nonzero(viol > tol)),
            worst_violation=float(viol[i, j]),
            tolerance=tol,
            witness={"r": R[i, j], "eps": E[i, j]},
        )
    if len(reports) == 1:
        return next(iter(reports.values()))
    out = merge_reports(reports.values())
    out.details = {f"part{k}": v.to_dict() for k, v in reports.items()}
    return out

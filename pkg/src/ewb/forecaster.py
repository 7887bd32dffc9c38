"""The exponentially weighted barycentric forecaster.

Each round the forecaster predicts the barycenter of the Gibbs measure
``m_t  proportional to  exp(-beta_t L_{t-1}) m`` on a fixed cloud of prior
atoms, then observes the loss and accumulates it per atom. ``run_game``
drives the full protocol, tracks regret against a best-in-hindsight oracle,
and checks the exact bookkeeping inequalities of the analysis on the
particle measure as it goes.
"""

import csv
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import measures
from .analysis import C1, c_kappa_p_sample, regret_bound_thm1, regret_bound_thm2
from .barycenter import barycenter
from .exceptions import BarycenterError, DomainError, LossEvaluationError
from .geometry import sample_prior
from .losses import LossHistory
from .measures import ParticleMeasure

PROOF_TOL = 1e-8
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Schedule:
    """Learning-rate schedule.

    ``constant`` uses ``beta`` every round. ``adaptive`` uses
    ``(2 c1 / (b - a)) sqrt(g(t))`` with ``c1 = (3/2)^(1/4)`` and
    ``g(t) = min_{s <= t} ln(max(s, 2)) / s``. The running minimum only
    differs from ``ln(max(t, 2)) / t`` at t = 3, where the raw sequence
    increases; clamping it keeps the schedule nonincreasing.
    """

    kind: str = "constant"
    beta: Optional[float] = None
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if self.kind == "constant":
            if self.beta is None or not self.beta > 0:
                raise ValueError("constant schedule needs beta > 0")
        elif self.kind == "adaptive":
            if not self.b > self.a:
                raise ValueError("adaptive schedule needs a < b")
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def constant(cls, beta):
        return cls("constant", beta=float(beta))

    @classmethod
    def adaptive(cls, a=0.0, b=1.0):
        return cls("adaptive", a=float(a), b=float(b))

    def beta_at(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 1):
            raise DomainError("rounds start at t = 1")
        if self.kind == "constant":
            out = np.full(t.shape, self.beta)
        else:
            g = np.log(np.maximum(t, 2.0)) / t
            g = np.where(t >= 2, np.minimum(g, math.log(2.0) / 2.0), g)
            out = 2.0 * C1 / (self.b - self.a) * np.sqrt(g)
        return out if out.ndim else float(out)

    def to_dict(self):
        if self.kind == "constant":
            return {"kind": "constant", "beta": self.beta}
        return {"kind": "adaptive", "a": self.a, "b": self.b}

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind", "constant")
        if kind == "constant":
            return cls.constant(d["beta"])
        return cls.adaptive(d.get("a", 0.0), d.get("b", 1.0))


@dataclass(frozen=True)
class ForecasterState:
    space: object
    schedule: Schedule
    prior: ParticleMeasure
    cumulative: np.ndarray
    t: int
    measure: ParticleMeasure

    @property
    def atoms(self):
        return self.prior.atoms

    @property
    def beta(self):
        return self.schedule.beta_at(self.t)


def ewb_init(space, n_atoms, schedule, seed=None):
    if int(n_atoms) < 2:
        raise DomainError("need at least two atoms")
    atoms = sample_prior(space, int(n_atoms), seed)
    prior = measures.uniform(atoms)
    return ForecasterState(space, schedule, prior, np.zeros(len(atoms)), 1, prior)


def ewb_predict(state, tol=1e-9, max_iter=200, return_result=False):
    """Barycenter of the current Gibbs measure."""
    res = barycenter(state.space, state.measure, tol=tol, max_iter=max_iter)
    return res if return_result else res.point


def _evaluate_on_atoms(loss, atoms):
    values = np.asarray(loss(atoms), dtype=float)
    bad = np.flatnonzero(~np.isfinite(values))
    if len(bad):
        raise LossEvaluationError(f"loss is not finite at atom {bad[0]}", index=int(bad[0]))
    return values


def ewb_update(state, loss, values=None):
    """Accumulate ``loss`` on the atoms and rebuild the Gibbs measure at t + 1."""
    if values is None:
        values = _evaluate_on_atoms(loss, state.atoms)
    cumulative = state.cumulative + values
    t = state.t + 1
    pm = measures.rebase_cumulative(state.prior, cumulative, state.schedule.beta_at(t))
    return replace(state, cumulative=cumulative, t=t, measure=pm)


# -- best point in hindsight ------------------------------------------------


def _as_history(space, losses):
    if isinstance(losses, LossHistory):
        return losses
    hist = LossHistory(space)
    for loss in losses:
        hist.append(loss)
    return hist


def _golden(space, hist, x0, x1, f0, f1, depth):
    """Vectorized golden-section search of L along geodesics x0[k] -> x1[k].

    Returns the best evaluated point and value per geodesic.
    """
    k = len(x0)
    a = np.zeros(k)
    b = np.ones(k)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc = hist.total(space._geodesic(x0, x1, c))
    fd = hist.total(space._geodesic(x0, x1, d))
    for _ in range(depth):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - GOLDEN * (b - a)
        new_d = a + GOLDEN * (b - a)
        t_new = np.where(left, new_c, new_d)
        f_new = hist.total(space._geodesic(x0, x1, t_new))
        c, d, fc, fd = (
            np.where(left, new_c, d),
            np.where(left, c, new_d),
            np.where(left, f_new, fd),
            np.where(left, fc, f_new),
        )
    ts = np.stack([np.zeros(k), c, d, np.ones(k)], axis=1)
    fs = np.stack([f0, fc, fd, f1], axis=1)
    j = np.argmin(fs, axis=1)
    rows = np.arange(k)
    t_best = ts[rows, j]
    return space._geodesic(x0, x1, t_best), fs[rows, j]


def best_in_hindsight(space, candidates, losses, values=None, n_best=5, depth=20, sweeps=4):
    """Approximate minimizer of the cumulative loss.

    Scans ``candidates``, then runs golden-section searches along the
    geodesics joining every pair of the ``n_best`` best candidates, then up
    to ``sweeps`` rounds of line searches from the incumbent toward each of
    them. The returned value is attained, hence an upper bound on the true
    minimum.
    """
    hist = _as_history(space, losses)
    candidates = np.asarray(candidates, dtype=float)
    values = hist.total(candidates) if values is None else np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")[:n_best]
    top = candidates[order]
    top_v = values[order]
    best_x, best_v = top[0], float(top_v[0])
    if len(top) < 2 or depth <= 0:
        return best_x, best_v

    i, j = np.triu_indices(len(top), k=1)
    pts, vals = _golden(space, hist, top[i], top[j], top_v[i], top_v[j], depth)
    m = int(np.argmin(vals))
    if vals[m] < best_v:
        best_x, best_v = pts[m], float(vals[m])

    for _ in range(sweeps):
        far = space._dist(best_x, top) > 0
        if not np.any(far):
            break
        tgt = top[far]
        x0 = np.broadcast_to(best_x, tgt.shape)
        pts, vals = _golden(space, hist, x0, tgt, np.full(len(tgt), best_v), top_v[far], depth)
        m = int(np.argmin(vals))
        if not vals[m] < best_v - 1e-15 * (1.0 + abs(best_v)):
            break
        best_x, best_v = pts[m], float(vals[m])
    return best_x, best_v


def _geometric_median(space, centers, x, n_iter=30, tol=1e-10):
    """Weiszfeld iteration for argmin sum_i d(c_i, .), started at ``x``."""
    for _ in range(n_iter):
        d = space._dist(centers, x)
        if np.any(d < 1e-14):
            break
        w = 1.0 / d
        w = w / w.sum()
        if space.flat:
            v = np.sum(w[:, None] * space.to_flat(centers), axis=0)
            x_new = space.from_flat(v)
            step = space._dist(x, x_new)
        else:
            g = np.sum(w[:, None] * space.log(x, centers), axis=0)
            step = float(space.norm(g))
            x_new = space.exp(x, g)
        x = x_new
        if step <= tol:
            break
    return x


def hindsight_hint(space, hist, start=None, tol=1e-12):
    """Good starting candidate for the hindsight search, or None.

    Sums of squared distances are minimized exactly by the barycenter of the
    centers; for sums of distances a Weiszfeld run starts from ``start``
    (or that barycenter).
    """
    fam = hist.single_family()
    if fam not in ("sqdist", "dist"):
        return None
    centers = hist.centers(fam)
    if fam == "sqdist" or start is None:
        x = barycenter(space, measures.uniform(centers), tol=tol, max_iter=500).point
    else:
        x = start
    if fam == "dist":
        x = _geometric_median(space, centers, x)
        if not space.contains(x):
            return None
    return x


def hindsight_gap(space, losses, value, n_grid=1_000_000, chunk=20_000):
    """``value`` minus the minimum of the cumulative loss over a dense grid
    of a two-dimensional space (negative when ``value`` beats the grid)."""
    hist = _as_history(space, losses)
    grid = space.grid(n_grid)
    best = math.inf
    for s in range(0, len(grid), chunk):
        best = min(best, float(np.min(hist.total(grid[s:s + chunk]))))
    return value - best


# -- the game ---------------------------------------------------------------


@dataclass
class RegretReport:
    space: object
    schedule: Schedule
    seed: Optional[int]
    predictions: np.ndarray
    losses: np.ndarray
    betas: np.ndarray
    ess: np.ndarray
    cumulative: np.ndarray
    hindsight_values: np.ndarray
    bounds: np.ndarray
    hindsight_point: Optional[np.ndarray] = None
    proof_checks: dict = field(default_factory=dict)
    aborted: Optional[str] = None

    @property
    def n(self):
        return len(self.losses)

    @property
    def rounds(self):
        return np.arange(1, self.n + 1)

    @property
    def regret(self):
        return self.cumulative - self.hindsight_values

    @property
    def hindsight_value(self):
        return float(self.hindsight_values[-1]) if self.n else 0.0

    @property
    def final_regret(self):
        return float(self.regret[-1]) if self.n else 0.0

    def bound_ok(self, slack=1.10):
        """Whether regret <= slack * bound at every round with a bound."""
        ok = np.isfinite(self.bounds)
        return bool(np.all(self.regret[ok] <= slack * self.bounds[ok]))

    def proofs_ok(self):
        return all(c["pass"] for c in self.proof_checks.values() if c["applicable"])

    def to_csv(self, path):
        cols = ("t", "beta_t", "loss", "cumloss", "regret", "bound", "ess")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for k in range(self.n):
                w.writerow([
                    k + 1,
                    repr(float(self.betas[k])),
                    repr(float(self.losses[k])),
                    repr(float(self.cumulative[k])),
                    repr(float(self.regret[k])),
                    repr(float(self.bounds[k])),
                    repr(float(self.ess[k])),
                ])

    def summary(self):
        regret = self.regret
        return {
            "seed": self.seed,
            "space": self.space.to_dict(),
            "schedule": self.schedule.to_dict(),
            "rounds": self.n,
            "cumulative_loss": float(self.cumulative[-1]) if self.n else 0.0,
            "hindsight_value": self.hindsight_value,
            "hindsight_point": None if self.hindsight_point is None else np.asarray(self.hindsight_point).tolist(),
            "final_regret": self.final_regret,
            "max_regret": float(np.max(regret)) if self.n else 0.0,
            "final_bound": float(self.bounds[-1]) if self.n else math.nan,
            "bound_ok": self.bound_ok(),
            "proof_checks": self.proof_checks,
            "aborted": self.aborted,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


class _ProofTracker:
    """Running maxima of the exact inequalities on the particle surrogate."""

    def __init__(self, expconcave, convex):
        self.applicable = {"telescoping": True, "gibbs_bound": expconcave, "convex_bound": convex,
                           "gibbs_variational": True}
        self.worst = {k: -math.inf for k in self.applicable}
        self.where = {k: None for k in self.applicable}

    def record(self, name, violation, t):
        if violation > self.worst[name]:
            self.worst[name] = float(violation)
            self.where[name] = int(t)

    def result(self):
        out = {}
        for k, app in self.applicable.items():
            w = self.worst[k]
            out[k] = {
                "applicable": app,
                "max_violation": w if math.isfinite(w) else None,
                "round": self.where[k],
                "pass": bool(w <= PROOF_TOL) if app else None,
            }
        return out


def _gibbs_variational(prior, L, beta, rng, n_mix=8):
    """Check that the Gibbs measure attains inf_mu {<mu, L> + KL(mu|m)/beta}
    and that point masses and random mixtures do no better.

    Returns the worst violation (positive means a failure).
    """
    value = -measures.log_partition(prior, L, beta) / beta
    gibbs = measures.reweight(prior, L, beta)
    attained = float(np.sum(gibbs.weights * L)) + measures.relative_entropy(gibbs, prior) / beta
    worst = abs(attained - value)
    # point mass on atom i: L_i + (-log m_i) / beta
    point = np.min(L - prior.log_weights / beta)
    worst = max(worst, value - point)
    n = len(L)
    for _ in range(n_mix):
        w = rng.dirichlet(np.full(n, 0.5))
        mu = measures.from_atoms(prior.atoms, w)
        obj = float(np.sum(mu.weights * L)) + measures.relative_entropy(mu, prior) / beta
        worst = max(worst, value - obj)
    return worst


def run_game(space, schedule, losses, n_atoms=10_000, seed=0, mode="experiment",
             bary_tol=1e-9, max_iter=200, atoms_seed=None, refine_every=1, refine_all=100):
    """Play the protocol on a finite loss sequence and report regret.

    ``mode="verify"`` turns barycenter non-convergence into an abort (the
    partial report is returned with ``aborted`` set) and asserts that every
    loss stays inside its declared range; ``mode="experiment"`` only warns.

    The hindsight value is recomputed every round. The full line-search
    refinement runs on the first ``refine_all`` rounds and then every
    ``refine_every`` rounds; other rounds keep the best of the atoms, the
    previous incumbent and the closed-form or Weiszfeld hint.
    """
    if mode not in ("experiment", "verify"):
        raise ValueError("mode must be experiment or verify")
    losses = list(losses)
    state = ewb_init(space, n_atoms, schedule, seed if atoms_seed is None else atoms_seed)
    prior = state.prior
    hist = LossHistory(space)

    expconcave = schedule.kind == "constant" and all(
        l.beta_expconcave is not None and l.beta_expconcave >= schedule.beta * (1 - 1e-12) for l in losses
    )
    convex = all(l.alpha is not None and l.alpha >= 0 for l in losses)
    tracker = _ProofTracker(expconcave, convex)

    n = len(losses)
    preds, loss_x, betas, ess, cum, hind, bounds = [], [], [], [], [], [], []
    telescoped = 0.0
    convex_extra = 0.0
    cum_loss = 0.0
    best_x = None
    aborted = None
    mcp_kappa = space.kappa
    for t, loss in enumerate(losses, start=1):
        pm = state.measure
        beta_t = state.beta
        res = barycenter(space, pm, tol=bary_tol, max_iter=max_iter)
        if not res.converged:
            msg = f"barycenter did not converge at round {t} (gradient norm {res.gradient_norm_final:.3g})"
            if mode == "verify":
                aborted = msg
                break
            warnings.warn(msg, RuntimeWarning)
        x_t = res.point
        values = _evaluate_on_atoms(loss, state.atoms)
        if mode == "verify" and loss.range is not None:
            lo, hi = loss.range
            pad = 1e-12 * (1.0 + abs(hi - lo))
            if np.min(values) < lo - pad or np.max(values) > hi + pad:
                raise DomainError(f"round {t}: loss leaves its declared range {loss.range}")
        lx = float(loss(x_t))
        cum_loss += lx

        log_z = measures.log_partition(pm, values, beta_t)
        telescoped += -log_z / beta_t
        lbar = float(np.sum(pm.weights * values))
        convex_extra += lbar + log_z / beta_t

        state = ewb_update(state, loss, values)
        beta_next = state.beta
        gibbs_value = -measures.log_partition(prior, state.cumulative, beta_next) / beta_next
        tracker.record("telescoping", telescoped - gibbs_value, t)
        if expconcave:
            tracker.record("gibbs_bound", cum_loss - gibbs_value, t)
        if convex:
            tracker.record("convex_bound", cum_loss - (gibbs_value + convex_extra), t)

        hist.append(loss)
        extras = [e for e in (best_x, hindsight_hint(space, hist, best_x)) if e is not None]
        extras = np.asarray(extras).reshape((len(extras),) + tuple(space.point_shape))
        extra_v = hist.total(extras) if len(extras) else np.zeros(0)
        if t <= refine_all or t % refine_every == 0 or t == n or not len(extras):
            cands = np.concatenate([state.atoms, extras])
            vals = np.concatenate([state.cumulative, extra_v])
            best_x, best_v = best_in_hindsight(space, cands, hist, vals)
        else:
            # cheap round: incumbent and hint only, still an attained value
            j = int(np.argmin(extra_v))
            best_x, best_v = extras[j], float(extra_v[j])
            k = int(np.argmin(state.cumulative))
            if state.cumulative[k] < best_v:
                best_x, best_v = state.atoms[k], float(state.cumulative[k])

        if t >= 2:
            if mcp_kappa < 0:
                c = c_kappa_p_sample(space, best_x, mcp_kappa, space.p, prior.atoms)
            else:
                c = 1.0
            if schedule.kind == "constant":
                bd = regret_bound_thm1(schedule.beta, space.p, t, c)
            else:
                bd = regret_bound_thm2(schedule.a, schedule.b, space.p, t, c)
        else:
            bd = math.nan

        preds.append(x_t)
        loss_x.append(lx)
        betas.append(beta_t)
        ess.append(measures.effective_sample_size(pm))
        cum.append(cum_loss)
        hind.append(best_v)
        bounds.append(bd)

    if aborted is None and n:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=0 if seed is None else int(seed),
                                                            spawn_key=(7,)))
        tracker.record("gibbs_variational",
                       _gibbs_variational(prior, state.cumulative, state.beta, rng), n)

    shape = (0,) + tuple(space.point_shape)
    return RegretReport(
        space=space,
        schedule=schedule,
        seed=seed,
        predictions=np.asarray(preds) if preds else np.zeros(shape),
        losses=np.asarray(loss_x),
        betas=np.asarray(betas),
        ess=np.asarray(ess),
        cumulative=np.asarray(cum),
        hindsight_values=np.asarray(hind),
        bounds=np.asarray(bounds),
        hindsight_point=best_x,
        proof_checks=tracker.result(),
        aborted=aborted,
    )


def run_game_strict(*args, **kwargs):
    """:func:`run_game` in verify mode, raising if the game aborted or an
    exact inequality failed."""
    kwargs["mode"] = "verify"
    report = run_game(*args, **kwargs)
    if report.aborted:
        raise BarycenterError(report.aborted, result=report)
    if not report.proofs_ok():
        raise AssertionError(f"proof-level inequality failed: {report.proof_checks}")
    return report

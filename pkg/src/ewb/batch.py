"""Online-to-batch conversion.

The forecaster is run on an i.i.d. stream Z_1, ..., Z_n with losses
``l(., Z_t)``; the estimator is the unweighted barycenter of its n + 1
iterates. Since each iterate only sees earlier samples, its expected excess
risk is at most the uniform regret bound divided by n + 1.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import measures
from .analysis import regret_bound_thm1, uniform_c_lower_bound
from .barycenter import barycenter
from .exceptions import DomainError
from .forecaster import ewb_init, ewb_predict, ewb_update
from .geometry import EuclideanBall
from .losses import squared_distance_loss
from .rng import stream

JENSEN_STEP_TOL = 1e-8


@dataclass(frozen=True)
class BatchTask:
    """A stochastic convex problem on ``space``.

    ``loss_fn(z)`` returns the :class:`~ewb.losses.LossFn` l(., z) fed to the
    forecaster; ``pointwise(theta, zs)`` evaluates l(theta, z) for many z.
    ``theta_star``/``min_risk`` describe the risk minimizer when known.
    """

    space: object
    loss_fn: Callable
    pointwise: Callable
    sampler: Callable
    theta_star: Optional[np.ndarray] = None
    min_risk: Optional[float] = None
    name: str = "custom"

    def sample(self, n, rng):
        return self.sampler(int(n), rng)


def quadratic_task(space=None):
    """l(theta, z) = d^2(theta, z) with z uniform on a Euclidean ball.

    The risk minimizer is the center and the minimal risk is
    E|Z|^2 = dim R^2 / (dim + 2).
    """
    space = EuclideanBall(1, 1.0) if space is None else space
    if not isinstance(space, EuclideanBall):
        raise DomainError("the quadratic task is defined on a Euclidean ball")
    d, r = space.dim, space.radius
    return BatchTask(
        space=space,
        loss_fn=lambda z: squared_distance_loss(space, z),
        pointwise=lambda theta, zs: space._dist(np.asarray(theta, dtype=float), zs) ** 2,
        sampler=lambda n, rng: space._sample(n, rng),
        theta_star=np.zeros(d),
        min_risk=d * r * r / (d + 2.0),
        name="quadratic",
    )


@dataclass
class BatchResult:
    theta_hat: np.ndarray
    iterates: np.ndarray
    samples: np.ndarray


def online_to_batch(space, schedule, task, n, n_atoms=10_000, seed=0, return_iterates=False):
    """Barycenter of the forecaster iterates theta_1..theta_{n+1}."""
    if int(n) < 1:
        raise DomainError("n must be at least 1")
    zs = task.sample(n, stream(seed, "batch-data"))
    state = ewb_init(space, n_atoms, schedule, stream(seed, "batch-atoms"))
    iterates = [ewb_predict(state)]
    # theta_t is computed before Z_t is revealed
    for z in zs:
        state = ewb_update(state, task.loss_fn(z))
        iterates.append(ewb_predict(state))
    iterates = np.asarray(iterates)
    theta_hat = barycenter(space, measures.uniform(iterates), tol=1e-12, max_iter=500).point
    if return_iterates:
        return BatchResult(theta_hat, iterates, zs)
    return theta_hat


def jensen_step_check(task, theta_hat, iterates, n_z=100, seed=0):
    """Worst of l(theta_hat, z) - mean_t l(theta_t, z) over ``n_z`` fresh z.

    Returns ``(worst, passed)``.
    """
    zs = task.sample(n_z, stream(seed, "batch-jensen"))
    lhs = task.pointwise(theta_hat, zs)
    rhs = np.mean([task.pointwise(th, zs) for th in iterates], axis=0)
    worst = float(np.max(lhs - rhs))
    return worst, bool(worst <= JENSEN_STEP_TOL)


def excess_risk(space, theta_hat, task, n_mc=100_000, seed=0, n=None, beta=None, p=None,
                c_value=None):
    """Monte Carlo excess risk of ``theta_hat`` and the conversion bound.

    With a known ``theta_star`` the estimate is the mean of the paired
    differences l(theta_hat, Z) - l(theta_star, Z); otherwise ``min_risk`` is
    subtracted from the mean risk. ``bound`` is B_{n+1}/(n+1) with B the
    constant-beta regret bound, using the infimum of the prior constant over
    the space unless ``c_value`` is given.
    """
    zs = task.sample(n_mc, stream(seed, "batch-mc"))
    risk = task.pointwise(theta_hat, zs)
    if task.theta_star is not None:
        diff = risk - task.pointwise(task.theta_star, zs)
    elif task.min_risk is not None:
        diff = risk - task.min_risk
    else:
        return {"estimate": None, "stderr": None, "bound": None, "conclusive": False,
                "risk": float(np.mean(risk))}
    est = float(np.mean(diff))
    se = float(np.std(diff) / math.sqrt(len(diff)))
    bound = None
    if n is not None and beta is not None:
        p = space.p if p is None else p
        if c_value is None:
            c_value = uniform_c_lower_bound(space, space.kappa, p)
        bound = regret_bound_thm1(beta, p, n + 1, c_value) / (n + 1)
    return {"estimate": est, "stderr": se, "bound": bound, "conclusive": True,
            "risk": float(np.mean(risk))}


def replicate(space, schedule, task, n, n_rep, n_atoms=10_000, seed=0, n_mc=100_000, n_z=100):
    """Independent replications of the conversion.

    Returns per-replication excess risks, Jensen-step worst gaps and the
    summary used by the acceptance check.
    """
    beta = schedule.beta if schedule.kind == "constant" else None
    estimates, jensen = [], []
    bound = None
    for r in range(n_rep):
        rep_seed = int(np.random.SeedSequence(entropy=int(seed), spawn_key=(r,)).generate_state(1)[0])
        res = online_to_batch(space, schedule, task, n, n_atoms, rep_seed, return_iterates=True)
        ex = excess_risk(space, res.theta_hat, task, n_mc, rep_seed, n=n, beta=beta)
        estimates.append(ex["estimate"])
        bound = ex["bound"]
        jensen.append(jensen_step_check(task, res.theta_hat, res.iterates, n_z, rep_seed)[0])
    estimates = np.asarray(estimates)
    mean = float(np.mean(estimates))
    se = float(np.std(estimates, ddof=1) / math.sqrt(n_rep)) if n_rep > 1 else 0.0
    ok = bound is None or mean <= bound + 3.0 * se
    return {
        "n": int(n),
        "replications": int(n_rep),
        "estimates": estimates.tolist(),
        "estimate": mean,
        "stderr": se,
        "bound": bound,
        "jensen_worst": float(np.max(jensen)),
        "jensen_pass": bool(np.max(jensen) <= JENSEN_STEP_TOL),
        "pass": bool(ok and np.max(jensen) <= JENSEN_STEP_TOL),
    }

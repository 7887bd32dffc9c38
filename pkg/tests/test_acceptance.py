"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one ``criterion k: PASS/FAIL`` line, collected in the
terminal summary.
"""

import json
import math

import numpy as np
import pytest

from ewb import analysis
from ewb.batch import quadratic_task, replicate
from ewb.cli import main, make_losses
from ewb.forecaster import Schedule, hindsight_gap, run_game
from ewb.geometry import EuclideanBall, HyperbolicDisk, QuantileSpace, SPDSpace, SphereCap
from ewb.rng import stream
from ewb.wasserstein1d import (
    hoeffding_check,
    max_beta,
    random_meta_measure,
    random_quantile_measure,
    variance_inequality_check,
    variance_stability_check,
)

pytestmark = pytest.mark.acceptance

SEEDS_1 = range(10)
SEEDS_3 = range(3)


@pytest.fixture(scope="session")
def disk_runs():
    sp = EuclideanBall(2, 1.0)
    beta = 1.0 / (2.0 * sp.diameter**2)
    sched = Schedule.constant(beta)
    reps = [run_game(sp, sched, make_losses(sp, {"family": "sqdist"}, 1000, s), 10_000, s) for s in SEEDS_1]
    return sp, beta, reps


@pytest.fixture(scope="session")
def cap_runs():
    sp = SphereCap(0.6)
    sched = Schedule.adaptive(0.0, 1.0)
    out = []
    for s in SEEDS_3:
        losses = make_losses(sp, {"family": "dist"}, 2000, s)
        rep = run_game(sp, sched, losses, 10_000, s, refine_every=10)
        out.append((rep, hindsight_gap(sp, losses, rep.hindsight_value, n_grid=200_000)))
    return sp, out


def test_criterion_1_constant_beta_bound(disk_runs, criterion):
    sp, beta, reps = disk_runs
    assert beta == 1 / 8
    ratios = []
    for rep in reps:
        n = rep.rounds[1:]
        bound = (2.0 + 2.0 * np.log(n)) / beta
        assert np.allclose(rep.bounds[1:], bound)
        ratios.append(float(np.max(rep.regret[1:] / (1.10 * bound))))
    ok = max(ratios) <= 1.0
    criterion(1, ok, f"max R_n / (1.1 bound) = {max(ratios):.4f} over {len(reps)} seeds")
    assert ok


def test_criterion_2_logarithmic_shape(disk_runs, criterion):
    sp, beta, reps = disk_runs
    p = sp.p
    slopes, trends = [], []
    for rep in reps:
        n = rep.rounds[99:].astype(float)
        y = rep.regret[99:]
        X = np.column_stack([np.ones_like(n), np.log(n)])
        slopes.append(np.linalg.lstsq(X, y, rcond=None)[0][1])
        # linear term added to the log fit
        X3 = np.column_stack([X, n])
        trends.append(np.linalg.lstsq(X3, y, rcond=None)[0][2])
    slopes = np.asarray(slopes)
    trends = np.asarray(trends)
    mean_t = float(np.mean(trends))
    se_t = float(np.std(trends, ddof=1) / math.sqrt(len(trends)))
    ok_slope = bool(np.all(slopes <= 1.2 * p / beta))
    ok_trend = abs(mean_t) <= 3.0 * se_t
    ok = ok_slope and ok_trend
    criterion(2, ok, f"max ln-coefficient {slopes.max():.3f} (cap {1.2 * p / beta:.1f}); "
                     f"linear term {mean_t:.3g} +- {se_t:.3g}")
    assert ok


def test_criterion_3_adaptive_bound_on_cap(cap_runs, criterion):
    sp, out = cap_runs
    ratios, gaps = [], []
    for rep, gap in out:
        n = rep.rounds[1:]
        bound = 1.0 + analysis.C1 * np.sqrt(sp.p * n * np.log(n))
        assert np.allclose(rep.bounds[1:], bound)
        ratios.append(float(np.max(rep.regret[1:] / (1.10 * bound))))
        gaps.append(gap)
    # an attained hindsight value above the true minimum would understate regret
    ok = max(ratios) <= 1.0 and max(gaps) <= 1e-3
    criterion(3, ok, f"max R_n / (1.1 bound) = {max(ratios):.4f}; worst grid gap {max(gaps):.2e}")
    assert ok


def test_criterion_4_proof_inequalities(disk_runs, cap_runs, criterion):
    _, _, reps1 = disk_runs
    _, out3 = cap_runs
    reps = list(reps1) + [r for r, _ in out3]
    worst = {}
    ok = True
    for rep in reps:
        chk = rep.proof_checks
        ok &= chk["telescoping"]["pass"] and chk["gibbs_variational"]["pass"]
        for k, v in chk.items():
            if v["applicable"]:
                worst[k] = max(worst.get(k, -math.inf), v["max_violation"])
    for rep in reps1:
        ok &= bool(rep.proof_checks["gibbs_bound"]["applicable"] and rep.proof_checks["gibbs_bound"]["pass"])
    for rep, _ in out3:
        ok &= bool(rep.proof_checks["convex_bound"]["pass"])
    ok &= all(v <= 1e-8 for v in worst.values())
    criterion(4, ok, "; ".join(f"{k} {v:.2e}" for k, v in sorted(worst.items())))
    assert ok


def test_criterion_5_geometry_battery(criterion):
    rng = stream(5, "acceptance-geometry")
    n_tri = 10_000
    eq = analysis.check_curvature_bound(EuclideanBall(2, 1.0), 0.0, "equal", n_tri, rng, tol=1e-10)
    lo = analysis.check_curvature_bound(SphereCap(0.6), 0.0, "lower", n_tri, rng)
    up = analysis.check_curvature_bound(HyperbolicDisk(1.0), 0.0, "upper", n_tri, rng)
    spaces = [EuclideanBall(2, 1.0), SphereCap(0.6), HyperbolicDisk(1.0), SPDSpace(2, 1.0), QuantileSpace(8)]
    scal = [analysis.check_geodesic_scaling(s, 1000, rng, rtol=1e-8) for s in spaces]
    r1 = np.linspace(0.0, math.pi, 1000)
    e1 = np.linspace(0.0, 1.0, 1002)[1:-1]
    r2 = np.linspace(0.0, 50.0, 1000)
    e2 = np.linspace(0.0, 0.5, 1001)[1:]
    l1 = analysis.lemma43_check(r1, e1, part=1, tol=1e-12)
    l2 = analysis.lemma43_check(r2, e2, part=2, tol=1e-12)
    assert l1.n_trials == 10**6 and l2.n_trials == 10**6
    reports = [eq, lo, up, *scal, l1, l2]
    ok = all(r.passed and r.n_failures == 0 for r in reports)
    criterion(5, ok, f"euclid eq {eq.worst_violation:.1e}, sphere {lo.worst_violation:.1e}, "
                     f"hyperbolic {up.worst_violation:.1e}, scaling {max(r.worst_violation for r in scal):.1e}, "
                     f"sine {l1.n_failures} / sinh {l2.n_failures} failures")
    assert ok


def test_criterion_6_psi_and_c(criterion):
    ok0 = analysis.psi(0.0) == 1.0 / math.e
    r = np.linspace(0.0, 0.2, 20_001)
    near0 = float(np.max(np.abs(analysis.psi(r) - (1 / math.e - r**4 / (18 * math.e)))))
    tail = abs(float(analysis.psi(30.0)) / (30.0 * math.exp(-30.0)) - 1.0)
    sp = HyperbolicDisk(1.0)
    x = sp.sample(1, stream(6, "c-point"))[0]
    est, se = analysis.c_kappa_p(sp, x, -1.0, 2.0, n_mc=100_000, seed=stream(6, "c-estimate"))
    oracle, _ = analysis.c_kappa_p(sp, x, -1.0, 2.0, n_mc=10**7, seed=stream(6, "c-oracle"))
    z = abs(est - oracle) / se
    ok = ok0 and near0 <= 1e-5 and tail <= 1e-6 and z <= 3.0
    criterion(6, ok, f"near-0 err {near0:.1e}, tail err {tail:.1e}, c={est:.5f} vs oracle {oracle:.5f} ({z:.2f} se)")
    assert ok


def test_criterion_7_ball_mass(criterion):
    worst = -math.inf
    fails = 0
    for sp in (EuclideanBall(2, 1.0), SphereCap(0.6)):
        rng = stream(7, f"ball-mass-{sp.kind}")
        for _ in range(100):
            x = sp.sample(1, rng)[0]
            r0 = float(rng.uniform(0.0, 1.0)) * sp.diameter / 4.0 or sp.diameter / 4.0
            r = float(rng.uniform(0.0, 1.0)) * r0 or r0
            rep = analysis.ball_mass_check(sp, x, r, r0, sp.p, sp.kappa, 100_000, rng)
            z = (rep.details["bound"] - rep.details["mass_r"]) / max(rep.details["stderr"], 1e-300)
            worst = max(worst, z)
            fails += not rep.passed
    ok = fails == 0
    criterion(7, ok, f"{fails} failures in 200 pairs; worst (bound - mass) / se = {worst:.2f}")
    assert ok


def test_criterion_8_online_to_batch(criterion):
    task = quadratic_task(EuclideanBall(1, 1.0))
    res = replicate(task.space, Schedule.constant(1 / 8), task, 500, 20, n_atoms=10_000, seed=8,
                    n_mc=100_000, n_z=100)
    ok = res["pass"] and res["estimate"] <= res["bound"] + 3 * res["stderr"] and res["jensen_worst"] <= 1e-8
    criterion(8, ok, f"excess risk {res['estimate']:.2e} +- {res['stderr']:.1e} vs bound {res['bound']:.4f}; "
                     f"Jensen worst {res['jensen_worst']:.1e}")
    assert ok


def test_criterion_9_wasserstein(criterion):
    rng = stream(9, "meta-measures")
    n_checks = fails = 0
    worst_var = worst_stab = worst_hoef = -math.inf
    for _ in range(1000):
        P = random_meta_measure(rng, K=1024)
        beta = max_beta(P)
        for i in range(len(P)):
            mu = P.atom(i)
            rep = variance_inequality_check(P, mu, beta, tol=1e-8)
            viol, ok_l = variance_stability_check(P, mu, tol=1e-8)
            lhs, rhs, ok_h = hoeffding_check(P, mu, beta, tol=1e-8)
            worst_var = max(worst_var, rep.lhs - rep.rhs)
            worst_stab = max(worst_stab, viol)
            worst_hoef = max(worst_hoef, lhs - rhs)
            fails += not (rep.conclusive and rep.passed and ok_l and ok_h)
            n_checks += 1
        viol, ok_l = variance_stability_check(P, random_quantile_measure(rng, K=1024), tol=1e-8)
        worst_stab = max(worst_stab, viol)
        fails += not ok_l
        n_checks += 1
    ok = fails == 0
    criterion(9, ok, f"{fails} failures in {n_checks} checks; worst margins: mixability {worst_var:.2e}, "
                     f"variance {worst_stab:.2e}, Hoeffding {worst_hoef:.2e}")
    assert ok


def test_criterion_10_determinism(tmp_path, criterion):
    configs = {
        "disk": {"space": {"kind": "euclidean", "params": {"dim": 2, "radius": 1.0}},
                 "loss": {"family": "sqdist"}, "rounds": 200, "n_atoms": 2000, "seeds": [3]},
        "cap": {"space": {"kind": "sphere", "params": {"angle": 0.6}},
                "loss": {"family": "dist"}, "rounds": 200, "n_atoms": 2000, "seeds": [3]},
    }
    same = True
    for name, cfg in configs.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg))
        for d in ("a", "b"):
            assert main(["run", "--config", str(path), "--out", str(tmp_path / name / d)]) == 0
        for f in ("regret_seed3.csv", "plot.csv"):
            same &= (tmp_path / name / "a" / f).read_bytes() == (tmp_path / name / "b" / f).read_bytes()
    criterion(10, same, "byte-identical CSVs across two runs (disk, cap)")
    assert same

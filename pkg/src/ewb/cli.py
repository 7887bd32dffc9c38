"""Command line driver: ``run``, ``verify``, ``batch`` and ``bound``.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime
failure, 3 a verification check failed.
"""

import argparse
import csv
import json
import logging
import math
import os
import re
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import analysis, batch, measures
from .barycenter import jensen_check
from .exceptions import DomainError
from .forecaster import Schedule, run_game
from .geometry import EuclideanBall, SPACE_KINDS, space_from_dict
from .losses import scaled_distance_loss, squared_distance_loss
from .rng import stream

log = logging.getLogger("ewb")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_VERIFY = 0, 1, 2, 3
MODES = ("experiment", "verify", "batch")
LOSS_FAMILIES = ("sqdist", "dist")


class ConfigError(ValueError):
    def __init__(self, msg, path="<config>", line=None):
        self.path, self.line, self.msg = path, line, msg
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {msg}")


@dataclass
class ExperimentConfig:
    space: dict
    loss: dict = field(default_factory=lambda: {"family": "sqdist"})
    schedule: Optional[dict] = None
    rounds: int = 1000
    n_atoms: int = 10_000
    seeds: list = field(default_factory=lambda: [0])
    out: str = "out"
    mode: str = "experiment"
    batch: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d, path="<config>", text=None):
        def fail(key, msg):
            raise ConfigError(msg, path, _line_of(text, key))

        if not isinstance(d, dict):
            raise ConfigError("top level must be an object", path, 1)
        known = set(cls.__dataclass_fields__)
        for key in d:
            if key not in known:
                fail(key, f"unknown field {key!r}")
        if "space" not in d:
            raise ConfigError("missing required field 'space'", path, 1)
        cfg = cls(**d)
        if not isinstance(cfg.space, dict) or cfg.space.get("kind") not in SPACE_KINDS:
            fail("space", f"space kind must be one of {sorted(SPACE_KINDS)}")
        try:
            space_from_dict(cfg.space)
        except (DomainError, TypeError, ValueError) as exc:
            fail("space", f"invalid space: {exc}")
        if not isinstance(cfg.loss, dict) or cfg.loss.get("family") not in LOSS_FAMILIES:
            fail("loss", f"loss family must be one of {list(LOSS_FAMILIES)}")
        if cfg.schedule is not None:
            try:
                Schedule.from_dict(cfg.schedule)
            except (KeyError, TypeError, ValueError) as exc:
                fail("schedule", f"invalid schedule: {exc}")
        if not _is_int(cfg.rounds) or cfg.rounds < 1:
            fail("rounds", "rounds must be an integer >= 1")
        if not _is_int(cfg.n_atoms) or cfg.n_atoms < 2:
            fail("n_atoms", "n_atoms must be an integer >= 2")
        if not isinstance(cfg.seeds, list) or not cfg.seeds or not all(_is_int(s) and s >= 0 for s in cfg.seeds):
            fail("seeds", "seeds must be a nonempty list of nonnegative integers")
        if cfg.mode not in MODES:
            fail("mode", f"mode must be one of {list(MODES)}")
        if not isinstance(cfg.out, str) or not cfg.out:
            fail("out", "out must be a nonempty path")
        if not isinstance(cfg.batch, dict):
            fail("batch", "batch must be an object")
        return cfg

    @classmethod
    def from_json(cls, text, path="<config>"):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
        return cls.from_dict(d, path, text)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read(), path)

    def build_space(self):
        return space_from_dict(self.space)

    def build_schedule(self, space):
        if self.schedule is not None:
            return Schedule.from_dict(self.schedule)
        return default_schedule(space, self.loss["family"])

    def build_losses(self, space, seed):
        return make_losses(space, self.loss, self.rounds, seed)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _line_of(text, key):
    if text is None:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    if m is None:
        return 1
    return text.count("\n", 0, m.start()) + 1


def default_schedule(space, family):
    """Constant beta = 1/(2 diam^2) for squared distances on nonpositively
    curved spaces, the adaptive schedule on the loss range otherwise."""
    if family == "sqdist" and space.kappa <= 0:
        return Schedule.constant(1.0 / (2.0 * space.diameter**2))
    hi = space.diameter**2 if family == "sqdist" else 1.0
    return Schedule.adaptive(0.0, hi)


def make_losses(space, loss_cfg, n, seed):
    """Losses centered at prior draws from the seed's ``centers`` stream."""
    centers = space.sample(n, stream(seed, "centers"))
    params = dict(loss_cfg.get("params", {}))
    if loss_cfg["family"] == "sqdist":
        return [squared_distance_loss(space, c) for c in centers]
    return [scaled_distance_loss(space, c, params.get("scale")) for c in centers]


# -- run --------------------------------------------------------------------


def _write_plot(path, reports):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "n", "regret", "bound"])
        for seed, rep in reports:
            for k in range(rep.n):
                w.writerow([seed, k + 1, repr(float(rep.regret[k])), repr(float(rep.bounds[k]))])


def run_experiment(cfg, out=None):
    """Play one game per seed and write the artifacts. Returns (exit code, summary)."""
    out = cfg.out if out is None else out
    os.makedirs(out, exist_ok=True)
    space = cfg.build_space()
    schedule = cfg.build_schedule(space)
    mode = "verify" if cfg.mode == "verify" else "experiment"
    files, per_seed, reports = [], [], []
    summary = {"config": cfg.to_dict(), "schedule": schedule.to_dict(), "files": files, "seeds": per_seed}
    code = EXIT_OK
    try:
        for seed in cfg.seeds:
            log.info("seed %d: %d rounds, %d atoms", seed, cfg.rounds, cfg.n_atoms)
            rep = run_game(space, schedule, cfg.build_losses(space, seed), cfg.n_atoms, seed, mode=mode)
            name = f"regret_seed{seed}.csv"
            rep.to_csv(os.path.join(out, name))
            files.append(name)
            reports.append((seed, rep))
            s = rep.summary()
            s["file"] = name
            s["proofs_ok"] = rep.proofs_ok()
            per_seed.append(s)
            if rep.aborted:
                raise RuntimeError(rep.aborted)
    except Exception as exc:  # keep partial artifacts
        summary["error"] = str(exc)
        code = EXIT_RUNTIME
    if reports:
        _write_plot(os.path.join(out, "plot.csv"), reports)
        files.append("plot.csv")
    finals = [s["final_regret"] for s in per_seed]
    summary.update({
        "mean_final_regret": float(np.mean(finals)) if finals else None,
        "max_regret": max((s["max_regret"] for s in per_seed), default=None),
        "bound_ok": all(s["bound_ok"] for s in per_seed),
        "proofs_ok": all(s["proofs_ok"] for s in per_seed),
    })
    summary["pass"] = summary["bound_ok"] and summary["proofs_ok"] and code == EXIT_OK
    files.append("summary.json")
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    if code == EXIT_OK and not summary["proofs_ok"]:
        code = EXIT_VERIFY
    if code == EXIT_OK and cfg.mode == "verify" and not summary["bound_ok"]:
        code = EXIT_VERIFY
    return code, summary


# -- verify -----------------------------------------------------------------


def canonical_loss(space, center):
    """Expconcave squared distance on nonpositively curved spaces, scaled
    distance on the sphere cap."""
    if space.kappa <= 0:
        return squared_distance_loss(space, center)
    return scaled_distance_loss(space, center)


def verify_battery(space, seed=0, n_trials=1000, n_mc=100_000, rounds=50, n_atoms=2000):
    """Run every checker that applies to ``space``; keys name the property."""
    rep = {}
    rng = stream(seed, "verify")
    rep["geodesic_scaling"] = analysis.check_geodesic_scaling(space, n_trials, rng).to_dict()
    if space.kappa == 0:
        r = analysis.check_curvature_bound(space, 0.0, "equal", n_trials, rng, tol=1e-10)
        rep["comparison_identity"] = r.to_dict()
    else:
        side = "lower" if space.kappa > 0 else "upper"
        rep[f"curvature_{side}_0"] = analysis.check_curvature_bound(space, 0.0, side, n_trials, rng).to_dict()
        rep["curvature_model_equal"] = analysis.check_curvature_bound(
            space, space.kappa, "equal", n_trials, rng).to_dict()

    center = space.sample(1, rng)[0]
    f = canonical_loss(space, center)
    if f.alpha is not None:
        rep["convexity"] = analysis.check_alpha_convex(space, f, f.alpha, 500, rng).to_dict()
    if f.beta_expconcave is not None:
        rep["expconcavity"] = analysis.check_expconcave(space, f, f.beta_expconcave, 500, rng).to_dict()

    if space.kappa <= 0:
        atoms = space.sample(20, rng)
        pm = measures.from_atoms(atoms, rng.random(20) + 0.1)
        rep["jensen"] = jensen_check(space, pm, f, alpha=0.0).to_dict()

    if space.p > 1:
        x = space.sample(1, rng)[0]
        r0 = space.diameter / 4.0
        if space.kappa > 0:
            r0 = min(r0, 0.49 * math.pi * math.sqrt((space.p - 1.0) / space.kappa))
        r = float(rng.uniform(0.1, 1.0)) * r0
        rep["ball_mass"] = analysis.ball_mass_check(space, x, r, r0, space.p, space.kappa, n_mc, rng).to_dict()
        if space.kappa < 0:
            est, se = analysis.c_kappa_p(space, x, space.kappa, space.p, n_mc, rng)
            lower = analysis.uniform_c_lower_bound(space, space.kappa, space.p)
            rep["c_kappa_p"] = {"estimate": est, "stderr": se, "lower_bound": lower,
                                "pass": bool(lower - 3 * se <= est <= 1.0)}

    grid_r = np.linspace(0.0, math.pi, 1000)
    grid_e = np.linspace(0.0, 1.0, 1001)[1:-1]
    rep["sine_ratio"] = analysis.lemma43_check(grid_r, grid_e, part=1).to_dict()
    rep["sinh_ratio"] = analysis.lemma43_check(np.linspace(0.0, 50.0, 1000),
                                                 np.linspace(0.0, 0.5, 501)[1:], part=2).to_dict()

    sched = default_schedule(space, "sqdist" if space.kappa <= 0 else "dist")
    centers = space.sample(rounds, stream(seed, "verify-centers"))
    game = run_game(space, sched, [canonical_loss(space, c) for c in centers], n_atoms, seed, mode="verify")
    for name, chk in game.proof_checks.items():
        if chk["applicable"]:
            rep[f"proof_{name}"] = chk
    rep["regret_bound"] = {"final_regret": game.final_regret, "final_bound": float(game.bounds[-1]),
                           "pass": game.bound_ok() and game.aborted is None}
    return {"space": space.to_dict(), "seed": seed, "checks": rep,
            "pass": all(bool(v["pass"]) for v in rep.values())}


# -- argument handling --------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--seed", type=int, help="single seed (overrides the config)")
    common.add_argument("--atoms", type=int, help="number of prior atoms (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = _Parser(prog="ewb", description="Exponentially weighted barycentric forecaster")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("run", parents=[common], help="play games and write regret tables")
    pv = sub.add_parser("verify", parents=[common], help="run the checker battery for a space")
    pv.add_argument("--space", choices=sorted(SPACE_KINDS), help="space kind with default parameters")
    pb = sub.add_parser("batch", parents=[common], help="online-to-batch excess risk experiment")
    pb.add_argument("--n", type=int, help="sample size")
    pb.add_argument("--replications", type=int)

    pd = sub.add_parser("bound", help="evaluate a regret bound")
    pd.add_argument("--theorem", type=int, choices=(1, 2), required=True)
    pd.add_argument("--beta", type=float)
    pd.add_argument("--p", type=float, required=True)
    pd.add_argument("--n", type=int, required=True)
    pd.add_argument("--c", type=float, default=1.0)
    pd.add_argument("--a", type=float)
    pd.add_argument("--b", type=float)
    return ap


def _load_config(args, required=True):
    if args.config is None:
        if required:
            raise ConfigError("--config is required")
        return None
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seeds = [args.seed]
    if args.atoms is not None:
        if args.atoms < 2:
            raise ConfigError("--atoms must be at least 2", "--atoms")
        cfg.n_atoms = args.atoms
    if args.out is not None:
        cfg.out = args.out
    return cfg


def _cmd_run(args):
    cfg = _load_config(args)
    code, summary = run_experiment(cfg)
    print(json.dumps({k: summary[k] for k in ("mean_final_regret", "max_regret", "bound_ok",
                                              "proofs_ok", "pass", "files")}))
    if "error" in summary:
        print(f"error: {summary['error']}", file=sys.stderr)
    return code


def _cmd_verify(args):
    cfg = _load_config(args, required=False)
    if cfg is not None:
        space = cfg.build_space()
        seed, n_atoms, out = cfg.seeds[0], cfg.n_atoms, cfg.out
    elif args.space is not None:
        space = space_from_dict({"kind": args.space})
        seed, n_atoms, out = 0, 2000, args.out
    else:
        raise ConfigError("verify needs --config or --space")
    seed = seed if args.seed is None else args.seed
    n_atoms = n_atoms if args.atoms is None else args.atoms
    report = verify_battery(space, seed, n_atoms=n_atoms)
    text = json.dumps(report, indent=2, sort_keys=True)
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "verify.json"), "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK if report["pass"] else EXIT_VERIFY


def _cmd_batch(args):
    cfg = _load_config(args, required=False)
    if cfg is None:
        cfg = ExperimentConfig(space={"kind": "euclidean", "params": {"dim": 1}}, rounds=500)
        if args.seed is not None:
            cfg.seeds = [args.seed]
        if args.atoms is not None:
            cfg.n_atoms = args.atoms
        cfg.out = args.out
    space = cfg.build_space()
    if not isinstance(space, EuclideanBall):
        raise ConfigError("the batch task needs a euclidean space", cfg.out)
    opts = dict(cfg.batch)
    n = args.n if args.n is not None else int(opts.get("n", cfg.rounds))
    n_rep = args.replications if args.replications is not None else int(opts.get("replications", 20))
    if n < 1 or n_rep < 1:
        raise ConfigError("n and replications must be at least 1")
    schedule = cfg.build_schedule(space)
    if schedule.kind != "constant":
        raise ConfigError("the batch bound needs a constant schedule")
    task = batch.quadratic_task(space)
    res = batch.replicate(space, schedule, task, n, n_rep, cfg.n_atoms, cfg.seeds[0],
                          n_mc=int(opts.get("n_mc", 100_000)))
    out = {k: res[k] for k in ("n", "estimate", "stderr", "bound", "pass")}
    out.update(replications=res["replications"], jensen_worst=res["jensen_worst"])
    text = json.dumps(out, indent=2, sort_keys=True)
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, "batch.json"), "w") as fh:
            fh.write(text + "\n")
    print(text)
    return EXIT_OK if res["pass"] else EXIT_VERIFY


def _cmd_bound(args):
    if args.theorem == 1:
        if args.beta is None:
            raise ConfigError("theorem 1 needs --beta", "bound")
        v = analysis.regret_bound_thm1(args.beta, args.p, args.n, args.c)
    else:
        if args.a is None or args.b is None:
            raise ConfigError("theorem 2 needs --a and --b", "bound")
        v = analysis.regret_bound_thm2(args.a, args.b, args.p, args.n, args.c)
    print(f"{v:.6g}")
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "verify": _cmd_verify, "batch": _cmd_batch, "bound": _cmd_bound}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:
        log.exception("runtime failure")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

"""
Command-line front end.

    capacity-lab <command> --config <path> [--out <path>] [--seed <int>] [--jobs <int>]

The config is an INI file.  Each command reads its own section plus the
shared ``[solver]`` and ``[biht]`` sections; ``[run]`` holds ``seed`` and
``out``.  Grids are comma-separated lists or ``linspace(start, stop, num)``.

Exit codes: 0 every row succeeded, 2 some rows failed, 1 configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .biht import BIHTConfig, generate_dataset, greedy_biht
from .gaussian import default_grid, make_grid
from .model import ModelPoint, SolverOptions
from .separability import MAX_SUBSETS, selection_probabilities
from .stability import at_margin
from .subcritical import solve_subcritical, subcritical_entropy_from_params
from .supercritical import capacity_vs, solve_branch

log = logging.getLogger("capacity_lab")

COMMANDS = ("rs-profile", "capacity-curve", "at-check", "simulate", "oracle")

HELP_DEFAULTS = """\
config sections and defaults:
  [run]            seed = 0, out = <command>.csv
  [solver]         tolerance = 1e-10, max_iter = 5000, damping = 0.5,
                   alpha_tolerance = 1e-4, sigma_tolerance = 1e-8,
                   alpha_scan_max = 6.0, start_offset = 1e-3,
                   quadrature = composite | hermite, order = 200 (hermite only)
  [rs-profile]     rho, alpha (grid)
  [capacity-curve] rho (grid, inside (0, 1))
  [at-check]       rho, alpha (grid), at_tolerance = 1e-9
  [simulate]       N (list), alpha (grid), trials = 100, ensemble = binary
  [biht]           tau = 0.002/P, eps = 1e-8, L = 1000, shared_budget = false,
                   init_scale = divide
  [oracle]         N = 12, M = 6, P (grid of integers), trials = 500,
                   ensemble = binary
"""


class ConfigError(ValueError):
    """Invalid or incomplete configuration."""


# ---------------------------------------------------------------- parsing

_LINSPACE = re.compile(r"^linspace\(\s*([^,]+),([^,]+),([^,]+)\)$")


def parse_grid(text: str, integer: bool = False) -> list:
    """Comma list or ``linspace(a, b, n)``; must be nonempty and increasing."""
    text = text.strip()
    m = _LINSPACE.match(text)
    try:
        if m:
            a, b, n = float(m.group(1)), float(m.group(2)), int(m.group(3))
            vals = list(np.linspace(a, b, n))
        else:
            vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from None
    if not vals:
        raise ConfigError("grid is empty")
    if integer:
        if any(v != int(v) for v in vals):
            raise ConfigError(f"grid {text!r} must hold integers")
        vals = [int(v) for v in vals]
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError(f"grid {text!r} is not strictly increasing")
    return vals


@dataclass
class RunConfig:
    command: str
    rho: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    N: list = field(default_factory=list)
    M: int = 6
    P: list = field(default_factory=list)
    trials: int = 100
    ensemble: str = "binary"
    quadrature: str = "composite"
    order: int = 200
    solver: SolverOptions = field(default_factory=SolverOptions)
    biht: BIHTConfig = field(default_factory=BIHTConfig)
    at_tolerance: float = 1e-9
    seed: int = 0
    out: Path = Path("out.csv")
    jobs: int = 1

    def grid(self):
        if self.quadrature == "hermite":
            return make_grid(self.order)
        return default_grid()


def _get(sec, key, conv, default):
    if sec is None or key not in sec:
        return default
    try:
        return conv(sec[key])
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key}: {exc}") from None


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _require(sec, key, command):
    if sec is None or key not in sec:
        raise ConfigError(f"[{command}] needs '{key}'")
    return sec[key]


def load_config(path, command: str, out=None, seed=None, jobs=None) -> RunConfig:
    """Read and validate the config for ``command``."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    sec = cp[command] if cp.has_section(command) else None
    run = cp["run"] if cp.has_section("run") else None
    sol = cp["solver"] if cp.has_section("solver") else None
    bh = cp["biht"] if cp.has_section("biht") else None

    cfg = RunConfig(command=command)
    cfg.seed = seed if seed is not None else _get(run, "seed", int, 0)
    cfg.jobs = jobs if jobs is not None else _get(run, "jobs", int, 1)
    if cfg.jobs < 1:
        raise ConfigError("jobs must be >= 1")
    out = out or _get(run, "out", str, f"{command}.csv")
    cfg.out = Path(out)
    if cfg.out.parent and not cfg.out.parent.exists():
        raise ConfigError(f"output directory {cfg.out.parent} does not exist")

    try:
        cfg.solver = SolverOptions(
            tolerance=_get(sol, "tolerance", float, 1e-10),
            max_iter=_get(sol, "max_iter", int, 5000),
            damping=_get(sol, "damping", float, 0.5),
            alpha_tolerance=_get(sol, "alpha_tolerance", float, 1e-4),
            sigma_tolerance=_get(sol, "sigma_tolerance", float, 1e-8),
            alpha_scan_max=_get(sol, "alpha_scan_max", float, 6.0),
            start_offset=_get(sol, "start_offset", float, 1e-3))
        tau = _get(bh, "tau", float, None)
        cfg.biht = BIHTConfig(tau=tau, eps=_get(bh, "eps", float, 1e-8),
                              L=_get(bh, "L", int, 1000),
                              shared_budget=_get(bh, "shared_budget", _bool, False),
                              init_scale=_get(bh, "init_scale", str, "divide"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg.quadrature = _get(sol, "quadrature", str, "composite")
    if cfg.quadrature not in ("composite", "hermite"):
        raise ConfigError("quadrature must be 'composite' or 'hermite'")
    cfg.order = _get(sol, "order", int, 200)
    if cfg.order < 1:
        raise ConfigError("order must be >= 1")

    if command in ("rs-profile", "at-check", "capacity-curve"):
        cfg.rho = parse_grid(_require(sec, "rho", command))
        hi_ok = command != "capacity-curve"
        for r in cfg.rho:
            if not (0.0 < r < 1.0 or (hi_ok and r == 1.0)):
                raise ConfigError(f"rho={r} outside the admissible range")
    if command in ("rs-profile", "at-check"):
        cfg.alpha = parse_grid(_require(sec, "alpha", command))
        if cfg.alpha[0] <= 0:
            raise ConfigError("alpha must be positive")
        cfg.at_tolerance = _get(sec, "at_tolerance", float, 1e-9)
    if command == "simulate":
        cfg.N = parse_grid(_require(sec, "N", command), integer=True)
        cfg.alpha = parse_grid(_require(sec, "alpha", command))
        cfg.trials = _get(sec, "trials", int, 100)
        cfg.ensemble = _get(sec, "ensemble", str, "binary")
        if cfg.N[0] < 1 or cfg.alpha[0] <= 0:
            raise ConfigError("N and alpha must be positive")
    if command == "oracle":
        cfg.N = [_get(sec, "N", int, 12)]
        cfg.M = _get(sec, "M", int, 6)
        cfg.P = parse_grid(_require(sec, "P", command), integer=True)
        cfg.trials = _get(sec, "trials", int, 500)
        cfg.ensemble = _get(sec, "ensemble", str, "binary")
        N = cfg.N[0]
        if not 1 <= cfg.M <= N <= 20:
            raise ConfigError("oracle needs 1 <= M <= N <= 20")
        if math.comb(N, cfg.M) > MAX_SUBSETS:
            raise ConfigError(f"C({N}, {cfg.M}) exceeds {MAX_SUBSETS} subsets")
        if cfg.P[0] < 1:
            raise ConfigError("P must be >= 1")
    if command in ("simulate", "oracle"):
        if cfg.trials < 1:
            raise ConfigError("trials must be >= 1")
        if cfg.ensemble not in ("binary", "spherical"):
            raise ConfigError("ensemble must be 'binary' or 'spherical'")
    return cfg


# ---------------------------------------------------------------- output

def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else f"{float(x):.12g}"
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(row.get(k)) for k in header])


def _status(exc) -> str:
    msg = str(exc).replace("\n", " ")
    return f"error: {type(exc).__name__}: {msg}"


def _pmap(fn, items, jobs):
    """Ordered map, in a process pool when ``jobs > 1``."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------- commands

def _sub_row(args):
    rho, alpha, cfg = args
    point = ModelPoint(rho, alpha)
    row = {"rho": rho, "alpha": alpha, "regime": "subcritical"}
    try:
        p = solve_subcritical(point, cfg.grid(), cfg.solver)
        at = at_margin(p, point, cfg.grid(), cfg.at_tolerance)
        row.update(q1=p.q1, q0=p.q0, chi=None,
                   Sigma=subcritical_entropy_from_params(p, rho),
                   lam=at.lam, lam_hat=at.lam_hat, at_margin=at.margin,
                   at_status=at.status, status="ok")
    except Exception as exc:  # recorded per row, the sweep continues
        row["status"] = _status(exc)
    return row


def _super_rows(args):
    rho, alphas, cfg = args
    rows = []
    results = solve_branch(rho, alphas, cfg.grid(), cfg.solver)
    for a, p in zip(alphas, results):
        row = {"rho": rho, "alpha": a, "regime": "supercritical"}
        if isinstance(p, Exception):
            row["status"] = _status(p)
        else:
            point = ModelPoint(rho, a)
            try:
                at = at_margin(p, point, cfg.grid(), cfg.at_tolerance)
                row.update(q1=rho, q0=p.q0, chi=p.chi, Sigma=p.Sigma,
                           lam=at.lam, lam_hat=at.lam_hat, at_margin=at.margin,
                           at_status=at.status, status="ok")
            except Exception as exc:
                row["status"] = _status(exc)
        rows.append(row)
    return rows


def _profile_rows(cfg):
    tasks, order = [], []
    for rho in cfg.rho:
        acg = 2.0 * rho
        sub = [a for a in cfg.alpha if a < acg]
        sup = [a for a in cfg.alpha if a > acg]
        for a in sub:
            tasks.append(("sub", (rho, a, cfg)))
        if sup and rho < 1.0:
            tasks.append(("sup", (rho, sup, cfg)))
        order.append((rho, acg, sup))
    results = _pmap(_dispatch, tasks, cfg.jobs)
    by_key = {}
    for (kind, args), res in zip(tasks, results):
        for row in (res if kind == "sup" else [res]):
            by_key[(row["rho"], row["alpha"])] = row
    rows = []
    for rho, acg, sup in order:
        for a in cfg.alpha:
            row = by_key.get((rho, a))
            if row is None:
                reason = ("alpha equals alpha_CG" if a == acg
                          else "no supercritical branch at rho = 1")
                row = {"rho": rho, "alpha": a, "regime": "critical"
                       if a == acg else "supercritical",
                       "status": f"error: {reason}"}
            rows.append(row)
    return rows


def _dispatch(task):
    kind, args = task
    return _sub_row(args) if kind == "sub" else _super_rows(args)


def cmd_rs_profile(cfg: RunConfig):
    rows = _profile_rows(cfg)
    header = ["alpha", "regime", "q1", "q0", "chi", "Sigma", "at_margin", "status"]
    if len(cfg.rho) > 1:
        header = ["rho"] + header
    write_csv(cfg.out, header, rows)
    return rows


def cmd_at_check(cfg: RunConfig):
    rows = _profile_rows(cfg)
    write_csv(cfg.out, ["rho", "alpha", "regime", "lam", "lam_hat", "at_margin",
                        "at_status", "status"], rows)
    return rows


def _capacity_row(args):
    rho, cfg = args
    row = {"rho": rho, "alpha_cg": 2.0 * rho}
    try:
        res = capacity_vs(rho, cfg.grid(), cfg.solver)
        row.update(alpha_vs=res.alpha_vs, sigma_residual=res.sigma_residual,
                   status="ok")
    except Exception as exc:
        row["status"] = _status(exc)
    return row


def cmd_capacity_curve(cfg: RunConfig):
    rows = _pmap(_capacity_row, [(r, cfg) for r in cfg.rho], cfg.jobs)
    write_csv(cfg.out, ["rho", "alpha_cg", "alpha_vs", "sigma_residual", "status"],
              rows)
    return rows


def trial_seed(base: int, N: int, P: int, trial: int) -> int:
    """32-bit seed of one trial, a pure function of its coordinates."""
    ss = np.random.SeedSequence([int(base), int(N), int(P), int(trial)])
    return int(ss.generate_state(1)[0])


def _trial_row(args):
    N, P, alpha, t, cfg = args
    seed = trial_seed(cfg.seed, N, P, t)
    row = {"N": N, "P": P, "alpha": alpha, "ensemble": cfg.ensemble, "seed": seed}
    try:
        data = generate_dataset(N, P, cfg.ensemble, [seed, 0])
        bcfg = BIHTConfig(tau=cfg.biht.tau, eps=cfg.biht.eps, L=cfg.biht.L,
                          rng_seed=seed, shared_budget=cfg.biht.shared_budget,
                          init_scale=cfg.biht.init_scale)
        res = greedy_biht(data, bcfg)
        row.update(success=res.success, K_final=res.K_final,
                   rho_used=res.rho_used, iterations_total=res.iterations_total,
                   status="ok")
    except Exception as exc:
        row["status"] = _status(exc)
    return row


TRIAL_HEADER = ["N", "P", "alpha", "ensemble", "seed", "success", "K_final",
                "rho_used", "iterations_total", "status"]
AGG_HEADER = ["N", "alpha", "P", "trials", "completed", "success_rate",
              "mean_rho_used", "median_rho_used", "median_margin_over_cg"]


def aggregate_trials(rows):
    groups = {}
    for r in rows:
        groups.setdefault((r["N"], r["alpha"], r["P"]), []).append(r)
    out = []
    for (N, alpha, P), rs in groups.items():
        done = [r for r in rs if r.get("status") == "ok"]
        rho = np.array([r["rho_used"] for r in done], dtype=float)
        succ = [r for r in done if r["success"]]
        gap = np.array([alpha - 2.0 * r["rho_used"] for r in succ], dtype=float)
        out.append({"N": N, "alpha": alpha, "P": P, "trials": len(rs),
                    "completed": len(done),
                    "success_rate": len(succ) / len(done) if done else None,
                    "mean_rho_used": rho.mean() if done else None,
                    "median_rho_used": float(np.median(rho)) if done else None,
                    "median_margin_over_cg": float(np.median(gap)) if succ else None})
    return out


def aggregate_path(out: Path) -> Path:
    return out.with_name(out.stem + "_aggregate" + (out.suffix or ".csv"))


def cmd_simulate(cfg: RunConfig):
    tasks = []
    for N in cfg.N:
        for a in cfg.alpha:
            P = max(1, int(round(a * N)))
            tasks += [(N, P, a, t, cfg) for t in range(cfg.trials)]
    rows = _pmap(_trial_row, tasks, cfg.jobs)
    write_csv(cfg.out, TRIAL_HEADER, rows)
    write_csv(aggregate_path(cfg.out), AGG_HEADER, aggregate_trials(rows))
    return rows


def _oracle_row(args):
    N, M, P, cfg = args
    row = {"rho": M / N, "N": N, "M": M, "P": P}
    try:
        pa, pf = selection_probabilities(N, M, P, cfg.trials, cfg.seed, cfg.ensemble)
        row.update(prob_any_subset=pa, prob_fixed_subset=pf, status="ok")
    except Exception as exc:
        row["status"] = _status(exc)
    return row


def cmd_oracle(cfg: RunConfig):
    N = cfg.N[0]
    rows = _pmap(_oracle_row, [(N, cfg.M, P, cfg) for P in cfg.P], cfg.jobs)
    write_csv(cfg.out, ["rho", "N", "M", "P", "prob_any_subset",
                        "prob_fixed_subset", "status"], rows)
    return rows


HANDLERS = {
    "rs-profile": cmd_rs_profile,
    "capacity-curve": cmd_capacity_curve,
    "at-check": cmd_at_check,
    "simulate": cmd_simulate,
    "oracle": cmd_oracle,
}


def build_parser():
    p = argparse.ArgumentParser(
        prog="capacity-lab",
        description="Perceptron capacity under variable selection: "
                    "RS profiles, capacity curve, stability check, "
                    "greedy-BIHT simulation and exact small-N oracle.",
        epilog=HELP_DEFAULTS,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="INI configuration file")
    p.add_argument("--out", help="output CSV (overrides [run] out)")
    p.add_argument("--seed", type=int, help="base seed (overrides [run] seed)")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # usage errors are configuration errors, not partial runs
        return 0 if exc.code in (0, None) else 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.command, args.out, args.seed, args.jobs)
    except ConfigError as exc:
        print(f"capacity-lab: configuration error: {exc}", file=sys.stderr)
        return 1
    rows = HANDLERS[args.command](cfg)
    failed = sum(1 for r in rows if r.get("status") != "ok")
    if failed:
        print(f"capacity-lab: {failed} of {len(rows)} rows failed; see the "
              f"status column of {cfg.out}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

"""Command line experiment runner.

    sdwave <experiment> [--config PATH] [--out DIR] [--threads N] [--seed S]

Experiments: dispersion, figure1, theorem1, theorem2, observability.  The
config is a flat JSON object; unknown keys are rejected.  Wave numbers are
given as multiples of pi and parsed exactly (``"19/20"`` means ``19 pi / 20``);
scale rules are strings such as ``"h^-0.375"`` or ``"gamma^-2"``.

Every run writes CSV tables and a ``<experiment>.json`` summary (with the
resolved config echoed back) into the output directory.  Exit status: 0 when
all checks pass, 1 when a check fails, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import re
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import asymptotics, decomposition, dispersion, observability
from .errors import ConfigError, SdwaveError
from .evolution import packet_state, propagate, time_derivative_field
from .lattice import PeriodicLattice
from .packets import PacketSpec, packet_diagnostics
from .profiles import profile_by_name

log = logging.getLogger("sdwave")

EXPERIMENTS = ("dispersion", "figure1", "theorem1", "theorem2", "observability")

_COMMON = {"experiment": None, "d": 1, "eta0": ["19/20"], "profile": "gaussian"}

DEFAULTS = {
    "dispersion": {"eta_min": "1/32", "eta_max": "1", "n_points": 32},
    "figure1": {
        "h": 0.005, "gamma_rule": "h^-0.375", "gamma": None, "x_star": None,
        "times": [0.0, 1.0], "cutoff": "zone", "tolerance": 0.02, "L": None, "M": None,
    },
    "theorem1": {
        "h_list": [0.04, 0.02, 0.01, 0.005], "gamma_rule": "h^-0.375",
        "t_list": [0.5, 1.0], "slope_range": [3.5, 4.5],
    },
    "theorem2": {
        "h_list": [0.02, 0.01, 0.005], "J_list": [0, 1], "s": 1.0, "slope_tolerance": 0.2,
        "pde_h": 0.01, "pde_t": 1.0, "dt_list": [0.01, 0.005, 0.0025],
        "richardson_range": [1.7, 2.3],
    },
    "observability": {
        "gamma_list": [4, 8, 16], "h_rule": "gamma^-2", "x_star": None, "T": 1.0,
        "control_T": 2.5, "cutoff": "periodic", "betas": [2, 4], "control_max_ratio": 2.0,
    },
}

_RULE = re.compile(r"^\s*(h|gamma)\s*\^\s*([-+]?\d+(?:\.\d+)?(?:/\d+)?)\s*$")


# -- parsing -----------------------------------------------------------------

def pi_multiple(value) -> float:
    """``"19/20"`` or ``0.95`` -> ``0.95 pi`` (rational part parsed exactly)."""
    try:
        frac = Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse {value!r} as a multiple of pi") from exc
    return float(frac) * math.pi


def parse_rule(rule: str, variable: str):
    m = _RULE.match(str(rule))
    if not m or m.group(1) != variable:
        raise ConfigError(f"rule {rule!r} must look like '{variable}^<power>'")
    power = float(Fraction(m.group(2)))
    return lambda x: float(x) ** power


def load_config(experiment: str, path: str | None) -> dict:
    cfg = dict(_COMMON)
    cfg.update(DEFAULTS[experiment])
    cfg["experiment"] = experiment
    if path is None:
        return cfg
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(user, dict):
        raise ConfigError(f"{path}: top level must be an object")
    for key, val in user.items():
        if key not in cfg:
            raise ConfigError(f"{path}: unknown key {key!r} for experiment {experiment}")
        if key == "experiment" and val != experiment:
            raise ConfigError(f"{path}: config is for {val!r}, not {experiment!r}")
        cfg[key] = val
    return cfg


def _positive(cfg, key):
    vals = cfg[key] if isinstance(cfg[key], list) else [cfg[key]]
    for v in vals:
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
            raise ConfigError(f"key {key!r}: expected positive numbers, got {cfg[key]!r}")


def _vector(cfg, key, d, default=0.0):
    val = cfg.get(key)
    if val is None:
        return (default,) * d
    val = list(val) if isinstance(val, (list, tuple)) else [val]
    if len(val) != d:
        raise ConfigError(f"key {key!r}: expected {d} components")
    return tuple(float(v) for v in val)


def _eta0(cfg):
    d = cfg["d"]
    if not isinstance(d, int) or d < 1:
        raise ConfigError("key 'd': expected a positive integer")
    eta = cfg["eta0"] if isinstance(cfg["eta0"], list) else [cfg["eta0"]]
    if len(eta) == 1 and d > 1:
        eta = eta * d
    if len(eta) != d:
        raise ConfigError(f"key 'eta0': expected 1 or {d} components")
    return tuple(pi_multiple(e) for e in eta)


def _profile(cfg):
    try:
        return profile_by_name(cfg["profile"])
    except KeyError as exc:
        raise ConfigError(f"key 'profile': {exc.args[0]}") from exc


# -- output ------------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header: list, rows: list) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(r[k]) for k in header])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt(x) if not math.isfinite(x) else float(fmt(x))
    return obj


def write_json(path: Path, obj: dict) -> None:
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


# -- experiments ---------------------------------------------------------------

def run_dispersion(cfg, out: Path, threads: int = 1) -> dict:
    d = cfg["d"]
    n = cfg["n_points"]
    if not isinstance(n, int) or n < 2:
        raise ConfigError("key 'n_points': expected an integer >= 2")
    lo, hi = Fraction(str(cfg["eta_min"])), Fraction(str(cfg["eta_max"]))
    if not 0 < lo < hi <= 1:
        raise ConfigError("need 0 < eta_min < eta_max <= 1")
    rows = []
    for k in range(n):
        theta = float(lo + (hi - lo) * Fraction(k, n - 1)) * math.pi
        eta = np.full(d, theta)
        om = float(dispersion.omega_semidiscrete(eta, 1.0))
        g = dispersion.group_velocity(eta, 1.0)
        rows.append({"eta": theta, "omega": om, "group_speed": float(np.linalg.norm(g))})
    write_csv(out / "dispersion.csv", ["eta", "omega", "group_speed"], rows)
    corner = np.full(d, math.pi)
    speed_corner = float(np.linalg.norm(dispersion.group_velocity(corner, 1.0)))
    checks = {"corner_group_velocity_zero": speed_corner <= 1e-12}
    return {"corner_group_speed": speed_corner, "checks": checks}


def _figure_lattice(cfg, spec, T):
    if cfg["M"] is not None:
        return PeriodicLattice(spec.d, spec.h, int(cfg["M"]))
    if cfg["L"] is not None:
        return PeriodicLattice.with_half_extent(spec.d, spec.h, float(cfg["L"]))
    return spec.lattice(T)


def run_figure1(cfg, out: Path, threads: int = 1) -> dict:
    d = cfg["d"]
    if d not in (1, 2):
        raise ConfigError("figure1 supports d = 1 or 2")
    _positive(cfg, "h")
    eta0 = _eta0(cfg)
    h = float(cfg["h"])
    gamma = float(cfg["gamma"]) if cfg["gamma"] is not None else parse_rule(cfg["gamma_rule"], "h")(h)
    x_star = _vector(cfg, "x_star", d)
    times = sorted(float(t) for t in cfg["times"])
    T = max(times)
    spec = PacketSpec(x_star, eta0, gamma, h, T=T, profile=_profile(cfg))
    lattice = _figure_lattice(cfg, spec, T)
    states = {m: packet_state(spec, lattice, m, cfg["cutoff"]) for m in ("semidiscrete", "continuous")}
    direction = np.asarray(eta0) / np.linalg.norm(eta0)
    x = lattice.axis()
    summary = {"lattice": {"M": lattice.M, "L": lattice.L, "h": lattice.h}, "gamma": gamma,
               "times": [], "checks": {}}
    ok_disc, ok_cont = True, True
    for idx, t in enumerate(times):
        fields = {m: time_derivative_field(propagate(s, t)) for m, s in states.items()}
        diag = {m: packet_diagnostics(f) for m, f in fields.items()}
        ray = dispersion.ray_position(x_star, eta0, t, sign=-1)
        cont_ray = np.asarray(x_star) - t * direction
        err_disc = float(np.linalg.norm(diag["semidiscrete"].centroid - ray))
        dist_cont = float(np.linalg.norm(diag["continuous"].centroid - np.asarray(x_star)))
        ok_disc &= err_disc <= cfg["tolerance"]
        ok_cont &= abs(dist_cont - t) <= cfg["tolerance"]
        summary["times"].append({
            "t": t,
            "discrete_centroid": diag["semidiscrete"].centroid,
            "continuous_centroid": diag["continuous"].centroid,
            "predicted_ray": ray,
            "predicted_continuous_ray": cont_ray,
            "discrete_error": err_disc,
            "continuous_distance": dist_cont,
        })
        if d == 1:
            sl = {m: f.values for m, f in fields.items()}
        else:
            # slice through the node row closest to the discrete centroid
            j = int(np.argmin(np.abs(x - diag["semidiscrete"].centroid[1])))
            sl = {m: f.values[:, j] for m, f in fields.items()}
        rows = [{
            "x": x[i],
            "re_discrete": sl["semidiscrete"][i].real, "abs_discrete": abs(sl["semidiscrete"][i]),
            "re_continuous": sl["continuous"][i].real, "abs_continuous": abs(sl["continuous"][i]),
        } for i in range(x.size)]
        write_csv(out / f"figure1_t{idx}.csv", list(rows[0].keys()), rows)
    summary["checks"] = {"discrete_centroid_on_ray": ok_disc, "continuous_centroid_distance": ok_cont}
    return summary


def run_theorem1(cfg, out: Path, threads: int = 1) -> dict:
    _positive(cfg, "h_list")
    _positive(cfg, "t_list")
    eta0 = _eta0(cfg)
    rule = parse_rule(cfg["gamma_rule"], "h")
    study = decomposition.scaling_study(cfg["h_list"], rule, cfg["t_list"], eta0,
                                        profile=_profile(cfg), threads=threads)
    rows = sorted(study.rows, key=lambda r: (-r["h"], r["t"]))
    for r in rows:
        r["within_bound"] = r["ratio"] <= r["bound"]
    write_csv(out / "theorem1.csv",
              ["h", "gamma", "t", "ratio", "bound", "within_bound", "cutoff_mass"], rows)
    lo, hi = cfg["slope_range"]
    return {"h_slope": study.h_slope,
            "checks": {"all_within_bound": study.all_within_bound,
                       "h_slope_in_range": lo <= study.h_slope <= hi}}


def run_theorem2(cfg, out: Path, threads: int = 1) -> dict:
    _positive(cfg, "h_list")
    eta0 = _eta0(cfg)
    profile = _profile(cfg)
    study = asymptotics.expansion_convergence(cfg["h_list"], cfg["J_list"], float(cfg["s"]),
                                              eta0, profile)
    write_csv(out / "theorem2_expansion.csv", ["h", "J", "s", "t", "error"], study.rows)
    tol = cfg["slope_tolerance"]
    checks = {f"slope_J{J}": abs(study.slopes[J] - 0.5 * (J + 1)) <= tol for J in cfg["J_list"]}

    h = float(cfg["pde_h"])
    spec = PacketSpec((0.0,) * len(eta0), eta0, h**-0.5, h, T=cfg["pde_t"] + 0.1, profile=profile)
    lattice = spec.lattice()
    res_rows = []
    for dt in cfg["dt_list"]:
        samples = [decomposition.compute_v(spec, lattice, cfg["pde_t"] + k * dt) for k in (-1, 0, 1)]
        r = asymptotics.pde15_residual(samples, spec.split, h, dt)
        res_rows.append({"dt": dt, "residual_factorial": r.factorial, "residual_literal": r.literal})
    write_csv(out / "theorem2_residual.csv", ["dt", "residual_factorial", "residual_literal"], res_rows)
    rich = [math.log2(a["residual_factorial"] / b["residual_factorial"]) /
            math.log2(a["dt"] / b["dt"]) for a, b in zip(res_rows, res_rows[1:])]
    lo, hi = cfg["richardson_range"]
    checks["richardson"] = all(lo <= r <= hi for r in rich)
    return {"slopes": {f"J{J}": v for J, v in study.slopes.items()},
            "richardson_slopes": rich, "checks": checks}


def run_observability(cfg, out: Path, threads: int = 1) -> dict:
    _positive(cfg, "gamma_list")
    eta0 = _eta0(cfg)
    x_star = _vector(cfg, "x_star", cfg["d"])
    res = observability.blowup_sweep(
        cfg["gamma_list"], parse_rule(cfg["h_rule"], "gamma"), eta0, x_star, float(cfg["T"]),
        float(cfg["control_T"]), cfg["cutoff"], _profile(cfg), tuple(cfg["betas"]), threads,
    )
    header = ["gamma", "h", "energy", "discrete_observed", "discrete_quotient",
              "continuous_quotient", "continuous_quotient_at_T", "tail_methods"]
    write_csv(out / "observability.csv", header, res.rows)
    checks = {
        "strictly_increasing": res.strictly_increasing,
        "slopes_increasing": res.slopes_increasing,
        "control_ratio_below_max": res.control_ratio < cfg["control_max_ratio"],
    }
    checks.update({f"exceeds_gamma_{b}": v for b, v in res.exceeds.items()})
    return {"local_slopes": res.local_slopes, "control_ratio": res.control_ratio,
            "checks": checks}


RUNNERS = {
    "dispersion": run_dispersion,
    "figure1": run_figure1,
    "theorem1": run_theorem1,
    "theorem2": run_theorem2,
    "observability": run_observability,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sdwave", description="Semi-discrete wave packet experiments")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="reserved; all experiments are deterministic")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.experiment, args.config)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        summary = RUNNERS[args.experiment](cfg, out, args.threads)
        log.info("%s finished in %.2f s", args.experiment, time.perf_counter() - t0)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SdwaveError, ValueError) as exc:
        # invalid parameter combinations surfacing from the modules
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    summary["config"] = dict(cfg, seed=args.seed)
    summary["passed"] = all(summary["checks"].values())
    write_json(out / f"{args.experiment}.json", summary)
    for name, ok in sorted(summary["checks"].items()):
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return 0 if summary["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())

"""Config-driven experiment runner.

Every subcommand reads one declarative JSON configuration (defaults are
built in), runs a fully seeded experiment, writes a CSV of per-sample values
and a JSON summary, and prints a short report.  Values are nats everywhere;
``--bits`` converts printed numbers only.

Subcommands: info-seq, entropy, cesaro-check, seward, rokhlin-search,
maximal-check, sphere-average, rw-experiment, selftest.

The default output directory is taken from the SMBFREE_OUT environment
variable, falling back to ./smbfree-out.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys as _sys

import jsonschema
import numpy as np

from . import measure, smb
from .config import (DEFAULT_CONFIG, build_partition, build_system, load_config,
                     validate_summary)
from .measure import EnumerationBudgetExceeded, FrontierWidthExceeded
from .selftest import run_selftest
from .words import parse_word, sphere_size

LOG2 = math.log(2)


def _out_dir(cfg: dict) -> str:
    path = cfg.get("output_dir") or os.environ.get("SMBFREE_OUT") or "smbfree-out"
    os.makedirs(path, exist_ok=True)
    return path


def _write_csv(path: str, experiment: str, seed: int, method: str, rows) -> None:
    """rows: iterable of (sample_id, n, value)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["experiment", "seed", "sample_id", "n", "value", "method"])
        for sample_id, n, value in rows:
            writer.writerow([experiment, seed, sample_id, n, repr(float(value)), method])


def _emit(cfg: dict, experiment: str, method: str, estimate, stderr, checks,
          rows, *, horizon: int, samples: int, notes: dict | None = None,
          bits: bool = False) -> dict:
    out = _out_dir(cfg)
    label = cfg.get("label") or experiment
    seed = cfg["seed"]
    csv_path = os.path.join(out, f"{label}.csv")
    json_path = os.path.join(out, f"{label}.json")
    _write_csv(csv_path, experiment, seed, method, rows)
    summary = {
        "experiment": experiment,
        "seed": seed,
        "method": method,
        "horizon": horizon,
        "samples": samples,
        "estimate_nats": None if estimate is None else float(estimate),
        "stderr": None if stderr is None else float(stderr),
        "units": "nats",
        "checks": checks,
        "csv": csv_path,
    }
    if notes:
        summary["notes"] = notes
    validate_summary(summary)
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    unit, scale = ("bits", 1 / LOG2) if bits else ("nats", 1.0)
    if estimate is not None:
        err = f" +- {stderr * scale:.6g}" if stderr is not None else ""
        print(f"{experiment}: estimate {estimate * scale:.6g} {unit}{err} "
              f"(horizon {horizon}, {samples} samples)")
    for c in checks:
        status = "ok" if c["pass"] else "FAIL"
        print(f"  [{status}] {c['name']}: observed {c['observed']:.6g} "
              f"bound {c['bound'] if c['bound'] is not None else '-'}")
    print(f"wrote {csv_path} and {json_path}")
    return summary


def _engine_opts(cfg: dict) -> dict:
    return {"max_width": cfg["frontier_width"], "max_work": cfg["enumeration_budget"]}


def _mixing_note(sys: smb.SkewSystem) -> dict:
    """Ergodicity caveat surfaced in output: a strongly mixing fiber action
    makes every class-injective skew extension ergodic; the Z-factor model is
    not strongly mixing as a free-group action, so its runs are exploratory."""
    return {
        "ergodicity_sufficient_condition":
            "strongly mixing fiber action with class-injective cocycle",
        "exploratory": sys.exploratory,
    }


def run_info_seq(cfg: dict, bits: bool) -> int:
    sys = build_system(cfg)
    n = cfg["horizon"]
    rows = []
    finals = []
    slopes = []
    for i, child in enumerate(np.random.SeedSequence(cfg["seed"]).spawn(cfg["samples"])):
        rng = np.random.Generator(np.random.PCG64(child))
        y = smb.sample_base(sys, n, rng)
        x = sys.model.sample_point(rng)
        seq = smb.info_sequence(sys, y, x, n, max_width=cfg["frontier_width"])
        last, slope = seq.tail_summary()
        finals.append(last)
        slopes.append(slope)
        rows.extend((i, j, v) for j, v in enumerate(seq.values))
    est = float(np.mean(finals))
    se = float(np.std(finals, ddof=1) / math.sqrt(len(finals))) if len(finals) > 1 else 0.0
    notes = {"tail_slope_mean": float(np.mean(slopes))}
    notes.update(_mixing_note(sys))
    _emit(cfg, "info-seq", "pointwise", est, se, [], rows,
          horizon=n, samples=cfg["samples"], notes=notes, bits=bits)
    return 0


def run_entropy(cfg: dict, bits: bool) -> int:
    sys = build_system(cfg)
    est = smb.orbital_entropy_estimate(
        sys, cfg["method"], cfg["horizon"], cfg["samples"], cfg["seed"],
        cond_depth=cfg["cond_depth"], mc_fiber_samples=cfg["mc_fiber_samples"],
        workers=cfg["workers"], **_engine_opts(cfg))
    rows = [(0, cfg["horizon"], est.value)]
    _emit(cfg, "entropy", est.method, est.value, est.stderr, [], rows,
          horizon=est.horizon, samples=est.samples, notes=_mixing_note(sys),
          bits=bits)
    return 0


def run_cesaro(cfg: dict, bits: bool) -> int:
    sys = build_system(cfg, cocycle="geodesic")
    n = cfg["horizon"]
    bound = cfg["cesaro_bound"]
    rows = []
    worst = 0.0
    for i, child in enumerate(np.random.SeedSequence(cfg["seed"]).spawn(cfg["samples"])):
        rng = np.random.Generator(np.random.PCG64(child))
        y = smb.sample_base(sys, n, rng)
        disc = smb.cesaro_identity_check(sys, y, n, **_engine_opts(cfg))
        worst = max(worst, disc)
        rows.append((i, n, disc))
    checks = [{"name": "cesaro_max_discrepancy", "bound": bound,
               "observed": worst, "pass": worst <= bound}]
    _emit(cfg, "cesaro-check", "exact-identity", None, None, checks, rows,
          horizon=n, samples=cfg["samples"], bits=bits)
    return 0 if worst <= bound else 1


def run_seward(cfg: dict, bits: bool) -> int:
    sys = build_system(cfg)
    F = [parse_word(s, cfg["rank"]) for s in cfg["set"]]
    value = smb.seward_bound(sys, F, **_engine_opts(cfg))
    hp = smb.partition_entropy(sys, **_engine_opts(cfg))
    checks = [{"name": "bound_le_partition_entropy", "bound": hp + 1e-12,
               "observed": value, "pass": value <= hp + 1e-12}]
    rows = [(0, len(F), value)]
    _emit(cfg, "seward", "exact", value, 0.0, checks, rows,
          horizon=len(F), samples=1,
          notes={"partition_entropy_nats": hp,
                 "certificate": "upper bound for the Rokhlin entropy "
                                "(free ergodic actions)"},
          bits=bits)
    return 0


def run_rokhlin(cfg: dict, bits: bool) -> int:
    sys = build_system(cfg)
    cand_cfgs = cfg.get("partitions") or [cfg["partition"]]
    candidates = [build_partition(pc, sys.model) for pc in cand_cfgs]
    best, idx = smb.rokhlin_search(
        sys, candidates, cfg["horizon"], cfg["samples"], cfg["seed"],
        method=cfg["method"], cond_depth=cfg["cond_depth"],
        mc_fiber_samples=cfg["mc_fiber_samples"], workers=cfg["workers"],
        **_engine_opts(cfg))
    rows = []
    for i, part in enumerate(candidates):
        sub = smb.SkewSystem(sys.cocycle, sys.model, part, sys.walk)
        est = smb.orbital_entropy_estimate(
            sub, cfg["method"], cfg["horizon"], cfg["samples"],
            smb._candidate_seed(cfg["seed"], part), cond_depth=cfg["cond_depth"],
            mc_fiber_samples=cfg["mc_fiber_samples"], workers=cfg["workers"],
            **_engine_opts(cfg))
        rows.append((i, cfg["horizon"], est.value))
    notes = {"argmin_candidate": idx, "candidates": len(candidates)}
    notes.update(_mixing_note(sys))
    _emit(cfg, "rokhlin-search", cfg["method"], best.value, best.stderr, [],
          rows, horizon=best.horizon, samples=best.samples, notes=notes,
          bits=bits)
    return 0


def run_maximal(cfg: dict, bits: bool) -> int:
    sys = build_system(cfg)
    report = smb.maximal_inequality_check(
        sys, cfg["lambdas"], cfg["samples"], cfg["horizon"], cfg["seed"],
        max_width=cfg["frontier_width"], workers=cfg["workers"])
    checks = []
    rows = []
    for i, r in enumerate(report):
        name = f"cell{r['cell']}_lambda{r['lambda']:g}"
        limit = r["bound"] + 3 * r["sigma"]
        checks.append({"name": name, "bound": limit, "observed": r["fraction"],
                       "pass": not r["violation"]})
        rows.append((i, cfg["horizon"], r["fraction"]))
    ok = all(c["pass"] for c in checks)
    _emit(cfg, "maximal-check", "exceedance", None, None, checks, rows,
          horizon=cfg["horizon"], samples=cfg["samples"], bits=bits)
    return 0 if ok else 1


def run_sphere(cfg: dict, bits: bool) -> int:
    sys = build_system(cfg, cocycle="geodesic")
    n = cfg["horizon"]
    mode = cfg["sphere_mode"]
    rng = np.random.Generator(np.random.PCG64(cfg["seed"]))
    x = sys.model.sample_point(rng)
    rows = []
    checks = []
    value = se = None
    if mode in ("exact", "both"):
        value, se = smb.sphere_average(sys, x, n, mode="exact",
                                       max_width=cfg["frontier_width"])
        rows.append((0, n, value))
    if mode in ("mc", "both"):
        mc_val, mc_se = smb.sphere_average(sys, x, n, mode="mc",
                                           samples=cfg["samples"],
                                           seed=cfg["seed"] + 1,
                                           max_width=cfg["frontier_width"])
        rows.append((1, n, mc_val))
        if mode == "both":
            gap = abs(mc_val - value)
            tol = 3 * max(mc_se, 1e-15)
            checks.append({"name": "exact_vs_mc_3se", "bound": tol,
                           "observed": gap, "pass": gap <= tol})
        else:
            value, se = mc_val, mc_se
    _emit(cfg, "sphere-average", mode, value, se, checks, rows,
          horizon=n, samples=cfg["samples"], bits=bits)
    return 0 if all(c["pass"] for c in checks) else 1


def run_rw(cfg: dict, bits: bool) -> int:
    sys = build_system(cfg, cocycle="random-walk")
    res = smb.rw_experiment(sys, cfg["horizon"], cfg["samples"], cfg["seed"],
                            max_width=cfg["frontier_width"],
                            workers=cfg["workers"])
    rows = []
    for t, traj in enumerate(res["trajectories"]):
        rows.extend((t, n, traj[n]) for n in res["grid"])
    est = res["estimate"]
    notes = _mixing_note(sys)
    _emit(cfg, "rw-experiment", est.method, est.value, est.stderr, [], rows,
          horizon=est.horizon, samples=est.samples, notes=notes, bits=bits)
    return 0


def run_selftest_cmd(cfg: dict, bits: bool) -> int:
    checks = run_selftest(cfg["seed"])
    rows = [(i, 0, c["observed"]) for i, c in enumerate(checks)]
    ok = all(c["pass"] for c in checks)
    _emit(cfg, "selftest", "invariant-suite", None, None, checks, rows,
          horizon=0, samples=len(checks), bits=bits)
    print("selftest:", "all checks passed" if ok else "CHECKS FAILED")
    return 0 if ok else 1


RUNNERS = {
    "info-seq": run_info_seq,
    "entropy": run_entropy,
    "cesaro-check": run_cesaro,
    "seward": run_seward,
    "rokhlin-search": run_rokhlin,
    "maximal-check": run_maximal,
    "sphere-average": run_sphere,
    "rw-experiment": run_rw,
    "selftest": run_selftest_cmd,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smbfree",
        description="Entropy equipartition experiments along geodesics and "
                    "random walks in free groups.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--seed", type=int)
        p.add_argument("--horizon", "--n", type=int, dest="horizon")
        p.add_argument("--samples", type=int)
        p.add_argument("--method", choices=smb.METHODS)
        p.add_argument("--workers", type=int)
        p.add_argument("--frontier-width", type=int, dest="frontier_width")
        p.add_argument("--enumeration-budget", type=int, dest="enumeration_budget")
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--label")
        p.add_argument("--bits", action="store_true",
                       help="print values in bits (files stay in nats)")
    return parser


def _feasibility_hint(cfg: dict, command: str, err: Exception) -> str:
    if command == "sphere-average":
        limit = 200_000
        n = cfg["horizon"]
        while n > 0 and sphere_size(cfg["rank"], n) > limit:
            n -= 1
        return f"{err} (largest feasible exact sphere horizon: {n})"
    return str(err)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k, None)
                 for k in ("seed", "horizon", "samples", "method", "workers",
                           "frontier_width", "enumeration_budget",
                           "output_dir", "label")}
    try:
        cfg = load_config(args.config, overrides)
    except (jsonschema.ValidationError, ValueError, OSError) as err:
        print(f"configuration error: {err}", file=_sys.stderr)
        return 2
    try:
        return RUNNERS[args.command](cfg, args.bits)
    except (EnumerationBudgetExceeded, FrontierWidthExceeded) as err:
        print(f"infeasible horizon: {_feasibility_hint(cfg, args.command, err)}",
              file=_sys.stderr)
        return 2
    except ValueError as err:
        print(f"error: {err}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

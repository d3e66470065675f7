"""Command-line front end: config parsing, experiment orchestration, CSV/JSON emission.

Subcommands
-----------
``replica``
    Solve the scalar-channel fixed point for one operating point and
    write the order parameters and predicted MSE.
``fig2``
    Sweep the tuning factor: predicted curves for each coupling value,
    optional finite-size simulation overlays, optional euclidean-norm
    baseline rows.
``fig3``
    Trace the feasible-region boundary: for each first-terminal
    compression ratio, the smallest second-terminal ratio whose
    predicted MSE meets a target, by bisection.
``simulate``
    Run one finite-size Monte Carlo experiment and write per-trial rows
    plus an aggregate report.
``proxcheck``
    Self-test: compare the closed-form scalar map against the numeric
    minimizer on random draws and print PASS/FAIL.

Conventions
-----------
Output files are byte-stable across reruns with the same inputs: CSV
cells are ``repr`` of Python floats (shortest round-trip form, ``-inf``
as the dB sentinel for zero error), JSON is sorted and indented, and
non-finite numbers are emitted as their ``repr`` strings.  Volatile
facts (wall-clock, timestamps, command line) are confined to
``manifest.json``; every other artifact is a pure function of the
resolved config and seed.  Exit codes: 0 success, 2 config error,
3 numerical non-convergence, 4 internal invariant violation (including
a failing self-test).
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import math
import os
import pathlib
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

from dsn import __version__
from dsn.figures import render_convergence, render_fig2, render_fig3, render_trials
from dsn.priors import PriorParams
from dsn.replica import (
    ESTIMATOR_COUPLED,
    ESTIMATOR_L21,
    FixedPointError,
    NetworkConfig,
    solve_fixed_point,
)
from dsn.scalar_map import OracleConvergenceError, _threshold_kernel, oracle_equivalence_suite
from dsn.sim_harness import ExperimentConfig, run_experiment
from dsn.spectra import EnsembleSpec

PROXCHECK_INJECT_ENV = "DSN_PROXCHECK_INJECT_BUG"
WORKERS_ENV = "DSN_WORKERS"


class ConfigError(Exception):
    """A config file failed to parse or validate; message carries the field path."""


class InternalInvariantError(Exception):
    """An output-level sanity assertion failed; maps to exit code 4."""


DEFAULTS: Dict = {
    "seed": 0,
    "prior": {
        "common_var": 0.5,
        "private_vars": [0.5, 0.5],
        "common_rate": 0.3,
        "private_rates": [0.1, 0.1],
    },
    "rhos": [0.8, 0.8],
    "noise_vars": [0.01, 0.01],
    "lambdas": [0.04, 0.04],
    "psi": 0.8,
    "scheme": "coupled",
    "replica": {
        "damping": 0.5,
        "tol": 1e-6,
        "max_iter": 500,
        "n_samples": 200000,
    },
    "simulate": {
        "n": 100,
        "trials": 200,
        "solver_tol": 1e-8,
        "solver_max_iter": 50000,
    },
    "fig2": {
        "lambda_grid": [0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1, 0.11, 0.12],
        "psi_list": [0.0, 0.3, 0.8],
        "sim_lambdas": [0.02, 0.04, 0.08],
        "sim_psi_list": [0.0, 0.8],
        "l21_lambdas": [0.02, 0.04, 0.08],
    },
    "fig3": {
        "rho1_grid": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
        "rho2_min": 0.1,
        "rho2_max": 1.0,
        "mse0_db": -15.0,
        "lambda": 0.04,
        "psi_list": [0.0, 0.8],
        "resolution": 1e-3,
        "n_samples": 50000,
    },
    "proxcheck": {
        "n_draws": 10000,
        "psi": None,
        "tolerance": 1e-6,
    },
}


# ----------------------------------------------------------------------
# config loading and validation
# ----------------------------------------------------------------------

def _merge(user, default, path: str):
    """Overlay ``user`` onto ``default``; unknown keys are config errors."""
    if isinstance(default, dict):
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: expected an object, got {type(user).__name__}")
        merged = {}
        for key, dval in default.items():
            if key in user:
                merged[key] = _merge(user[key], dval, f"{path}.{key}")
            else:
                merged[key] = json.loads(json.dumps(dval))  # deep copy of the default
        unknown = sorted(set(user) - set(default))
        if unknown:
            raise ConfigError(f"{path}.{unknown[0]}: unknown field")
        return merged
    return user


def _num(cfg, path: str, *, lo=None, hi=None, lo_open=False, hi_open=False,
         integer=False, allow_none=False):
    value = cfg
    if value is None:
        if allow_none:
            return None
        raise ConfigError(f"{path}: must be a number, got null")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: must be a number, got {type(value).__name__}")
    if integer and int(value) != value:
        raise ConfigError(f"{path}: must be an integer, got {value}")
    value = int(value) if integer else float(value)
    if not integer and not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite, got {value}")
    if lo is not None and (value <= lo if lo_open else value < lo):
        op = ">" if lo_open else ">="
        raise ConfigError(f"{path}: must be {op} {lo}, got {value}")
    if hi is not None and (value >= hi if hi_open else value > hi):
        op = "<" if hi_open else "<="
        raise ConfigError(f"{path}: must be {op} {hi}, got {value}")
    return value


def _numlist(cfg, path: str, *, min_len=1, **kw) -> List[float]:
    if not isinstance(cfg, list):
        raise ConfigError(f"{path}: must be a list, got {type(cfg).__name__}")
    if len(cfg) < min_len:
        raise ConfigError(f"{path}: needs at least {min_len} entries, got {len(cfg)}")
    return [_num(v, f"{path}[{i}]", **kw) for i, v in enumerate(cfg)]


def _pair(cfg, path: str, **kw) -> Tuple[float, float]:
    values = _numlist(cfg, path, min_len=2, **kw)
    if len(values) != 2:
        raise ConfigError(f"{path}: must have exactly 2 entries, got {len(values)}")
    return (values[0], values[1])


def validate_config(cfg: Dict) -> Dict:
    """Validate the merged config in place; returns it for chaining."""
    c = cfg
    c["seed"] = _num(c["seed"], "config.seed", lo=0, integer=True)
    p = c["prior"]
    p["common_var"] = _num(p["common_var"], "config.prior.common_var", lo=0.0, lo_open=True)
    p["private_vars"] = list(_pair(p["private_vars"], "config.prior.private_vars", lo=0.0, lo_open=True))
    p["common_rate"] = _num(p["common_rate"], "config.prior.common_rate", lo=0.0, hi=1.0)
    p["private_rates"] = list(_pair(p["private_rates"], "config.prior.private_rates", lo=0.0, hi=1.0))
    c["rhos"] = list(_pair(c["rhos"], "config.rhos", lo=0.0, lo_open=True))
    c["noise_vars"] = list(_pair(c["noise_vars"], "config.noise_vars", lo=0.0))
    c["lambdas"] = list(_pair(c["lambdas"], "config.lambdas", lo=0.0, lo_open=True))
    c["psi"] = _num(c["psi"], "config.psi", lo=0.0)
    if c["scheme"] not in ("coupled", "l21"):
        raise ConfigError(f"config.scheme: must be 'coupled' or 'l21', got {c['scheme']!r}")
    r = c["replica"]
    r["damping"] = _num(r["damping"], "config.replica.damping", lo=0.0, lo_open=True, hi=1.0)
    r["tol"] = _num(r["tol"], "config.replica.tol", lo=0.0, lo_open=True)
    r["max_iter"] = _num(r["max_iter"], "config.replica.max_iter", lo=1, integer=True)
    r["n_samples"] = _num(r["n_samples"], "config.replica.n_samples", lo=1000, integer=True)
    s = c["simulate"]
    s["n"] = _num(s["n"], "config.simulate.n", lo=1, integer=True)
    s["trials"] = _num(s["trials"], "config.simulate.trials", lo=1, integer=True)
    s["solver_tol"] = _num(s["solver_tol"], "config.simulate.solver_tol", lo=0.0, lo_open=True)
    s["solver_max_iter"] = _num(s["solver_max_iter"], "config.simulate.solver_max_iter", lo=1, integer=True)
    f2 = c["fig2"]
    f2["lambda_grid"] = _numlist(f2["lambda_grid"], "config.fig2.lambda_grid", lo=0.0, lo_open=True)
    f2["psi_list"] = _numlist(f2["psi_list"], "config.fig2.psi_list", lo=0.0)
    f2["sim_lambdas"] = _numlist(f2["sim_lambdas"], "config.fig2.sim_lambdas", min_len=0, lo=0.0, lo_open=True)
    f2["sim_psi_list"] = _numlist(f2["sim_psi_list"], "config.fig2.sim_psi_list", min_len=0, lo=0.0)
    f2["l21_lambdas"] = _numlist(f2["l21_lambdas"], "config.fig2.l21_lambdas", min_len=0, lo=0.0, lo_open=True)
    f3 = c["fig3"]
    f3["rho1_grid"] = _numlist(f3["rho1_grid"], "config.fig3.rho1_grid", lo=0.0, lo_open=True)
    f3["rho2_min"] = _num(f3["rho2_min"], "config.fig3.rho2_min", lo=0.0, lo_open=True)
    f3["rho2_max"] = _num(f3["rho2_max"], "config.fig3.rho2_max", lo=0.0, lo_open=True)
    if f3["rho2_min"] >= f3["rho2_max"]:
        raise ConfigError("config.fig3.rho2_min: must be smaller than rho2_max")
    f3["mse0_db"] = _num(f3["mse0_db"], "config.fig3.mse0_db")
    f3["lambda"] = _num(f3["lambda"], "config.fig3.lambda", lo=0.0, lo_open=True)
    f3["psi_list"] = _numlist(f3["psi_list"], "config.fig3.psi_list", lo=0.0)
    f3["resolution"] = _num(f3["resolution"], "config.fig3.resolution", lo=0.0, lo_open=True)
    f3["n_samples"] = _num(f3["n_samples"], "config.fig3.n_samples", lo=1000, integer=True)
    pc = c["proxcheck"]
    pc["n_draws"] = _num(pc["n_draws"], "config.proxcheck.n_draws", lo=1, integer=True)
    pc["psi"] = _num(pc["psi"], "config.proxcheck.psi", lo=0.0, allow_none=True)
    pc["tolerance"] = _num(pc["tolerance"], "config.proxcheck.tolerance", lo=0.0, lo_open=True)
    return c


def load_config(path: Optional[str]) -> Dict:
    """Parse, default, and validate a JSON config file (None = all defaults)."""
    if path is None:
        user = {}
    else:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    return validate_config(_merge(user, DEFAULTS, "config"))


# ----------------------------------------------------------------------
# shared builders and writers
# ----------------------------------------------------------------------

def _prior_from(cfg: Dict) -> PriorParams:
    p = cfg["prior"]
    return PriorParams(
        common_var=p["common_var"],
        private_vars=tuple(p["private_vars"]),
        common_rate=p["common_rate"],
        private_rates=tuple(p["private_rates"]),
    )


def _network_from(cfg: Dict, *, rhos=None, lambdas=None, psi=None, scheme=None) -> NetworkConfig:
    rhos = cfg["rhos"] if rhos is None else rhos
    lambdas = cfg["lambdas"] if lambdas is None else lambdas
    psi = cfg["psi"] if psi is None else psi
    scheme = cfg["scheme"] if scheme is None else scheme
    estimator = ESTIMATOR_COUPLED if scheme == "coupled" else ESTIMATOR_L21
    return NetworkConfig(
        ensembles=(EnsembleSpec.marchenko_pastur(rhos[0]), EnsembleSpec.marchenko_pastur(rhos[1])),
        noise_vars=tuple(cfg["noise_vars"]),
        tunings=(lambdas[0], lambdas[1]),
        prior=_prior_from(cfg),
        psi=psi,
        estimator=estimator,
    )


def _replica_options(cfg: Dict, n_samples: Optional[int] = None) -> Dict:
    r = cfg["replica"]
    return {
        "damping": r["damping"],
        "tol": r["tol"],
        "max_iter": r["max_iter"],
        "n_samples": n_samples if n_samples is not None else r["n_samples"],
    }


def _cell(value) -> str:
    """One CSV cell: repr for floats (round-trip exact), '' for missing."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: pathlib.Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _json_ready(obj):
    """Recursively convert to JSON-safe values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (str, int)):
        return obj
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else repr(obj)
    if hasattr(obj, "item"):  # numpy scalar
        return _json_ready(obj.item())
    if hasattr(obj, "tolist"):  # numpy array
        return _json_ready(obj.tolist())
    return str(obj)


def _write_json(path: pathlib.Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_json_ready(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _db(value: float) -> float:
    return 10.0 * math.log10(value) if value > 0.0 else float("-inf")


def _manifest_core(command: str, cfg: Dict, seed: int, workers: int, outputs: List[str]) -> Dict:
    return {
        "command": command,
        "resolved_config": cfg,
        "seed": seed,
        "workers": workers,
        "version": __version__,
        "outputs": sorted(outputs),
    }


def _write_manifest(out: pathlib.Path, core: Dict, t0: float) -> None:
    manifest = dict(core)
    manifest["outputs"] = sorted(set(core["outputs"]) | {"manifest.json"})
    manifest["wall_clock_seconds"] = time.perf_counter() - t0
    manifest["written_at_utc"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    _write_json(out / "manifest.json", manifest)


def _resolve_workers(ns) -> int:
    if getattr(ns, "workers", None) is not None:
        value = ns.workers
    else:
        raw = os.environ.get(WORKERS_ENV, "").strip()
        if raw:
            try:
                value = int(raw)
            except ValueError as exc:
                raise ConfigError(f"{WORKERS_ENV}: must be an integer, got {raw!r}") from exc
        else:
            value = 1
    if value < 1:
        raise ConfigError(f"workers: must be >= 1, got {value}")
    return value


def _resolve_seed(ns, cfg: Dict) -> int:
    if ns.seed is None:
        return cfg["seed"]
    if ns.seed < 0:
        raise ConfigError(f"--seed: must be a nonnegative integer, got {ns.seed}")
    return ns.seed


def _pool_map(fn, tasks: List, workers: int) -> List:
    """Map preserving task order; a bounded process pool when workers > 1."""
    if workers == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _out_dir(ns) -> pathlib.Path:
    out = pathlib.Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ----------------------------------------------------------------------
# replica
# ----------------------------------------------------------------------

def cmd_replica(ns) -> int:
    cfg = load_config(ns.config)
    seed = _resolve_seed(ns, cfg)
    workers = _resolve_workers(ns)
    t0 = time.perf_counter()
    network = _network_from(cfg)
    state = solve_fixed_point(network, seed=seed, **_replica_options(cfg))

    out = _out_dir(ns)
    outputs = ["replica.csv", "report.json"]
    rows = [
        [
            j + 1,
            float(state.chi[j]),
            float(state.p[j]),
            float(state.tau[j]),
            float(state.theta2[j]),
            state.mse(),
            state.mse_db(),
            state.iterations,
            state.residual,
        ]
        for j in (0, 1)
    ]
    _write_csv(
        out / "replica.csv",
        ["terminal", "chi", "p", "tau", "theta2", "mse", "mse_db", "iterations", "residual"],
        rows,
    )
    report = {
        "chi": list(state.chi),
        "p": list(state.p),
        "tau": list(state.tau),
        "theta2": list(state.theta2),
        "mse": state.mse(),
        "mse_db": state.mse_db(),
        "iterations": state.iterations,
        "residual": state.residual,
    }
    if not ns.no_figures:
        outputs.append("convergence.png")
        render_convergence(list(state.residual_trace), str(out / "convergence.png"))
    report["manifest"] = _manifest_core("replica", cfg, seed, workers, outputs)
    _write_json(out / "report.json", report)
    _write_manifest(out, report["manifest"], t0)
    print(f"replica: mse_db={_cell(state.mse_db())} iterations={state.iterations} -> {out}")
    return 0


# ----------------------------------------------------------------------
# fig2 (tuning sweep)
# ----------------------------------------------------------------------

def _solve_point(task) -> Tuple[float, float, int]:
    network, options, seed = task
    state = solve_fixed_point(network, seed=seed, **options)
    return state.mse(), state.mse_db(), state.iterations


def _run_sim(cfg: Dict, *, lam: float, psi: float, scheme: str, seed: int, workers: int):
    s = cfg["simulate"]
    experiment = ExperimentConfig(
        n=s["n"],
        rhos=tuple(cfg["rhos"]),
        prior=_prior_from(cfg),
        noise_vars=tuple(cfg["noise_vars"]),
        lambdas=(lam, lam),
        psi=psi,
        scheme=scheme,
        trials=s["trials"],
        base_seed=seed,
        solver_tol=s["solver_tol"],
        solver_max_iter=s["solver_max_iter"],
    )
    return run_experiment(experiment, workers=workers)


def cmd_fig2(ns) -> int:
    cfg = load_config(ns.config)
    seed = _resolve_seed(ns, cfg)
    workers = _resolve_workers(ns)
    t0 = time.perf_counter()
    f2 = cfg["fig2"]
    options = _replica_options(cfg)

    grid = [(psi, lam) for psi in f2["psi_list"] for lam in f2["lambda_grid"]]
    tasks = [
        (_network_from(cfg, lambdas=(lam, lam), psi=psi, scheme="coupled"), options, seed)
        for psi, lam in grid
    ]
    solved = _pool_map(_solve_point, tasks, workers)

    rows: List[Dict] = []
    for (psi, lam), (mse, mse_db, _) in zip(grid, solved):
        rows.append(
            {
                "series": "coupled",
                "kind": "replica",
                "psi": psi,
                "lam": lam,
                "mse": mse,
                "mse_db": mse_db,
                "stderr": None,
                "trials": None,
                "n_samples": options["n_samples"],
            }
        )
    warnings: List[str] = []
    for psi in f2["sim_psi_list"]:
        for lam in f2["sim_lambdas"]:
            report = _run_sim(cfg, lam=lam, psi=psi, scheme="coupled", seed=seed, workers=workers)
            if report.warning:
                warnings.append(f"coupled psi={psi} lambda={lam}: {report.warning}")
            rows.append(
                {
                    "series": "coupled",
                    "kind": "simulated",
                    "psi": psi,
                    "lam": lam,
                    "mse": report.mean,
                    "mse_db": report.mean_db,
                    "stderr": report.stderr,
                    "trials": cfg["simulate"]["trials"],
                    "n_samples": None,
                }
            )
    for lam in f2["l21_lambdas"]:
        report = _run_sim(cfg, lam=lam, psi=0.0, scheme="l21", seed=seed, workers=workers)
        if report.warning:
            warnings.append(f"l21 lambda={lam}: {report.warning}")
        rows.append(
            {
                "series": "l21",
                "kind": "simulated",
                "psi": None,
                "lam": lam,
                "mse": report.mean,
                "mse_db": report.mean_db,
                "stderr": report.stderr,
                "trials": cfg["simulate"]["trials"],
                "n_samples": None,
            }
        )

    out = _out_dir(ns)
    outputs = ["fig2.csv", "report.json"]
    header = ["series", "kind", "psi", "lam", "mse", "mse_db", "stderr", "trials", "n_samples"]
    _write_csv(out / "fig2.csv", header, [[r[k] for k in header] for r in rows])

    minima: List[Dict] = []
    for series, kind in sorted(set((r["series"], r["kind"]) for r in rows)):
        for psi in sorted(set(r["psi"] for r in rows if (r["series"], r["kind"]) == (series, kind)),
                          key=lambda v: (v is None, v)):
            pts = [r for r in rows if (r["series"], r["kind"], r["psi"]) == (series, kind, psi)]
            best = min(pts, key=lambda r: r["mse_db"])
            minima.append(
                {
                    "series": series,
                    "kind": kind,
                    "psi": psi,
                    "lam": best["lam"],
                    "mse_db": best["mse_db"],
                }
            )
    report_obj = {"minima": minima, "warnings": warnings}
    if not ns.no_figures:
        outputs.append("fig2.png")
        render_fig2(rows, str(out / "fig2.png"))
    report_obj["manifest"] = _manifest_core("fig2", cfg, seed, workers, outputs)
    _write_json(out / "report.json", report_obj)
    _write_manifest(out, report_obj["manifest"], t0)
    print(f"fig2: {len(rows)} rows -> {out}")
    return 0


# ----------------------------------------------------------------------
# fig3 (feasible-region boundary)
# ----------------------------------------------------------------------

def _boundary_point(task: Dict) -> Dict:
    """Smallest rho2 in [rho2_min, rho2_max] with predicted MSE <= target (dB)."""
    cfg = task["cfg"]
    psi, rho1 = task["psi"], task["rho1"]
    f3 = cfg["fig3"]
    options = _replica_options(cfg, n_samples=f3["n_samples"])
    lam = f3["lambda"]
    evaluations = 0

    def mse_at(rho2: float) -> float:
        nonlocal evaluations
        evaluations += 1
        network = _network_from(
            cfg, rhos=(rho1, rho2), lambdas=(lam, lam), psi=psi, scheme="coupled"
        )
        return solve_fixed_point(network, seed=task["seed"], **options).mse_db()

    lo, hi = f3["rho2_min"], f3["rho2_max"]
    target = f3["mse0_db"]
    mse_hi = mse_at(hi)
    if mse_hi > target:
        return {
            "psi": psi,
            "rho1": rho1,
            "rho2": None,
            "mse_db": mse_hi,
            "evaluations": evaluations,
            "status": "unreachable",
        }
    mse_lo = mse_at(lo)
    if mse_lo <= target:
        return {
            "psi": psi,
            "rho1": rho1,
            "rho2": lo,
            "mse_db": mse_lo,
            "evaluations": evaluations,
            "status": "ok",
        }
    value_hi = mse_hi
    while hi - lo > f3["resolution"]:
        mid = 0.5 * (lo + hi)
        mse_mid = mse_at(mid)
        if mse_mid <= target:
            hi, value_hi = mid, mse_mid
        else:
            lo = mid
    return {
        "psi": psi,
        "rho1": rho1,
        "rho2": hi,
        "mse_db": value_hi,
        "evaluations": evaluations,
        "status": "ok",
    }


def cmd_fig3(ns) -> int:
    cfg = load_config(ns.config)
    seed = _resolve_seed(ns, cfg)
    workers = _resolve_workers(ns)
    t0 = time.perf_counter()
    f3 = cfg["fig3"]

    tasks = [
        {"cfg": cfg, "psi": psi, "rho1": rho1, "seed": seed}
        for psi in f3["psi_list"]
        for rho1 in f3["rho1_grid"]
    ]
    rows = _pool_map(_boundary_point, tasks, workers)

    # Sanity: more first-terminal measurements never demand more from the
    # second terminal.  Slack of one bisection step absorbs grid rounding.
    for psi in f3["psi_list"]:
        block = [r for r in rows if r["psi"] == psi]
        block.sort(key=lambda r: r["rho1"])
        boundary = [math.inf if r["status"] == "unreachable" else r["rho2"] for r in block]
        for i in range(len(boundary) - 1):
            if boundary[i + 1] > boundary[i] + f3["resolution"]:
                raise InternalInvariantError(
                    f"boundary not non-increasing at psi={psi}: "
                    f"rho1={block[i]['rho1']} -> {boundary[i]}, "
                    f"rho1={block[i + 1]['rho1']} -> {boundary[i + 1]}"
                )

    out = _out_dir(ns)
    outputs = ["fig3.csv", "report.json"]
    header = ["psi", "rho1", "rho2", "mse_db", "evaluations", "status"]
    _write_csv(out / "fig3.csv", header, [[r[k] for k in header] for r in rows])
    report_obj = {
        "target_mse_db": f3["mse0_db"],
        "lambda": f3["lambda"],
        "unreachable_points": sum(1 for r in rows if r["status"] == "unreachable"),
    }
    if not ns.no_figures:
        outputs.append("fig3.png")
        render_fig3(rows, str(out / "fig3.png"))
    report_obj["manifest"] = _manifest_core("fig3", cfg, seed, workers, outputs)
    _write_json(out / "report.json", report_obj)
    _write_manifest(out, report_obj["manifest"], t0)
    print(f"fig3: {len(rows)} boundary points -> {out}")
    return 0


# ----------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------

class SimulationFailure(RuntimeError):
    """Every trial failed to converge; no aggregate exists."""


def cmd_simulate(ns) -> int:
    cfg = load_config(ns.config)
    seed = _resolve_seed(ns, cfg)
    workers = _resolve_workers(ns)
    t0 = time.perf_counter()
    s = cfg["simulate"]
    experiment = ExperimentConfig(
        n=s["n"],
        rhos=tuple(cfg["rhos"]),
        prior=_prior_from(cfg),
        noise_vars=tuple(cfg["noise_vars"]),
        lambdas=tuple(cfg["lambdas"]),
        psi=cfg["psi"],
        scheme=cfg["scheme"],
        trials=s["trials"],
        base_seed=seed,
        solver_tol=s["solver_tol"],
        solver_max_iter=s["solver_max_iter"],
    )
    report = run_experiment(experiment, workers=workers)
    if report.flagged_trials == len(report.results):
        raise SimulationFailure(
            f"all {report.flagged_trials} trials failed to converge within "
            f"{cfg['simulate']['solver_max_iter']} iterations"
        )

    out = _out_dir(ns)
    outputs = ["trials.csv", "report.json"]
    rows = []
    for i, (trial_seed, result) in enumerate(zip(report.trial_seeds, report.results)):
        rows.append(
            [
                i,
                trial_seed,
                result.distortion,
                _db(result.distortion),
                result.converged,
                result.iterations,
            ]
        )
    _write_csv(
        out / "trials.csv",
        ["trial", "seed", "distortion", "distortion_db", "converged", "iterations"],
        rows,
    )
    report_obj = {
        "trials": len(report.results),
        "completed_trials": len(report.results) - report.flagged_trials,
        "flagged_trials": report.flagged_trials,
        "mean": report.mean,
        "mean_db": report.mean_db,
        "stderr": report.stderr,
        "warning": report.warning,
    }
    if not ns.no_figures:
        outputs.append("trials.png")
        render_trials(
            [_db(r.distortion) for r in report.results if r.converged],
            report.mean_db,
            str(out / "trials.png"),
        )
    report_obj["manifest"] = _manifest_core("simulate", cfg, seed, workers, outputs)
    _write_json(out / "report.json", report_obj)
    _write_manifest(out, report_obj["manifest"], t0)
    print(
        f"simulate: mean_db={_cell(report.mean_db)} stderr={_cell(report.stderr)} "
        f"flagged={report.flagged_trials}/{len(report.results)} -> {out}"
    )
    return 0


# ----------------------------------------------------------------------
# proxcheck
# ----------------------------------------------------------------------

def _corrupted_closed_form(y, tau1, tau2, psi):
    """Deliberately wrong map for the self-test's negative path: perturbs
    the region where both coordinates survive thresholding."""
    estimates, _ = _threshold_kernel(y, tau1, tau2, psi)
    bad = estimates.copy()
    nonzero = (bad[..., 0] != 0.0) & (bad[..., 1] != 0.0)
    bad[..., 0] = bad[..., 0] + 1e-3 * nonzero
    return bad


def cmd_proxcheck(ns) -> int:
    cfg = load_config(ns.config)
    seed = _resolve_seed(ns, cfg)
    pc = cfg["proxcheck"]
    n_draws = ns.draws if ns.draws is not None else pc["n_draws"]
    if n_draws < 1:
        raise ConfigError(f"--draws: must be a positive integer, got {n_draws}")
    psi = ns.psi if ns.psi is not None else pc["psi"]
    if psi is not None and not (math.isfinite(psi) and psi >= 0.0):
        raise ConfigError(f"--psi: must be a nonnegative number, got {psi}")
    inject = bool(os.environ.get(PROXCHECK_INJECT_ENV, "").strip())
    result = oracle_equivalence_suite(
        n_draws=n_draws,
        seed=seed,
        psi=psi,
        tolerance=pc["tolerance"],
        closed_form_fn=_corrupted_closed_form if inject else None,
    )
    if result.routed_to_oracle:
        print(f"note: psi={psi:g} lies outside the closed-form geometry; routed to the numeric oracle")
    if inject:
        print(f"note: {PROXCHECK_INJECT_ENV} is set; closed form deliberately corrupted")
    if result.passed:
        print(
            f"PASS: max deviation {result.max_abs_deviation:.3e} <= {result.tolerance:g} "
            f"over {result.n_draws} draws ({result.elapsed_seconds:.2f}s)"
        )
    else:
        worst = result.worst
        print(
            f"FAIL: max deviation {result.max_abs_deviation:.3e} > {result.tolerance:g} "
            f"over {result.n_draws} draws"
        )
        print(
            f"  worst offending y=({worst['y'][0]!r}, {worst['y'][1]!r}) "
            f"tau=({worst['tau1']!r}, {worst['tau2']!r}) psi={worst['psi']!r}"
        )
        print(f"  closed form {worst['closed_form']} vs oracle {worst['oracle']}")
    if ns.out is not None:
        t0 = time.perf_counter()
        out = _out_dir(ns)
        report_obj = {
            "passed": result.passed,
            "n_draws": result.n_draws,
            "tolerance": result.tolerance,
            "max_abs_deviation": result.max_abs_deviation,
            "routed_to_oracle": result.routed_to_oracle,
            "bug_injected": inject,
            "worst": result.worst,
        }
        report_obj["manifest"] = _manifest_core(
            "proxcheck", cfg, seed, _resolve_workers(ns), ["report.json"]
        )
        _write_json(out / "report.json", report_obj)
        _write_manifest(out, report_obj["manifest"], t0)
    return 0 if result.passed else 4


# ----------------------------------------------------------------------
# argument parsing and dispatch
# ----------------------------------------------------------------------

def _add_common(sub, *, config_required=True, out_required=True):
    sub.add_argument("--config", required=config_required, default=None,
                     help="JSON config file (defaults fill every omitted field)")
    sub.add_argument("--out", required=out_required, default=None,
                     help="output directory (created if missing)")
    sub.add_argument("--seed", type=int, default=None,
                     help="override the config's base seed")
    sub.add_argument("--workers", type=int, default=None,
                     help=f"worker processes (default 1; env {WORKERS_ENV})")
    sub.add_argument("--no-figures", action="store_true",
                     help="skip rendering PNG figures")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsn",
        description="Distributed sensing of jointly sparse sources: "
                    "asymptotic MSE prediction and finite-size validation.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("replica", help="solve the scalar-channel fixed point")
    _add_common(sub)
    sub.set_defaults(func=cmd_replica)

    sub = subs.add_parser("fig2", help="tuning-factor sweep (predictions + simulations)")
    _add_common(sub)
    sub.set_defaults(func=cmd_fig2)

    sub = subs.add_parser("fig3", help="feasible-region boundary over compression ratios")
    _add_common(sub)
    sub.set_defaults(func=cmd_fig3)

    sub = subs.add_parser("simulate", help="finite-size Monte Carlo experiment")
    _add_common(sub)
    sub.set_defaults(func=cmd_simulate)

    sub = subs.add_parser("proxcheck", help="closed form vs numeric oracle self-test")
    _add_common(sub, config_required=False, out_required=False)
    sub.add_argument("--draws", type=int, default=None, help="number of random draws")
    sub.add_argument("--psi", type=float, default=None, help="pin the coupling value")
    sub.set_defaults(func=cmd_proxcheck)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FixedPointError, OracleConvergenceError, SimulationFailure) as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 3
    except (InternalInvariantError, AssertionError) as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

"""Command-line experiment runner.

    rgdyn <experiment> --config <path> [--check] [--jobs K]

Configs are flat ``key = value`` files; ``#`` starts a comment. Lists are comma
separated. A ``preset`` key loads a figure preset whose values the file may
override. Output goes to ``$RGDYN_OUT`` (default ``./out``) joined with ``output``.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

import mpmath
import numpy as np
import scipy

from . import __version__
from .asymptotics import FAMILIES, THETA_CONVENTIONS, GammaSpec, build_asymptotic_state, enumerate_partitions
from .checks import SUITE, CheckResult, check_suite
from .evolution import (
    EvolveConfig,
    TrotterSchedule,
    evolve_ode,
    evolve_trotter,
    fidelity,
    phase_aligned_distance,
    weight_distance,
)
from .model import EmptySectorError, ModelParams, ground_state, site_expectations
from .roots import ContinuationError, continue_roots
from .steady import diagonal_ensemble, fig11_fields, fit_ensemble, integrability_probe, steady_distribution
from .thermo import ThermoParams, cumulants_sz, expect_sz, expect_sz2
from .twosite import fig1_deltas, lz_probability

EXPERIMENTS = ("evolve", "overlap", "asymptote", "roots", "thermo", "steady", "trotter", "lz", "sweep")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# schema


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(",") if x.strip()]


def _ints(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x.strip()]


def _half(s: str) -> Fraction:
    v = Fraction(s.strip())
    if (2 * v).denominator != 1:
        raise ValueError("must be a multiple of 1/2")
    return v


def _jz_list(s: str):
    s = s.strip()
    if s == "all":
        return "all"
    return [_half(x) for x in s.split(",") if x.strip()]


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _choice(*opts):
    def parse(s: str) -> str:
        s = s.strip()
        if s not in opts:
            raise ValueError(f"expected one of {', '.join(opts)}")
        return s

    return parse


def _fields(s: str):
    s = s.strip()
    if s in ("i/N", "fig11-0", "fig11-1"):
        return s
    return _floats(s)


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any
    doc: str


SCHEMA: dict[str, Key] = {
    "preset": Key(str.strip, None, "figure preset name"),
    "figure": Key(str.strip, "", "figure reproduced, written to the output header"),
    "N": Key(_ints, [4], "number of sites (list allowed for overlap/thermo)"),
    "twoS": Key(int, 2, "twice the spin"),
    "Jz": Key(_jz_list, [Fraction(0)], "total magnetization(s) or 'all'"),
    "nu": Key(float, None, "ramp parameter; default nu = N / eta"),
    "eta": Key(float, 1.0, "used when nu is not given"),
    "epsilon": Key(_fields, "i/N", "'i/N', 'fig11-0', 'fig11-1' or a list"),
    "alpha": Key(_floats, [1.0], "coupling exponent(s)"),
    "tInit": Key(float, 1e-5, "initial time"),
    "tFinal": Key(float, 1e3, "final time"),
    "nSamples": Key(int, 31, "log-spaced sample times"),
    "rtol": Key(float, 1e-10, "ODE relative tolerance"),
    "atol": Key(float, 1e-12, "ODE absolute tolerance"),
    "frame": Key(_choice("auto", "direct", "logTime"), "auto", "ODE time variable"),
    "gamma": Key(_choice(*FAMILIES), "corrected", "gamma family"),
    "theta": Key(_choice(*THETA_CONVENTIONS), "general", "theta convention"),
    "tMin": Key(float, 1e-3, "smallest root-continuation time"),
    "tMax": Key(float, 1e4, "largest root-continuation time"),
    "nSteps": Key(_ints, [1000], "Trotter step counts"),
    "variant": Key(_choice("coupling-ramp", "zeeman-ramp"), "coupling-ramp", "Trotter schedule"),
    "deltas": Key(_floats, None, "LZ field differences; default log grid over 1e-12..10"),
    "tauIn": Key(float, 1e-5, "LZ initial scaled time"),
    "tauFn": Key(float, 1.0, "LZ final scaled time"),
    "mode": Key(_choice("ensemble", "probe"), "ensemble", "steady-state mode"),
    "charges": Key(_choice("linear", "quadratic", "quartic"), "quadratic", "fit charge set"),
    "compareAsymptotic": Key(_bool, False, "thermo: add finite-N asymptotic-state column"),
    "checks": Key(lambda s: [x.strip() for x in s.split(",") if x.strip()], [], "check presets run with --check"),
    "minOverlap": Key(float, 0.995, "overlap threshold used by --check"),
    "base": Key(_choice(*[e for e in EXPERIMENTS if e != "sweep"]), "overlap", "sweep: experiment to run"),
    "sweepKey": Key(str.strip, "nu", "sweep: key varied"),
    "sweepValues": Key(lambda s: [x.strip() for x in s.split(",") if x.strip()], [], "sweep: values"),
    "output": Key(str.strip, None, "output file, relative to the output root"),
}

PRESETS: dict[str, dict[str, str]] = {
    "fig1": {"figure": "Fig. 1", "alpha": "0.75,1,1.25", "nu": "3.0", "tauIn": "1e-5", "tauFn": "1"},
    "fig3": {"figure": "Fig. 3", "N": "2", "twoS": "2", "Jz": "0", "nu": "0.2", "epsilon": "1,2",
             "tMin": "1e-3", "tMax": "1e4"},
    "fig5": {"figure": "Fig. 5", "N": "2,6", "twoS": "2", "Jz": "all", "eta": "1", "tInit": "1e-5", "tFinal": "1e3"},
    "fig7": {"figure": "Fig. 7", "N": "4,6,8,10,12", "twoS": "2", "Jz": "0", "eta": "1",
             "compareAsymptotic": "true"},
    "fig8": {"figure": "Fig. 8", "N": "10", "twoS": "2", "Jz": "0", "nu": "70", "tFinal": "1e3"},
    "fig10": {"figure": "Fig. 10", "N": "5", "twoS": "2", "Jz": "0", "eta": "1", "tInit": "1e-3",
              "tFinal": "10", "nSteps": "250,500,1000,2000,4000,8000"},
    "fig11": {"figure": "Fig. 11", "N": "6", "twoS": "2", "Jz": "0", "eta": "1", "mode": "probe",
              "alpha": "1,0.9", "tFinal": "1e4"},
}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, Any]:
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (x.strip() for x in body.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = (value, lineno)
    merged: dict[str, tuple[str, str]] = {}
    if "preset" in raw:
        name = raw["preset"][0]
        if name not in PRESETS:
            raise ConfigError(f"{source}:{raw['preset'][1]}: unknown preset {name!r}")
        merged.update({k: (v, f"preset {name}") for k, v in PRESETS[name].items()})
    merged.update({k: (v, f"{source}:{ln}") for k, (v, ln) in raw.items()})
    cfg = {k: spec.default for k, spec in SCHEMA.items()}
    for key, (value, where) in merged.items():
        try:
            cfg[key] = SCHEMA[key].parse(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{where}: field {key!r}: {exc}") from None
    return cfg


def load_config(path: str) -> tuple[dict[str, Any], str]:
    with open(path) as fh:
        text = fh.read()
    return parse_config_text(text, path), text


# ---------------------------------------------------------------------------
# helpers


def _nu(cfg, N: int) -> float:
    return cfg["nu"] if cfg["nu"] is not None else N / cfg["eta"]


def _eps(cfg, N: int):
    e = cfg["epsilon"]
    if e == "i/N":
        return None
    if e == "fig11-0":
        return fig11_fields(N)[0]
    if e == "fig11-1":
        return fig11_fields(N)[1]
    return tuple(e)


def _jzs(cfg, N: int):
    if cfg["Jz"] == "all":
        top = Fraction(N * cfg["twoS"], 2)
        return [-top + k for k in range(N * cfg["twoS"] + 1)]
    return cfg["Jz"]


def _params(cfg, N: int, jz, alpha: float | None = None) -> ModelParams:
    return ModelParams(N, cfg["twoS"], jz, _nu(cfg, N), epsilon=_eps(cfg, N),
                       alpha=cfg["alpha"][0] if alpha is None else alpha, t_init=cfg["tInit"])


def _spec(cfg) -> GammaSpec:
    return GammaSpec(cfg["gamma"], cfg["twoS"])


def _times(cfg) -> np.ndarray:
    return np.logspace(math.log10(cfg["tInit"]), math.log10(cfg["tFinal"]), cfg["nSamples"])


def _evolve_cfg(cfg) -> EvolveConfig:
    return EvolveConfig(cfg["tInit"], cfg["tFinal"], rtol=cfg["rtol"], atol=cfg["atol"], frame=cfg["frame"])


def _g(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        return str(float(x)) if x.denominator != 1 else str(x.numerator)
    if isinstance(x, str):
        return x
    return "%.17g" % x


@dataclass
class Table:
    columns: list[str]
    rows: list[list[Any]]


def _provenance(cfg_text: str, experiment: str, figure: str) -> list[str]:
    h = hashlib.sha256(cfg_text.encode()).hexdigest()
    lines = [
        f"rgdyn {__version__} experiment={experiment}",
        f"config-sha256={h}",
        f"numpy={np.__version__} scipy={scipy.__version__} mpmath={mpmath.__version__}",
    ]
    if figure:
        lines.append(f"reproduces {figure}")
    return lines


def atomic_write(path: str, data: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_csv(header: list[str], table: Table) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    buf.write(",".join(table.columns) + "\n")
    for row in table.rows:
        buf.write(",".join(_g(x) for x in row) + "\n")
    return buf.getvalue()


def output_path(cfg, experiment: str, suffix: str = ".csv") -> str:
    root = os.environ.get("RGDYN_OUT", "out")
    name = cfg["output"] or f"{experiment}{suffix}"
    return os.path.join(root, name)


# ---------------------------------------------------------------------------
# experiments; each returns (table, extra json or None, checks)


def run_evolve(cfg):
    N = cfg["N"][0]
    rows = []
    for jz in _jzs(cfg, N):
        p = _params(cfg, N, jz)
        ts = _times(cfg)
        for t, st in zip(ts, evolve_ode(p, ground_state(p), _evolve_cfg(cfg), t_eval=ts)):
            for i, a in enumerate(st.amplitudes):
                rows.append([jz, t, i, a.real, a.imag])
    return Table(["Jz", "t", "index", "re", "im"], rows), None, []


def run_overlap(cfg):
    rows = []
    finals = []
    for N in cfg["N"]:
        for jz in _jzs(cfg, N):
            p = _params(cfg, N, jz)
            ts = _times(cfg)
            states = evolve_ode(p, ground_state(p), _evolve_cfg(cfg), t_eval=ts)
            for t, st in zip(ts, states):
                asym = build_asymptotic_state(p, _spec(cfg), t, cfg["theta"]).state
                rows.append([N, jz, t, fidelity(st, asym), weight_distance(st, asym)])
            finals.append(rows[-1][3])
    checks = [CheckResult("final overlap", min(finals) >= cfg["minOverlap"], f">= {cfg['minOverlap']:g}",
                          {"min_final_overlap": min(finals)})]
    return Table(["N", "Jz", "t", "overlap", "weightSimilarity"], rows), None, checks


def run_asymptote(cfg):
    N = cfg["N"][0]
    p = _params(cfg, N, _jzs(cfg, N)[0])
    a = build_asymptotic_state(p, _spec(cfg), cfg["tFinal"], cfg["theta"])
    rows = []
    for i, rec in enumerate(a.records()):
        rows.append([i, ";".join("|".join(map(str, s)) for s in rec["partition"]),
                     ";".join(map(str, rec["counts"])), rec["gamma"][0], rec["gamma"][1], rec["Lambda"],
                     rec["amplitude"][0], rec["amplitude"][1]])
    return Table(["index", "partition", "counts", "gammaRe", "gammaIm", "Lambda", "re", "im"], rows), \
        list(a.records()), []


def run_roots(cfg):
    N = cfg["N"][0]
    p = _params(cfg, N, _jzs(cfg, N)[0])
    grid = np.logspace(math.log10(cfg["tMin"]), math.log10(cfg["tMax"]), cfg["nSamples"])
    rows = []
    offset = 0
    failures = {}
    for part in enumerate_partitions(N, p.two_s, p.n_plus):
        try:
            tr = continue_roots(p, part, grid)
        except ContinuationError as exc:
            failures[str(part.sets)] = exc.last_good_t
            tr = exc.partial
            if tr is None:
                continue
        for t, row in zip(tr.times, tr.roots):
            for k, (lam, c) in enumerate(zip(row, tr.classification), start=offset + 1):
                rows.append([t, k, lam.real, lam.imag, c.label])
        offset += len(tr.classification)
    checks = [CheckResult("root continuation", not failures, "all partitions tracked", {"failures": failures})]
    return Table(["t", "p", "re", "im", "class"], rows), None, checks


def run_thermo(cfg):
    rows = []
    for N in cfg["N"]:
        for jz in _jzs(cfg, N):
            th = ThermoParams(N, cfg["twoS"], int(N * cfg["twoS"] / 2 + jz), _nu(cfg, N))
            j = np.arange(1, N + 1)
            mean, var, skew, kurt = cumulants_sz(th, j)
            sz2 = expect_sz2(th, j)
            asym = np.full(N, np.nan)
            if cfg["compareAsymptotic"]:
                p = _params(cfg, N, jz)
                asym = site_expectations(build_asymptotic_state(p, _spec(cfg), cfg["tFinal"]).state)
            for k in range(N):
                rows.append([N, jz, k + 1, mean[k], sz2[k], var[k], skew[k], kurt[k], asym[k]])
    return Table(["N", "Jz", "j", "mean", "sz2", "variance", "skewness", "kurtosis", "szAsymptotic"], rows), None, []


def run_steady(cfg):
    N = cfg["N"][0]
    jz = _jzs(cfg, N)[0]
    if cfg["mode"] == "probe":
        e0, e1 = fig11_fields(N)
        variants = [ModelParams(N, cfg["twoS"], jz, _nu(cfg, N), epsilon=e, t_init=cfg["tInit"]) for e in (e0, e1)]
        rep = integrability_probe(variants, cfg["alpha"], cfg["tFinal"], rtol=cfg["rtol"])
        rows = []
        for a in cfg["alpha"]:
            for i in range(N):
                rows.append([a, i + 1, rep.magnetizations[(a, 0)][i], rep.magnetizations[(a, 1)][i]])
        summary = {"max_disagreement": {str(a): v for a, v in rep.max_disagreement.items()}}
        return Table(["alpha", "site", "szSet0", "szSet1"], rows), summary, []
    p = _params(cfg, N, jz)
    psi = evolve_ode(p, ground_state(p), _evolve_cfg(cfg))
    num = diagonal_ensemble(psi)
    ana = steady_distribution(p)
    fit = fit_ensemble(num, cfg["charges"])
    rows = [[i, a, b, c] for i, (a, b, c) in enumerate(zip(num.weights, ana.weights, fit.distribution.weights))]
    summary = {"kl_fit": fit.kl, "charges": cfg["charges"], "tv_numeric_analytic": num.total_variation(ana),
               "tv_numeric_fit": num.total_variation(fit.distribution)}
    if cfg["charges"] != "linear":
        summary["kl_linear"] = fit_ensemble(num, "linear").kl
    return Table(["configIndex", "weight_numeric", "weight_analytic", "weight_fit"], rows), summary, []


def run_trotter(cfg):
    N = cfg["N"][0]
    p = _params(cfg, N, _jzs(cfg, N)[0])
    psi0 = ground_state(p)
    ref = evolve_ode(p, psi0, _evolve_cfg(cfg))
    asym = build_asymptotic_state(p, _spec(cfg), cfg["tFinal"]).state
    rows = []
    for n in cfg["nSteps"]:
        psi = evolve_trotter(p, psi0, TrotterSchedule(n, cfg["tInit"], cfg["tFinal"], cfg["variant"]))
        rows.append([n, fidelity(psi, asym), weight_distance(psi, asym), phase_aligned_distance(psi, ref)])
    return Table(["nSteps", "overlapAsymptotic", "weightSimilarity", "distanceODE"], rows), None, []


def run_lz(cfg):
    deltas = np.asarray(cfg["deltas"]) if cfg["deltas"] is not None else fig1_deltas()
    nu = cfg["nu"] if cfg["nu"] is not None else 3.0
    rows = []
    for a in cfg["alpha"]:
        for d in deltas:
            rows.append([d, a, cfg["tauFn"], lz_probability(float(d), nu, a, cfg["tauIn"], cfg["tauFn"])])
    return Table(["Delta", "alpha", "tauFn", "P"], rows), None, []


RUNNERS = {
    "evolve": run_evolve,
    "overlap": run_overlap,
    "asymptote": run_asymptote,
    "roots": run_roots,
    "thermo": run_thermo,
    "steady": run_steady,
    "trotter": run_trotter,
    "lz": run_lz,
}


def validate(cfg, experiment: str) -> None:
    """Checks that need several fields together; raises ConfigError."""
    for name in cfg["checks"]:
        if name != "all" and name not in SUITE:
            raise ConfigError(f"field 'checks': unknown check {name!r}")
    if experiment == "lz":
        return
    if experiment == "roots" and cfg["twoS"] != 2:
        raise ConfigError("field 'twoS': root continuation needs twoS = 2")
    if experiment in ("overlap", "asymptote", "trotter") or (experiment == "thermo" and cfg["compareAsymptotic"]):
        try:
            _spec(cfg)
        except ValueError as exc:
            raise ConfigError(f"field 'gamma': {exc}") from None
    for N in cfg["N"]:
        if N < 1:
            raise ConfigError("field 'N': must be >= 1")
        eps = _eps(cfg, N)
        if eps is not None and len(eps) != N:
            raise ConfigError(f"field 'epsilon': expected {N} values, got {len(eps)}")
        for jz in _jzs(cfg, N):
            try:
                ModelParams(N, cfg["twoS"], jz, _nu(cfg, N), epsilon=eps, t_init=cfg["tInit"])
            except EmptySectorError as exc:
                raise ConfigError(f"field 'Jz': empty sector ({exc})") from None
            except ValueError as exc:
                raise ConfigError(f"invalid model parameters: {exc}") from None
    if not 0 < cfg["tInit"] < cfg["tFinal"]:
        raise ConfigError("fields 'tInit', 'tFinal': need 0 < tInit < tFinal")


def _run_one(experiment: str, cfg: dict, cfg_text: str):
    table, extra, checks = RUNNERS[experiment](cfg)
    header = _provenance(cfg_text, experiment, cfg["figure"])
    path = output_path(cfg, experiment)
    atomic_write(path, render_csv(header, table))
    if extra is not None:
        atomic_write(os.path.splitext(path)[0] + ".json", json.dumps(extra, indent=1, sort_keys=True, default=str) + "\n")
    return path, checks


def _sweep_job(args):
    base, cfg, text = args
    return _run_one(base, cfg, text)


def run(experiment: str, config_path: str, check: bool = False, jobs: int = 1, out=sys.stdout) -> int:
    try:
        cfg, text = load_config(config_path)
        if experiment == "sweep":
            if not cfg["sweepValues"]:
                raise ConfigError("field 'sweepValues': empty")
            if cfg["sweepKey"] not in SCHEMA or cfg["sweepKey"] in ("sweepKey", "sweepValues", "base", "output"):
                raise ConfigError(f"field 'sweepKey': cannot sweep {cfg['sweepKey']!r}")
            jobs_cfg = []
            stem = cfg["output"] or f"sweep-{cfg['base']}"
            stem = os.path.splitext(stem)[0]
            for k, v in enumerate(cfg["sweepValues"]):
                c = dict(cfg)
                c[cfg["sweepKey"]] = SCHEMA[cfg["sweepKey"]].parse(v)
                c["output"] = f"{stem}-{k:03d}.csv"
                validate(c, cfg["base"])
                jobs_cfg.append((cfg["base"], c, text + f"\n# sweep {cfg['sweepKey']}={v}\n"))
        else:
            validate(cfg, experiment)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    results: list[tuple[str, list[CheckResult]]] = []
    if experiment == "sweep":
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                results = list(ex.map(_sweep_job, jobs_cfg))
        else:
            results = [_sweep_job(j) for j in jobs_cfg]
    else:
        results = [_run_one(experiment, cfg, text)]
    for path, _ in results:
        print(f"wrote {path}", file=out)
    if not check:
        return 0
    reports = [c for _, cs in results for c in cs]
    for preset in cfg["checks"]:
        reports.extend(check_suite(preset))
    for r in reports:
        print(r.line(), file=out)
    report_path = os.path.splitext(output_path(cfg, experiment if experiment != "sweep" else "sweep"))[0] + ".check.json"
    atomic_write(report_path, json.dumps([r.as_dict() for r in reports], indent=1, sort_keys=True) + "\n")
    return 0 if all(r.passed for r in reports) else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="rgdyn", description=__doc__.splitlines()[0])
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", required=True, help="key = value config file")
    ap.add_argument("--check", action="store_true", help="run checks and exit nonzero on failure")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    args = ap.parse_args(argv)
    if args.jobs < 1:
        ap.error("--jobs must be >= 1")
    return run(args.experiment, args.config, args.check, args.jobs)


if __name__ == "__main__":
    raise SystemExit(main())

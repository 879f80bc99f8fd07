"""Command-line scenario runner.

Usage::

    python -m z2chain run --config cfg.json --out results/ [--threads N] [--strict] [--seed S]
    python -m z2chain repro [--only 3,7] [--seed S]

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
See the README for the configuration schema and the columns of each kind.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bdg import kitaev_index
from .errors import (
    ConfigError,
    GaplessHamiltonian,
    NonStabilized,
    NonStabilizedError,
    ParameterOutOfDomain,
    PartitionFailure,
    QuarticNotQuadratic,
    WraparoundTerm,
)
from .fock import (
    assemble,
    chain_hamiltonian,
    chain_terms,
    flux_sweep,
    ground_space,
    kst_build_and_verify,
    kst_path_check,
    martingale_identities,
)
from .jordan_wigner import jw_forward, jw_inverse, majorana_normal_form, normal_forms_close, spin_matrix
from .repro import random_even_terms
from .models import ChainSpec, band_structure, build_bdg, flux_relative_index, theta_minus_index, xy_band_structure
from .z2flow import HamiltonianPath, relative_index, sf2_endpoints, sf2_path

SCHEMA_VERSION = 1
DEFAULT_SEED = 0
NUMERIC_ERRORS = (GaplessHamiltonian, PartitionFailure, NonStabilizedError, NonStabilized)
_EXPR = re.compile(r"^[0-9eE.+\-*/() ]*(pi)?[0-9eE.+\-*/() ]*$")


# ---------------------------------------------------------------- config parsing

def parse_number(x, where: str) -> float:
    """A number or a string expression in ``pi`` such as ``"pi/2"`` or ``"2*pi"``."""
    if isinstance(x, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str) and x.strip() and _EXPR.match(x.strip()):
        try:
            return float(eval(x, {"__builtins__": {}}, {"pi": np.pi}))  # noqa: S307 - regex-restricted
        except Exception as exc:  # noqa: BLE001
            raise ConfigError(f"{where}: cannot evaluate {x!r}") from exc
    raise ConfigError(f"{where}: expected a number, got {x!r}")


def _numbers(x, where: str):
    if isinstance(x, list):
        return [parse_number(v, f"{where}[{i}]") for i, v in enumerate(x)]
    return parse_number(x, where)


@dataclass
class Experiment:
    name: str
    kind: str
    spec: dict | None
    params: dict
    sweep: tuple | None
    out_path: str
    out_format: str
    where: str
    extra: dict = field(default_factory=dict)


def _spec_dict(d, where: str) -> dict:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    out = dict(d)
    for key in ("w", "mu", "delta_magnitude", "delta_phase", "quartic_K", "alpha"):
        if key in out:
            out[key] = _numbers(out[key], f"{where}.{key}")
    b = out.get("boundary")
    if isinstance(b, dict):
        out["boundary"] = {k: parse_number(v, f"{where}.boundary.{k}") for k, v in b.items()}
    try:
        ChainSpec.from_dict(out)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return out


def _sweep(d, where: str):
    if d is None:
        return None
    if not isinstance(d, dict) or "variable" not in d:
        raise ConfigError(f"{where}: sweep needs a 'variable'")
    var = d["variable"]
    if "values" in d:
        if not isinstance(d["values"], list):
            raise ConfigError(f"{where}.values: expected a list")
        grid = [parse_number(v, f"{where}.values[{i}]") for i, v in enumerate(d["values"])]
    elif {"start", "stop", "num"} <= set(d):
        num = d["num"]
        if not isinstance(num, int) or isinstance(num, bool) or num < 0:
            raise ConfigError(f"{where}.num: expected a non-negative integer")
        grid = list(np.linspace(parse_number(d["start"], f"{where}.start"),
                                parse_number(d["stop"], f"{where}.stop"), num))
    else:
        raise ConfigError(f"{where}: give either 'values' or 'start', 'stop', 'num'")
    if not grid:
        raise ConfigError(f"{where}: empty sweep grid")
    return var, grid


KINDS = {}


def kind(name, requires=(), fmt="csv"):
    def deco(fn):
        KINDS[name] = (fn, tuple(requires), fmt)
        return fn
    return deco


def parse_config(text: str, source: str = "<config>") -> list:
    """Validate a configuration document and return its experiments.

    Raises
    ------
    ConfigError
        With the offending line/column (syntax) or field path (schema).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top level must be an object")
    if doc.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"{source}: schema must be {SCHEMA_VERSION}, got {doc.get('schema')!r}")
    items = doc.get("experiments")
    if items is None:
        items = [{k: v for k, v in doc.items() if k not in ("schema", "seed")}]
        prefix = ""
    elif not isinstance(items, list) or not items:
        raise ConfigError(f"{source}: 'experiments' must be a non-empty list")
    else:
        prefix = "experiments"
    exps = []
    names = set()
    for i, e in enumerate(items):
        where = f"{prefix}[{i}]" if prefix else "<root>"
        if not isinstance(e, dict):
            raise ConfigError(f"{where}: expected an object")
        k = e.get("kind")
        if k not in KINDS:
            raise ConfigError(f"{where}.kind: unknown kind {k!r}; expected one of {sorted(KINDS)}")
        _, requires, default_fmt = KINDS[k]
        for r in requires:
            if r not in e:
                raise ConfigError(f"{where}.{r}: required for kind {k!r}")
        name = str(e.get("name", f"{k}_{i}"))
        if name in names:
            raise ConfigError(f"{where}.name: duplicate name {name!r}")
        names.add(name)
        spec = _spec_dict(e["spec"], f"{where}.spec") if "spec" in e else None
        params = e.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{where}.params: expected an object")
        sweep = _sweep(e.get("sweep"), f"{where}.sweep")
        out = e.get("output", {})
        if not isinstance(out, dict):
            raise ConfigError(f"{where}.output: expected an object")
        fmt = out.get("format", default_fmt)
        if fmt not in ("csv", "json"):
            raise ConfigError(f"{where}.output.format: expected 'csv' or 'json'")
        extra = {key: _spec_dict(e[key], f"{where}.{key}") for key in ("spec0", "spec1") if key in e}
        unknown = set(e) - {"name", "kind", "spec", "params", "sweep", "output", "spec0", "spec1"}
        if unknown:
            raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")
        exps.append(Experiment(name, k, spec, params, sweep, out.get("path", f"{name}.{fmt}"),
                               fmt, where, extra))
    return exps


# ---------------------------------------------------------------- context helpers

@dataclass
class Context:
    threads: int = 1
    strict: bool = False
    seed: int = DEFAULT_SEED
    log: list = field(default_factory=list)

    def map(self, fn, items):
        items = list(items)
        if self.threads <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, items))


def _param(exp: Experiment, key: str, default=None, required=False):
    if key in exp.params:
        return _numbers(exp.params[key], f"{exp.where}.params.{key}")
    if required:
        raise ConfigError(f"{exp.where}.params.{key}: required for kind {exp.kind!r}")
    return default


def _spec_with(exp: Experiment, var=None, value=None, key="spec") -> ChainSpec:
    d = dict(exp.spec if key == "spec" else exp.extra[key])
    if var is not None:
        d[var] = value
    try:
        return ChainSpec.from_dict(d)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{exp.where}.{key}: {exc}") from exc


def _points(exp: Experiment):
    return [(None, None)] if exp.sweep is None else [(exp.sweep[0], v) for v in exp.sweep[1]]


def _sweep_rows(exp, ctx, fn):
    def one(point):
        var, value = point
        row = {var: value} if var is not None else {}
        row.update(fn(var, value))
        return row
    return ctx.map(one, _points(exp))


# ---------------------------------------------------------------- kinds

@kind("index", requires=("spec",))
def _run_index(exp, ctx):
    def fn(var, value):
        rep = kitaev_index(build_bdg(_spec_with(exp, var, value)))
        return {"sign": rep.sign, "gap": rep.data["gap"], "log_abs_pfaffian": rep.data["log_abs_pfaffian"]}
    return _sweep_rows(exp, ctx, fn), {}


@kind("relative_index", fmt="json")
def _run_relative(exp, ctx):
    if "L_half" in exp.params:
        rep = flux_relative_index(_param(exp, "w", 1.0), _param(exp, "mu", 0.0),
                                  int(_param(exp, "L_half")), tol=_param(exp, "tol", 1e-6))
    else:
        if not {"spec0", "spec1"} <= set(exp.extra):
            raise ConfigError(f"{exp.where}: relative_index needs spec0 and spec1, or params.L_half")
        rep = relative_index(build_bdg(_spec_with(exp, key="spec0")), build_bdg(_spec_with(exp, key="spec1")),
                             tol=_param(exp, "tol", 1e-8))
    row = {"sign": rep.sign, "dim_meet": rep.data["dim_meet"], "hs_norm": rep.data["hs_norm"]}
    return [row], {"sign": rep.sign}


@kind("sf2_flux", requires=("spec", "sweep"))
def _run_sf2(exp, ctx):
    var, grid = exp.sweep
    if var != "alpha":
        raise ConfigError(f"{exp.where}.sweep.variable: sf2_flux sweeps 'alpha'")
    base = _spec_with(exp)
    if base.boundary not in ("flux", "two_cell_flux"):
        raise ConfigError(f"{exp.where}.spec.boundary: sf2_flux needs a flux boundary")
    grid = np.asarray(grid)
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ConfigError(f"{exp.where}.sweep: alpha grid must be increasing with >= 2 points")
    path = HamiltonianPath(lambda a: build_bdg(base.with_(alpha=a)), grid=grid,
                           tol=_param(exp, "tol", 1e-8))
    rep = sf2_path(path, tol=path.tol, max_refine=int(_param(exp, "max_refine", 20)))
    ends = sf2_endpoints(path.skew(grid[0]), path.skew(grid[-1]), path.tol)

    def energy(a):
        return {"min_energy": 2.0 * float(np.linalg.svd(path.skew(a).entries, compute_uv=False).min())}
    rows = [{"alpha": a, **e} for a, e in zip(grid, ctx.map(energy, grid))]
    summary = {"sf2": rep.sign, "sf2_endpoints": ends, "crossings": rep.crossings}
    return rows, summary


@kind("ed_ground", requires=("spec",))
def _run_ed(exp, ctx):
    def fn(var, value):
        gs = ground_space(chain_hamiltonian(_spec_with(exp, var, value)))
        return {"E0": gs.E0, "E1": gs.E1, "gap": gs.gap, "degeneracy": gs.degeneracy, "parity0": gs.parity0}
    return _sweep_rows(exp, ctx, fn), {}


@kind("flux_sweep", requires=("spec", "sweep"))
def _run_flux_sweep(exp, ctx):
    var, grid = exp.sweep
    if var != "alpha":
        raise ConfigError(f"{exp.where}.sweep.variable: flux_sweep sweeps 'alpha'")
    base = _spec_with(exp)
    if base.boundary not in ("flux", "two_cell_flux"):
        raise ConfigError(f"{exp.where}.spec.boundary: flux_sweep needs a flux boundary")
    reports = ctx.map(lambda a: flux_sweep(base, [a]).reports[0], grid)
    rows = [{"alpha": a, "E0": r.E0, "E1": r.E1, "gap": r.gap, "degeneracy": r.degeneracy,
             "parity0": r.parity0} for a, r in zip(grid, reports)]
    gaps = np.array([r.gap for r in reports])
    i = int(np.nanargmin(gaps))
    return rows, {"gap_min_alpha": float(grid[i]), "gap_min": float(gaps[i])}


def _kst_params(exp, var=None, value=None):
    p = {k: _param(exp, k, required=True) for k in ("L", "w", "delta", "K")}
    if var is not None:
        if var not in p:
            raise ConfigError(f"{exp.where}.sweep.variable: must be one of L, w, delta, K")
        p[var] = value
    p["L"] = int(p["L"])
    return p


@kind("kst_verify", requires=("params",))
def _run_kst_verify(exp, ctx):
    def fn(var, value):
        p = _kst_params(exp, var, value)
        r = kst_build_and_verify(p["L"], p["w"], p["delta"], p["K"])
        return {"mu_e": r.mu_e, "E0": r.E0, "degeneracy": r.degeneracy, "gap": r.gap,
                "max_residual": max(r.residuals.values()), "ff_residual": r.ff_residual,
                "ok": int(r.ok())}
    return _sweep_rows(exp, ctx, fn), {}


@kind("kst_path", requires=("params",))
def _run_kst_path(exp, ctx):
    p = _kst_params(exp)
    n = int(_param(exp, "t_points", 9))
    if n < 1:
        raise ConfigError(f"{exp.where}.params.t_points: must be positive")
    t_grid = np.linspace(0.0, 2.0 * p["K"] / p["w"], n)
    r = kst_path_check(p["L"], p["K"], w=p["w"], delta=p["delta"], t_grid=t_grid,
                       alpha=_param(exp, "alpha", 0.0))
    rows = [{"t": t, "E0": e, "gap": g, "degeneracy": d, "min_eig_diff": m}
            for t, e, g, d, m in zip(t_grid, r.E0, r.gaps, r.degeneracies, r.min_eig_diff)]
    return rows, {"ok": int(r.ok()), "identity_error": r.identity_error,
                  "annihilation_error": r.annihilation_error}


@kind("band", requires=("params",))
def _run_band(exp, ctx):
    def fn(var, value):
        p = dict(exp.params)
        if var is not None:
            p[var] = value
        k_points = int(p.get("k_points", 2048))
        if "rho" in p:
            bs = xy_band_structure(parse_number(p.get("mu", 0.0), "mu"), parse_number(p["rho"], "rho"), k_points)
        else:
            bs = band_structure(parse_number(p.get("w", 1.0), "w"), parse_number(p.get("mu", 0.0), "mu"),
                                parse_number(p.get("delta", 1.0), "delta"), k_points)
        lo, hi = bs.support()
        return {"lower_min": float(bs.bands[:, 0].min()), "lower_max": float(bs.bands[:, 0].max()),
                "upper_min": lo, "upper_max": hi, "min_gap": bs.min_gap}
    return _sweep_rows(exp, ctx, fn), {}


@kind("theta_index", requires=("spec",))
def _run_theta(exp, ctx):
    L_trunc = int(_param(exp, "L_trunc", 24))

    def fn(var, value):
        rep = theta_minus_index(_spec_with(exp, var, value), L_trunc=L_trunc, strict=ctx.strict,
                                hs_rtol=_param(exp, "hs_rtol", 1e-3))
        r0, r1 = rep.data["records"]
        return {"sign": rep.sign, "sign_next": r1["sign"], "dim_meet": r0["dim_meet_per_cut"],
                "hs_norm": r0["hs_norm"], "hs_norm_next": r1["hs_norm"],
                "non_stabilized": int(rep.data["non_stabilized"])}
    return _sweep_rows(exp, ctx, fn), {}


@kind("martingale", requires=("params",), fmt="json")
def _run_martingale(exp, ctx):
    w = _param(exp, "w", required=True)
    if not isinstance(w, list) or not w:
        raise ConfigError(f"{exp.where}.params.w: expected a non-empty list")
    r = martingale_identities(w, closed=bool(exp.params.get("closed", False)))
    row = {"n_sites": r.n_sites, "gamma": r.gamma, "commutator": r.commutator,
           "annihilation": r.annihilation, "min_eig": r.min_eig, "gap": r.gap, "ok": int(r.ok())}
    return [row], {}


@kind("jw_roundtrip", requires=("spec",), fmt="json")
def _run_jw(exp, ctx):
    spec = _spec_with(exp)
    S = jw_forward(spec.L, spec)
    back = jw_inverse(S)
    fermi = chain_hamiltonian(spec).matrix
    err = float(np.abs((fermi - spin_matrix(S)).toarray()).max())
    ok = normal_forms_close(majorana_normal_form(back), majorana_normal_form(chain_terms(spec)))
    row = {"n_strings": len(S.terms), "matrix_error": err, "roundtrip_ok": int(ok)}
    # Optional randomized cases, reproducible through the seed.
    n_random = int(_param(exp, "random_cases", 0))
    rng = np.random.default_rng(ctx.seed)
    failures, worst = 0, 0.0
    for _ in range(n_random):
        L = int(rng.integers(2, 8))
        terms = random_even_terms(rng, L)
        Sr = jw_forward(L, terms)
        good = normal_forms_close(majorana_normal_form(jw_inverse(Sr)), majorana_normal_form(terms))
        worst = max(worst, float(np.abs((assemble(L, terms).matrix - spin_matrix(Sr)).toarray()).max()))
        failures += int(not good)
    row.update({"random_cases": n_random, "random_failures": failures, "random_matrix_error": worst})
    return [row], {"pauli": S.dumps()}


# ---------------------------------------------------------------- output

def fmt_value(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not np.isfinite(v):
            return "nan" if np.isnan(v) else ("inf" if v > 0 else "-inf")
        return float(f"{v:.12g}")
    if isinstance(v, (list, tuple, np.ndarray)):
        return [fmt_value(x) for x in v]
    if isinstance(v, dict):
        return {k: fmt_value(x) for k, x in v.items()}
    return v


def _csv_cell(v) -> str:
    v = fmt_value(v)
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_output(exp: Experiment, rows: list, summary: dict, out_dir: Path, seed: int) -> Path:
    path = out_dir / exp.out_path
    path.parent.mkdir(parents=True, exist_ok=True)
    if exp.out_format == "csv":
        cols = list(rows[0]) if rows else []
        buf = io.StringIO()
        buf.write(f"# z2chain {__version__} kind={exp.kind} name={exp.name} seed={seed}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_csv_cell(r.get(c)) for c in cols])
        path.write_text(buf.getvalue())
    else:
        doc = {"kind": exp.kind, "name": exp.name, "seed": seed, "version": __version__,
               "rows": fmt_value(rows),
               "summary": fmt_value({k: v for k, v in summary.items() if k != "pauli"})}
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _summary_line(exp: Experiment, summary: dict) -> str:
    parts = [f"{exp.name}:"]
    for k, v in summary.items():
        if k == "pauli":
            continue
        v = fmt_value(v)
        parts.append(f"{k}={v}")
    return " ".join(parts)


def run_experiments(exps: list, out_dir: Path, ctx: Context, stream=None) -> None:
    stream = sys.stdout if stream is None else stream
    out_dir.mkdir(parents=True, exist_ok=True)
    for exp in exps:
        fn = KINDS[exp.kind][0]
        rows, summary = fn(exp, ctx)
        path = write_output(exp, rows, summary, out_dir, ctx.seed)
        if exp.kind == "jw_roundtrip":
            (out_dir / f"{exp.name}.pauli").write_text(summary["pauli"])
        print(_summary_line(exp, summary) + f" -> {path}", file=stream)


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="z2chain", description="Z2 indices and spectral flow for fermionic chains.")
    sub = p.add_subparsers(dest="command")
    r = sub.add_parser("run", help="run the experiments of a config file")
    r.add_argument("config_pos", nargs="?", metavar="CONFIG")
    for q in (p, r):
        q.add_argument("--config", help="experiment config (JSON, schema 1)")
        q.add_argument("--out", default="results", help="output directory")
        q.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
        q.add_argument("--strict", action="store_true", help="treat NonStabilized as an error")
        q.add_argument("--seed", type=int, default=None, help="RNG seed (u64)")
    rp = sub.add_parser("repro", help="run the reproduction suite and print a pass/fail matrix")
    rp.add_argument("--only", default=None, help="comma-separated criterion numbers")
    rp.add_argument("--seed", type=int, default=None)
    return p


def _seed(args_seed, doc_seed) -> int:
    s = args_seed if args_seed is not None else (doc_seed if doc_seed is not None else DEFAULT_SEED)
    if not isinstance(s, int) or isinstance(s, bool) or not 0 <= s < 2 ** 64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {s!r}")
    return s


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "repro":
        from .repro import matrix, run_all
        try:
            only = None if args.only is None else {int(x) for x in args.only.split(",") if x.strip()}
        except ValueError:
            print("error: --only expects comma-separated integers", file=sys.stderr)
            return 1
        clauses = run_all(args.seed, only)
        print(matrix(clauses))
        return 0 if all(c.ok for c in clauses) else 2
    config = getattr(args, "config_pos", None) or args.config
    if not config:
        print("error: no config given (use --config PATH)", file=sys.stderr)
        return 1
    try:
        text = Path(config).read_text()
    except OSError as exc:
        print(f"error: cannot read {config}: {exc}", file=sys.stderr)
        return 1
    try:
        exps = parse_config(text, config)
        doc_seed = json.loads(text).get("seed")
        seed = _seed(args.seed, doc_seed)
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
        ctx = Context(threads=args.threads, strict=args.strict, seed=seed)
        with warnings.catch_warnings():
            if args.strict:
                warnings.simplefilter("error", NonStabilized)
            run_experiments(exps, Path(args.out), ctx)
    except (ConfigError, ParameterOutOfDomain, QuarticNotQuadratic, WraparoundTerm) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

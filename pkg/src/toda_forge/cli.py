"""Batch front end: JSON job in, CSV/JSON reports out.

Exit status: 0 pass, 1 residual above tolerance, 2 configuration error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError, ParseError, SingularPointError, StructureError, TodaForgeError
from .exprlang import parse_expr
from .iterint import IntegrandSet, check_alternating_sum, check_shuffle_product
from .leznov import build_solution_vector, verify_conditions
from .liedata import MIN_RANK, LieType
from .minorlab import all_subsets, check_cofactor_minor_identity, max_duality_residual, random_group_element
from . import taukit as tk

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
DEFAULT_TOL = 1e-6

DEFAULT_IDENTITIES = {
    "cofactor_matrices": 20,
    "cofactor_max_size": 5,
    "groups": [
        {"group": "Sp", "n": 2, "count": 10},
        {"group": "Sp", "n": 3, "count": 10},
        {"group": "SO-odd", "n": 2, "count": 10},
        {"group": "SO-even", "n": 3, "count": 10},
        {"group": "SO-odd", "n": 2, "count": 5, "det_sign": -1},
    ],
    "alternating": {"n": [1, 2, 3], "draws": 5},
}


def load_schema(name: str) -> dict:
    return json.loads(resources.files("toda_forge").joinpath("schemas", name).read_text())


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


# --------------------------------------------------------------------------
# config handling

def validate_config(cfg: dict) -> dict:
    """Schema plus semantic checks; raises ConfigError with a JSON pointer."""
    validator = jsonschema.Draft202012Validator(load_schema("config.schema.json"))
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(e.message, _pointer(e.absolute_path))

    cmd = cfg["command"]
    if cmd in ("solve", "verify"):
        for key in ("family", "rank", "phi", "psi", "grid"):
            if key not in cfg:
                raise ConfigError(f"'{key}' is required for {cmd}", "")
        fam, rank = cfg["family"], cfg["rank"]
        if rank < MIN_RANK[fam]:
            raise ConfigError(f"{fam}_n needs rank >= {MIN_RANK[fam]}", "/rank")
        for side in ("phi", "psi"):
            if len(cfg[side]) != rank:
                raise ConfigError(f"expected {rank} expressions, got {len(cfg[side])}", f"/{side}")
        g = cfg["grid"]
        for lo, hi in (("x_min", "x_max"), ("y_min", "y_max")):
            if g[lo] > g[hi]:
                raise ConfigError(f"{lo} exceeds {hi}", f"/grid/{lo}")
        if "perturb" in cfg:
            p = cfg["perturb"]
            length = LieType(fam, rank).vector_length
            if p["index"] >= length:
                raise ConfigError(f"component index must be below {length}", "/perturb/index")
            _parse_at(p["expr"], "/perturb/expr")
    if cmd in ("solve", "verify", "shuffle"):
        if "phi" not in cfg:
            raise ConfigError("'phi' is required", "")
    if cmd == "shuffle":
        for key in ("words", "points"):
            if key not in cfg:
                raise ConfigError(f"'{key}' is required for shuffle", "")
        m = len(cfg["phi"])
        for a, pair in enumerate(cfg["words"]):
            for b, word in enumerate(pair):
                for c, label in enumerate(word):
                    if label > m:
                        raise ConfigError(f"label {label} exceeds the {m} integrands",
                                          f"/words/{a}/{b}/{c}")
    for side in ("phi", "psi"):
        for k, src in enumerate(cfg.get(side, [])):
            _parse_at(src, f"/{side}/{k}")
    return cfg


def _parse_at(src: str, pointer: str):
    try:
        return parse_expr(src)
    except ParseError as exc:
        raise ConfigError(str(exc), pointer) from exc


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", "") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno})", "") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object", "")
    return cfg


# --------------------------------------------------------------------------
# solution pair

def _grid_axes(cfg):
    g = cfg["grid"]
    return np.linspace(g["x_min"], g["x_max"], g["nx"]), np.linspace(g["y_min"], g["y_max"], g["ny"])


def build_pair(cfg: dict):
    lt = LieType(cfg["family"], cfg["rank"])
    g = cfg["grid"]
    step = cfg.get("quad_step")
    # the quadrature domain must be nonempty even for a degenerate grid at 0
    F = build_solution_vector(lt, IntegrandSet(cfg["phi"], max(g["x_max"], 1e-12), step))
    G = build_solution_vector(lt, IntegrandSet(cfg["psi"], max(g["y_max"], 1e-12), step))
    p = cfg.get("perturb")
    if p:
        if p["side"] == "phi":
            F = F.perturbed(p["index"], p["expr"], p["eps"])
        else:
            G = G.perturbed(p["index"], p["expr"], p["eps"])
    return lt, F, G


def _solve_rows(cfg: dict, xs) -> list[list]:
    """CSV rows for the grid lines x in xs (worker entry point)."""
    lt, F, G = build_pair(cfg)
    _, ys = _grid_axes(cfg)
    n = lt.rank
    dF = F.derivatives_many(xs, n + 1)
    dG = G.derivatives_many(ys, n + 1)
    rows = []
    for a, x in enumerate(xs):
        for b, y in enumerate(ys):
            t = tk.tau_table_from_derivs(dF[a], dG[b], x, y)
            taus = list(t.taus[1 : n + 1])
            try:
                sf = tk.sigma_fields(t, lt)
                us, excluded, sign = [float(u) + 0.0 for u in sf.us], 0, sf.branch_sign
            except SingularPointError:
                us, excluded, sign = [math.nan] * n, 1, None
            rows.append([float(x), float(y), *map(float, taus), *map(float, us), excluded, sign])
    return rows


def _chunks(xs: np.ndarray, jobs: int) -> list[np.ndarray]:
    k = max(1, min(jobs, xs.size))
    return [c for c in np.array_split(xs, k) if c.size]


def _parallel_map(fn, cfg, chunks, jobs):
    if jobs <= 1 or len(chunks) == 1:
        return [fn(cfg, c) for c in chunks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, [cfg] * len(chunks), chunks))


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _quad_error(F, G, xs, ys) -> float:
    return max(F.quadrature_error(xs), G.quadrature_error(ys))


def cmd_solve(cfg: dict, out: str, jobs: int = 1) -> tuple[dict, int]:
    lt, F, G = build_pair(cfg)
    xs, ys = _grid_axes(cfg)
    n = lt.rank
    rows = [r for part in _parallel_map(_solve_rows, cfg, _chunks(xs, jobs), jobs) for r in part]
    signs = {r[-1] for r in rows if r[-1] is not None}
    if len(signs) > 1:
        raise TodaForgeError("branch sign changed across the grid")
    header = ["x", "y"] + [f"tau_{i}" for i in range(1, n + 1)] + [f"u_{i}" for i in range(1, n + 1)] + ["excluded"]
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r[:-1]])
    report = {
        "command": "solve",
        "config": cfg,
        "family": lt.family,
        "rank": lt.rank,
        "notes": lt.notes,
        "csv": str(out_path),
        "rows": len(rows),
        "excluded": sum(r[-2] for r in rows),
        "quad_error": _quad_error(F, G, xs, ys),
        "pass": True,
    }
    if lt.family == "B":
        report["branch_sign"] = signs.pop() if signs else None
    _write_json(report, out_path.with_suffix(".json"))
    return report, EXIT_PASS


def _verify_rows(cfg: dict, xs) -> tuple:
    lt, F, G = build_pair(cfg)
    _, ys = _grid_axes(cfg)
    r = tk.toda_grid(F, G, lt, xs, ys, form="tau")
    p = tk.toda_grid(F, G, lt, xs, ys, form="pde")
    return r.residuals, p.residuals, r.excluded, r.branch_sign


def _nanmax(a) -> float | None:
    a = np.asarray(a, dtype=float)
    if a.size == 0 or np.all(np.isnan(a)):
        return None
    return float(np.nanmax(a))


def cmd_verify(cfg: dict, out: str, jobs: int = 1) -> tuple[dict, int]:
    tol = cfg.get("tol", DEFAULT_TOL)
    lt, F, G = build_pair(cfg)
    xs, ys = _grid_axes(cfg)
    parts = _parallel_map(_verify_rows, cfg, _chunks(xs, jobs), jobs)
    res = np.concatenate([p[0] for p in parts])
    pde = np.concatenate([p[1] for p in parts])
    excl = np.concatenate([p[2] for p in parts])
    signs = {p[3] for p in parts if p[3] is not None}
    notes = list(lt.notes)
    if len(signs) > 1:
        notes.append("branch sign differs between grid chunks")
    conditions = {
        "phi": {k: v for k, v in verify_conditions(F, xs)},
        "psi": {k: v for k, v in verify_conditions(G, ys)},
    }
    eq = [_nanmax(res[..., i]) for i in range(lt.rank)]
    pd = [_nanmax(pde[..., i]) for i in range(lt.rank)]
    values = [v for side in conditions.values() for v in side.values()]
    values += [v for v in eq + pd if v is not None]
    worst = max(values) if values else None
    ok = worst is not None and worst <= tol and len(signs) <= 1
    report = {
        "command": "verify",
        "config": cfg,
        "family": lt.family,
        "rank": lt.rank,
        "notes": notes,
        "tol": tol,
        "conditions": conditions,
        "equations": eq,
        "pde": pd,
        "max_residual": worst,
        "excluded": int(excl.sum()),
        "points": int(excl.size),
        "quad_error": _quad_error(F, G, xs, ys),
        "branch_sign": signs.pop() if len(signs) == 1 else None,
        "pass": bool(ok),
    }
    _write_json(report, out)
    return report, EXIT_PASS if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# identity suites

def _random_integrands(rng, m: int) -> list[str]:
    out = []
    for _ in range(m):
        a, b, c = (round(float(v), 6) for v in rng.uniform(-1, 1, 3))
        out.append(f"{abs(a) + 0.5!r} + {b!r}*sin({c!r}*t + 1)")
    return out


def run_identities(plan: dict, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    results = {}

    cases, worst = 0, 0.0
    for _ in range(plan.get("cofactor_matrices", 0)):
        N = int(rng.integers(1, plan.get("cofactor_max_size", 5) + 1))
        A = rng.standard_normal((N, N))
        for S in all_subsets(N):
            worst = max(worst, check_cofactor_minor_identity(A, S).value)
            cases += 1
    results["cofactor_minor"] = {"cases": cases, "max_residual": worst}

    for g in plan.get("groups", []):
        sign = g.get("det_sign", 1)
        cases, worst = 0, 0.0
        for _ in range(g["count"]):
            A = random_group_element(g["group"], g["n"], int(rng.integers(2**31)), sign)
            worst = max(worst, max_duality_residual(A, g["group"]))
            cases += 2 ** A.shape[0]
        key = f"group_minor_duality[{g['group']},n={g['n']}" + (",det=-1]" if sign == -1 else "]")
        results[key] = {"cases": cases, "max_residual": worst}

    alt = plan.get("alternating")
    if alt and alt["n"]:
        m = max(alt["n"]) or 1
        cases, worst = 0, 0.0
        for _ in range(alt["draws"]):
            phis = IntegrandSet(_random_integrands(rng, m), 1.0)
            x = float(rng.uniform(0.2, 1.0))
            for n in alt["n"]:
                worst = max(worst, check_alternating_sum(phis, n, x))
                cases += 1
        results["alternating_sum"] = {"cases": cases, "max_residual": worst}
    return results


def cmd_identities(cfg: dict, out: str) -> tuple[dict, int]:
    tol = cfg.get("tol", 1e-8)
    plan = copy.deepcopy(DEFAULT_IDENTITIES)
    plan.update(cfg.get("identities", {}))
    results = run_identities(plan, cfg.get("seed", 0))
    ok = all(r["max_residual"] <= tol for r in results.values())
    report = {"command": "identities", "config": cfg, "tol": tol, "identities": results, "pass": ok}
    _write_json(report, out)
    return report, EXIT_PASS if ok else EXIT_FAIL


def cmd_shuffle(cfg: dict, out: str) -> tuple[dict, int]:
    tol = cfg.get("tol", 1e-8)
    xs = sorted(cfg["points"])
    phis = IntegrandSet(cfg["phi"], max(max(xs), 1e-12), cfg.get("quad_step"))
    rows = []
    for a, b in cfg["words"]:
        for x in xs:
            rows.append({"a": a, "b": b, "x": x, "residual": check_shuffle_product(phis, a, b, x)})
    ok = all(r["residual"] <= tol for r in rows)
    report = {"command": "shuffle", "config": cfg, "tol": tol, "shuffle": rows, "pass": ok}
    _write_json(report, out)
    return report, EXIT_PASS if ok else EXIT_FAIL


# --------------------------------------------------------------------------

def _write_json(obj: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def _default_jobs() -> int:
    env = os.environ.get("TODA_FORGE_JOBS")
    if env is None:
        return 1
    try:
        return max(1, int(env))
    except ValueError:
        raise ConfigError(f"TODA_FORGE_JOBS must be an integer, got {env!r}", "") from None


def run(cfg: dict, out: str | None = None, jobs: int = 1) -> tuple[dict, int]:
    cfg = validate_config(cfg)
    out = out or cfg.get("out") or f"{cfg['command']}.{'csv' if cfg['command'] == 'solve' else 'json'}"
    cmd = cfg["command"]
    if cmd == "solve":
        return cmd_solve(cfg, out, jobs)
    if cmd == "verify":
        return cmd_verify(cfg, out, jobs)
    if cmd == "identities":
        return cmd_identities(cfg, out)
    return cmd_shuffle(cfg, out)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="toda-forge", description=__doc__.splitlines()[0])
    ap.add_argument("--config", required=True, help="JSON job file")
    ap.add_argument("--out", help="output path (CSV for solve, JSON otherwise)")
    ap.add_argument("--tol", type=float, help="override the residual tolerance")
    ap.add_argument("--seed", type=int, help="override the random seed")
    ap.add_argument("--jobs", type=int, help="worker processes (default $TODA_FORGE_JOBS or 1)")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.tol is not None:
            cfg["tol"] = args.tol
        if args.seed is not None:
            cfg["seed"] = args.seed
        jobs = args.jobs if args.jobs is not None else _default_jobs()
        if jobs < 1:
            raise ConfigError("--jobs must be at least 1", "")
        report, code = run(cfg, args.out, jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StructureError, TodaForgeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    status = "pass" if report["pass"] else "FAIL"
    print(f"{report['command']}: {status}")
    return code


if __name__ == "__main__":
    sys.exit(main())

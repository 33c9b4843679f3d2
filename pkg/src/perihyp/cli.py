"""Command-line driver: JSON config in, CSV fields and JSON reports out.

    perihyp <command> --config run.json [--out DIR] [--nt N] [--nx N] [--tol T]

Exit codes: 0 success, 1 usage or config error, 2 resonance, 3 no convergence.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .diagnostics import (bc_contraction_check, coercivity, derivative_consistency,
                          nonresonance_R0S0, nonresonance_RS, r0_from_coefficients,
                          resonance_scan, telegraph_check, wave_R0S0, COERCIVITY_GRID)
from .errors import ConfigError, PerihypError, ResonanceError
from .expressions import Expression
from .field import Field, PeriodicGrid, norm_l
from .problem import (BoundaryCoupling, FirstOrderProblem, Tabulated, WaveProblem,
                      builtin_problems, validate)
from .solver import (continuation, jsonable, quasi_newton, smoothness_probe, worker_count,
                     _stencil_half)
from .tracesolve import trace_condition
from .wave import as_first_order, reduce, wave_solve

COMMANDS = ("solve", "wave-solve", "continue", "scan-resonance", "probe-smoothness", "diagnose")
EXIT_OK, EXIT_USAGE, EXIT_RESONANCE, EXIT_NOCONV = 0, 1, 2, 3

DEFAULTS = {
    "n_t": 128, "n_x": 128, "tol": 1e-8, "max_iter": 50, "lambda": 0.0,
    "seed_lambda": 0.0, "output": "perihyp-out", "order": 1, "step": 1e-3,
    "dense": False, "refine": True,
}
KEYS = set(DEFAULTS) | {"command", "problem", "lambda_range", "u_seed", "center"}


@dataclass
class RunConfig:
    command: str | None
    problem: object
    n_t: int
    n_x: int
    tol: float
    max_iter: int
    lam: float
    lam_range: tuple | None
    seed_lambda: float
    u_seed: list | None
    output: str
    order: int
    step: float
    center: float | None
    dense: bool
    refine: bool

    @property
    def grid(self) -> PeriodicGrid:
        return PeriodicGrid(self.n_t, self.n_x)

    def resolved(self) -> dict:
        """Canonical dict of every setting (used for hashing and report headers)."""
        return {
            "command": self.command, "problem": self.problem, "n_t": self.n_t, "n_x": self.n_x,
            "tol": self.tol, "max_iter": self.max_iter, "lambda": self.lam,
            "lambda_range": None if self.lam_range is None else
            {"start": self.lam_range[0], "stop": self.lam_range[1], "steps": self.lam_range[2]},
            "seed_lambda": self.seed_lambda, "u_seed": self.u_seed, "output": self.output,
            "order": self.order, "step": self.step, "center": self.center,
            "dense": self.dense, "refine": self.refine,
        }

    def digest(self) -> str:
        res = self.resolved()
        res.pop("output")
        blob = json.dumps(res, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# ------------------------------------------------------------------ config

def _number(raw, key, kind=float, positive=False, nonneg=False):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {raw!r}")
    if kind is int and (not float(raw).is_integer()):
        raise ConfigError(f"{key}: expected an integer, got {raw!r}")
    val = kind(raw)
    if not np.isfinite(val):
        raise ConfigError(f"{key}: must be finite")
    if positive and val <= 0:
        raise ConfigError(f"{key}: must be positive, got {raw!r}")
    if nonneg and val < 0:
        raise ConfigError(f"{key}: must be nonnegative, got {raw!r}")
    return val


def parse_config(data: dict, overrides: dict | None = None) -> RunConfig:
    """Validate a decoded config mapping (plus command-line overrides)."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - KEYS)
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    merged = dict(DEFAULTS)
    merged.update(data)
    for k, v in (overrides or {}).items():
        if v is not None:
            merged[k] = v
    cmd = merged.get("command")
    if cmd is not None and cmd not in COMMANDS:
        raise ConfigError(f"command: must be one of {', '.join(COMMANDS)}, got {cmd!r}")
    if "problem" not in merged:
        raise ConfigError("problem: required")
    n_t = _number(merged["n_t"], "n_t", int, positive=True)
    n_x = _number(merged["n_x"], "n_x", int, positive=True)
    try:
        PeriodicGrid(n_t, n_x)
    except ValueError as exc:
        raise ConfigError(f"n_t/n_x: {exc}") from None
    lam_range = None
    if merged.get("lambda_range") is not None:
        lr = merged["lambda_range"]
        if not isinstance(lr, dict) or set(lr) - {"start", "stop", "steps"} or not {"start", "stop"} <= set(lr):
            raise ConfigError("lambda_range: expected {start, stop, steps}")
        start = _number(lr["start"], "lambda_range.start")
        stop = _number(lr["stop"], "lambda_range.stop")
        steps = _number(lr.get("steps", 2), "lambda_range.steps", int)
        if steps < 1 or (steps < 2 and start != stop):
            raise ConfigError(f"lambda_range.steps: must be >= 2 for a nondegenerate range, got {steps}")
        if stop < start:
            raise ConfigError("lambda_range: stop must not be below start")
        lam_range = (start, stop, steps)
    u_seed = merged.get("u_seed")
    if u_seed is not None and not (isinstance(u_seed, list) and all(isinstance(e, (str, int, float)) for e in u_seed)):
        raise ConfigError("u_seed: expected a list of expressions, one per component")
    center = merged.get("center")
    order = _number(merged["order"], "order", int, positive=True)
    for key in ("dense", "refine"):
        if not isinstance(merged[key], bool):
            raise ConfigError(f"{key}: expected true or false")
    if not isinstance(merged["output"], str) or not merged["output"]:
        raise ConfigError("output: expected a directory name")
    return RunConfig(
        command=cmd, problem=merged["problem"], n_t=n_t, n_x=n_x,
        tol=_number(merged["tol"], "tol", positive=True),
        max_iter=_number(merged["max_iter"], "max_iter", int, positive=True),
        lam=_number(merged["lambda"], "lambda"), lam_range=lam_range,
        seed_lambda=_number(merged["seed_lambda"], "seed_lambda"), u_seed=u_seed,
        output=merged["output"], order=order,
        step=_number(merged["step"], "step", positive=True),
        center=None if center is None else _number(center, "center"),
        dense=merged["dense"], refine=merged["refine"])


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Read and validate a JSON config; parse errors carry line and column."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    cfg = parse_config(data, overrides)
    build_problem(cfg.problem)  # surface problem errors at load time
    return cfg


# ---------------------------------------------------------------- problems

def _tables(spec: dict) -> dict:
    out = {}
    for name, tab in (spec.get("tables") or {}).items():
        if not isinstance(tab, dict) or set(tab) != {"axes", "values"}:
            raise ConfigError(f"tables.{name}: expected {{axes, values}}")
        try:
            out[name] = Tabulated(tab["axes"], tab["values"])
        except ValueError as exc:
            raise ConfigError(f"tables.{name}: {exc}") from None
    return out


def _expr_list(raw, n, variables, tables, where):
    if not isinstance(raw, list) or len(raw) != n:
        raise ConfigError(f"{where}: expected a list of {n} entries")
    return [Expression(e, variables, tables, f"{where}[{i}]") for i, e in enumerate(raw)]


def _expr_matrix(raw, n, variables, tables, where):
    if not isinstance(raw, list) or len(raw) != n or any(not isinstance(r, list) or len(r) != n for r in raw):
        raise ConfigError(f"{where}: expected an {n}x{n} nested list")
    return [[Expression(e, variables, tables, f"{where}[{i}][{k}]") for k, e in enumerate(row)]
            for i, row in enumerate(raw)]


def _first_order(spec: dict) -> FirstOrderProblem:
    allowed = {"kind", "n", "m", "speed", "source", "jacobian", "coupling", "exact", "tables", "name"}
    extra = sorted(set(spec) - allowed)
    if extra:
        raise ConfigError(f"problem: unknown key(s) {', '.join(extra)}")
    for key in ("n", "m", "speed", "source", "coupling"):
        if key not in spec:
            raise ConfigError(f"problem.{key}: required")
    n = _number(spec["n"], "problem.n", int, positive=True)
    m = _number(spec["m"], "problem.m", int, nonneg=True)
    if m > n:
        raise ConfigError("problem.m: must not exceed n")
    tables = _tables(spec)
    uvars = [f"u{k + 1}" for k in range(n)]
    speed = _expr_list(spec["speed"], n, ["x", "lambda"], tables, "problem.speed")
    src = _expr_list(spec["source"], n, ["t", "x", "lambda"] + uvars, tables, "problem.source")
    jac = (_expr_matrix(spec["jacobian"], n, ["t", "x", "lambda"] + uvars, tables, "problem.jacobian")
           if spec.get("jacobian") is not None else None)

    def env(t, x, lam, u):
        d = {"t": t, "x": x, "lambda": lam}
        d.update({uvars[k]: u[k] for k in range(n)})
        return d

    def speed_fn(x, lam):
        return [e(x=x, **{"lambda": lam}) for e in speed]

    def source_fn(t, x, lam, u):
        e_ = env(t, x, lam, u)
        return [e(**e_) for e in src]

    def jac_fn(t, x, lam, u):
        e_ = env(t, x, lam, u)
        if jac is not None:
            return [[e(**e_) for e in row] for row in jac]
        return [[src[j].derivative(uvars[k], **e_) for k in range(n)] for j in range(n)]

    cs = spec["coupling"]
    if not isinstance(cs, dict) or cs.get("kind") not in ("reflection", "general"):
        raise ConfigError("problem.coupling: expected {kind: reflection|general, ...}")
    if cs["kind"] == "reflection":
        if set(cs) - {"kind", "r"}:
            raise ConfigError("problem.coupling: reflection takes only 'r'")
        rm = _expr_matrix(cs.get("r", [[0] * n for _ in range(n)]), n, ["t", "lambda"], tables,
                          "problem.coupling.r")
        coupling = BoundaryCoupling.reflection(
            n, m, lambda t, lam: [[e(t=t, **{"lambda": lam}) for e in row] for row in rm])
    else:
        names = ("r00", "r01", "r10", "r11")
        if set(cs) - {"kind", *names}:
            raise ConfigError("problem.coupling: general takes r00, r01, r10, r11")
        blocks = {}
        for nm in names:
            if nm in cs:
                mat = _expr_matrix(cs[nm], n, ["t", "lambda"], tables, f"problem.coupling.{nm}")
                blocks[nm] = (lambda mat: lambda t, lam: [[e(t=t, **{"lambda": lam}) for e in row]
                                                          for row in mat])(mat)
        coupling = BoundaryCoupling.general(n, m, **blocks)
    exact = None
    if spec.get("exact") is not None:
        ex = _expr_list(spec["exact"], n, ["t", "x", "lambda"], tables, "problem.exact")

        def exact(t, x, lam):
            return np.stack([np.broadcast_to(e(t=t, x=x, **{"lambda": lam}), np.shape(t)) for e in ex])
    return FirstOrderProblem(n=n, m=m, speed=speed_fn, source=source_fn, jacobian=jac_fn,
                             coupling=coupling, name=str(spec.get("name", "custom")), exact=exact)


def _wave(spec: dict) -> WaveProblem:
    allowed = {"kind", "a", "dxa", "b", "d4b", "d5b", "d6b", "exact", "tables", "name"}
    extra = sorted(set(spec) - allowed)
    if extra:
        raise ConfigError(f"problem: unknown key(s) {', '.join(extra)}")
    for key in ("a", "b"):
        if key not in spec:
            raise ConfigError(f"problem.{key}: required")
    tables = _tables(spec)
    bvars = ["t", "x", "lambda", "u", "ut", "ux"]
    a = Expression(spec["a"], ["x", "lambda"], tables, "problem.a")
    b = Expression(spec["b"], bvars, tables, "problem.b")
    if spec.get("dxa") is not None:
        dxa_e = Expression(spec["dxa"], ["x", "lambda"], tables, "problem.dxa")
        dxa = lambda x, lam: dxa_e(x=x, **{"lambda": lam})
    else:
        if any(a.uses(nm) for nm in tables):
            raise ConfigError("problem.dxa: required when a uses a table")
        dxa = lambda x, lam: a.derivative("x", x=x, **{"lambda": lam})
    partials = {}
    for name, var in (("d4b", "u"), ("d5b", "ut"), ("d6b", "ux")):
        if spec.get(name) is not None:
            e = Expression(spec[name], bvars, tables, f"problem.{name}")
            partials[name] = (lambda e: lambda t, x, lam, u, p, q:
                              e(t=t, x=x, u=u, ut=p, ux=q, **{"lambda": lam}))(e)
        else:
            partials[name] = (lambda var: lambda t, x, lam, u, p, q:
                              b.derivative(var, t=t, x=x, u=u, ut=p, ux=q, **{"lambda": lam}))(var)
    exact = None
    if spec.get("exact") is not None:
        ex = Expression(spec["exact"], ["t", "x", "lambda"], tables, "problem.exact")
        exact = lambda t, x, lam: np.broadcast_to(ex(t=t, x=x, **{"lambda": lam}), np.shape(t))
    return WaveProblem(a=lambda x, lam: a(x=x, **{"lambda": lam}), dxa=dxa,
                       b=lambda t, x, lam, u, p, q: b(t=t, x=x, u=u, ut=p, ux=q, **{"lambda": lam}),
                       name=str(spec.get("name", "custom-wave")), exact=exact, **partials)


def build_problem(spec):
    """Problem object from a preset name, {preset: name} or a coefficient description."""
    presets = builtin_problems()
    if isinstance(spec, str):
        spec = {"preset": spec}
    if not isinstance(spec, dict):
        raise ConfigError("problem: expected a preset name or an object")
    if "preset" in spec:
        if set(spec) != {"preset"}:
            raise ConfigError("problem: a preset takes no other keys")
        if spec["preset"] not in presets:
            raise ConfigError(f"problem.preset: unknown preset {spec['preset']!r}; "
                              f"available: {', '.join(sorted(presets))}")
        return presets[spec["preset"]]()
    kind = spec.get("kind", "first-order")
    if kind == "first-order":
        return _first_order(spec)
    if kind == "wave":
        return _wave(spec)
    raise ConfigError(f"problem.kind: expected first-order or wave, got {kind!r}")


def seed_field(cfg: RunConfig, n: int, grid: PeriodicGrid | None = None) -> Field:
    grid = grid or cfg.grid
    if cfg.u_seed is None:
        return Field.zeros(grid, n)
    if len(cfg.u_seed) != n:
        raise ConfigError(f"u_seed: expected {n} expressions, got {len(cfg.u_seed)}")
    T, X = grid.mesh()
    exprs = [Expression(e, ["t", "x", "lambda"], where=f"u_seed[{i}]") for i, e in enumerate(cfg.u_seed)]
    lam = cfg.seed_lambda
    return Field(grid, np.stack([np.broadcast_to(e(t=T, x=X, **{"lambda": lam}), T.shape) for e in exprs]))


# ---------------------------------------------------------------- emission

class Writer:
    """Writes files into the output directory with a common metadata header."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.dir = cfg.output
        os.makedirs(self.dir, exist_ok=True)
        self.meta = {"version": __version__, "config_sha256": cfg.digest(), "command": command,
                     "grid": {"n_t": cfg.n_t, "n_x": cfg.n_x}}
        self.files = []

    def _path(self, name):
        path = os.path.join(self.dir, name)
        self.files.append(name)
        return path

    def field(self, name: str, values: np.ndarray, extra: dict | None = None, lam_axis: bool = False):
        """values (n, n_t, n_x), or (L, n, n_t, n_x) with lam_axis."""
        vals = np.asarray(values, dtype=float)
        if not lam_axis:
            vals = vals[None]
        L, n, n_t, n_x = vals.shape
        idx = np.indices((L, n_t, n_x, n)).reshape(4, -1)
        flat = np.transpose(vals, (0, 2, 3, 1)).reshape(-1)
        cols = [idx[1], idx[2], idx[3]]
        names = ["t_index", "x_index", "component"]
        if lam_axis:
            cols.insert(0, idx[0])
            names.insert(0, "lambda_index")
        lines = [f"# perihyp {__version__}", f"# config_sha256 {self.meta['config_sha256']}",
                 f"# grid n_t={n_t} n_x={n_x}", f"# command {self.command}"]
        for k, v in (extra or {}).items():
            lines.append(f"# {k} {v}")
        lines.append(",".join(names + ["value"]))
        ints = np.stack(cols, axis=1)
        body = [",".join(map(str, row)) + f",{v:.17g}" for row, v in zip(ints.tolist(), flat.tolist())]
        with open(self._path(name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines + body) + "\n")

    def json(self, name: str, payload: dict):
        doc = {"meta": dict(self.meta), **payload}
        with open(self._path(name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n")


def _fmt(x) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------- commands

def _status_code(statuses) -> int:
    statuses = list(statuses)
    if all(s == "converged" for s in statuses):
        return EXIT_OK
    if any(s == "resonance" for s in statuses):
        return EXIT_RESONANCE
    return EXIT_NOCONV


def _exact_error(p, u: Field, lam: float):
    if getattr(p, "exact", None) is None:
        return None
    T, X = u.grid.mesh()
    ex = np.asarray(p.exact(T, X, lam), dtype=float).reshape(u.values.shape)
    return float(np.abs(u.values - ex).max())


def _first_order_only(p, cmd):
    if isinstance(p, WaveProblem):
        raise ConfigError(f"{cmd}: needs a first-order problem (use wave-solve for wave problems)")


def _lam_grid(cfg: RunConfig, cmd: str) -> np.ndarray:
    if cfg.lam_range is None:
        raise ConfigError(f"{cmd}: lambda_range is required")
    start, stop, steps = cfg.lam_range
    return np.array([start]) if start == stop else np.linspace(start, stop, steps)


def cmd_solve(cfg, p, out: Writer) -> int:
    _first_order_only(p, "solve")
    u0 = seed_field(cfg, p.n)
    u, rep = quasi_newton(p, cfg.lam, u0, cfg.tol, cfg.max_iter)
    payload = {"lambda": cfg.lam, "report": rep.to_dict(), "exact_error": _exact_error(p, u, cfg.lam)}
    if rep.converged:
        out.field("solution.csv", u.values, {"lambda": _fmt(cfg.lam)})
    out.json("report.json", payload)
    return _status_code([rep.status])


def cmd_wave_solve(cfg, p, out: Writer) -> int:
    if not isinstance(p, WaveProblem):
        raise ConfigError("wave-solve: needs a wave problem")
    u_init = None
    if cfg.u_seed is not None:
        u_init = seed_field(cfg, 1)
    u, rep = wave_solve(p, cfg.lam, cfg.tol, cfg.grid, u_init, cfg.max_iter)
    payload = {"lambda": cfg.lam, "report": rep.to_dict(), "exact_error": _exact_error(p, u, cfg.lam)}
    if rep.converged:
        out.field("solution.csv", u.values, {"lambda": _fmt(cfg.lam)})
        out.field("invariants.csv", rep.extra["state"].v.values, {"lambda": _fmt(cfg.lam)})
    out.json("report.json", payload)
    return _status_code([rep.status])


def _family(cfg, p, lams):
    if isinstance(p, WaveProblem):
        fo = as_first_order(p)
        seed = (reduce(p, seed_field(cfg, 1), cfg.seed_lambda) if cfg.u_seed is not None
                else Field.zeros(cfg.grid, 2))
        return fo, continuation(fo, lams, seed, cfg.seed_lambda, cfg.tol, cfg.max_iter)
    return p, continuation(p, lams, seed_field(cfg, p.n), cfg.seed_lambda, cfg.tol, cfg.max_iter)


def cmd_continue(cfg, p, out: Writer) -> int:
    lams = _lam_grid(cfg, "continue")
    _, fam = _family(cfg, p, lams)
    rows = []
    for lam, f, rep in zip(fam.lams, fam.fields, fam.reports):
        row = {"lambda": float(lam), "report": rep.to_dict()}
        if f is not None:
            row["exact_error"] = None if isinstance(p, WaveProblem) else _exact_error(p, f, lam)
        rows.append(row)
    good = [i for i, f in enumerate(fam.fields) if f is not None]
    if good:
        vals = np.stack([fam.fields[i].values for i in good])
        out.field("family.csv", vals, {"lambdas": " ".join(_fmt(fam.lams[i]) for i in good)},
                  lam_axis=True)
    out.json("family.json", {"lambdas": fam.lams, "seed_index": fam.seed_index, "solves": rows})
    return _status_code(r.status for r in fam.reports)


def cmd_scan(cfg, p, out: Writer) -> int:
    lams = _lam_grid(cfg, "scan-resonance")
    fo = as_first_order(p) if isinstance(p, WaveProblem) else p
    u0 = Field.zeros(cfg.grid, fo.n) if (cfg.u_seed is None or isinstance(p, WaveProblem)) \
        else seed_field(cfg, fo.n)
    dense = cfg.dense and cfg.n_t <= COERCIVITY_GRID and cfg.n_x <= COERCIVITY_GRID
    tab = resonance_scan(fo, u0, (lams[0], lams[-1]), len(lams), refine=cfg.refine,
                         dense=dense, workers=worker_count())
    out.json("scan.json", {"table": tab.to_dict(), "resonant_lambdas": tab.flagged("resonant")})
    return EXIT_OK


def cmd_probe(cfg, p, out: Writer) -> int:
    center = cfg.lam if cfg.center is None else cfg.center
    hw = _stencil_half(cfg.order)
    lams = center + cfg.step * np.arange(-4 * hw, 4 * hw + 1)
    fo, fam = _family(cfg, p, lams)
    statuses = [r.status for r in fam.reports]
    payload = {"lambdas": lams, "statuses": statuses}
    code = _status_code(statuses)
    if code == EXIT_OK:
        res = smoothness_probe(fam, cfg.order, center)
        payload.update({"lambda_center": res["lambda_center"], "h": res["h"],
                        "richardson": res["richardson"],
                        "derivatives": {k: {"norm0": d["norm0"], "norm1": d["norm1"]}
                                        for k, d in res["derivatives"].items()}})
        for k, d in res["derivatives"].items():
            out.field(f"derivative_{k}.csv", d["field"].values, {"lambda": _fmt(res["lambda_center"])})
    out.json("probe.json", payload)
    return code


def cmd_diagnose(cfg, p, out: Writer) -> int:
    lam = cfg.lam
    payload = {"lambda": lam}
    payload["derivative_consistency"] = derivative_consistency(p)
    lo = min(lam, cfg.seed_lambda, -0.5)
    hi = max(lam, cfg.seed_lambda, 0.5)
    payload["validation"] = validate(p, (lo, hi)).to_dict()
    if isinstance(p, WaveProblem):
        u_init = seed_field(cfg, 1) if cfg.u_seed is not None else None
        u, rep = wave_solve(p, lam, cfg.tol, cfg.grid, u_init, cfg.max_iter)
        payload["reference_solve"] = rep.to_dict()
        u_ref = u if rep.converged else (u_init or Field.zeros(cfg.grid, 1))
        R0, S0 = wave_R0S0(p, u_ref, lam)
        payload["wave_R0"] = {"min": float(R0.min()), "max": float(R0.max())}
        payload["wave_S0"] = {"min": float(S0.min()), "max": float(S0.max())}
        try:
            payload["telegraph"] = telegraph_check(p, lam)
        except ValueError as exc:
            payload["telegraph"] = None
            payload["telegraph_note"] = str(exc)
        fo = as_first_order(p)
        v_ref = rep.extra["state"].v if rep.converged else Field.zeros(cfg.grid, 2)
    else:
        fo = p
        u0 = seed_field(cfg, p.n)
        v, rep = quasi_newton(p, lam, u0, cfg.tol, cfg.max_iter)
        payload["reference_solve"] = rep.to_dict()
        v_ref = v if rep.converged else u0
    payload["trace_condition"] = trace_condition(fo, lam, v_ref).to_dict()
    if fo.coupling.kind == "reflection" and fo.n >= 2:
        R, S = nonresonance_RS(fo, v_ref, lam)
        payload["R"], payload["S"] = R, S
        if fo.n == 2 and fo.m == 1:
            R0, S0 = nonresonance_R0S0(fo, v_ref, lam)
            shift, gain = r0_from_coefficients(fo, v_ref, lam)
            R0s, _ = nonresonance_R0S0(fo, v_ref, lam, shift=shift)
            payload["R0"] = {"min": float(R0.min()), "max": float(R0.max())}
            payload["S0"] = {"min": float(S0.min()), "max": float(S0.max())}
            payload["R0_two_way_difference"] = float(np.abs(gain - R0s).max())
    payload["bc_contraction"] = bc_contraction_check(fo, v_ref, lam)
    if cfg.n_t <= COERCIVITY_GRID and cfg.n_x <= COERCIVITY_GRID:
        payload["coercivity"] = coercivity(fo, lam, v_ref)
    else:
        payload["coercivity"] = None
        payload["coercivity_note"] = f"dense surrogate needs a grid of at most {COERCIVITY_GRID}x{COERCIVITY_GRID}"
    payload["reference_norm1"] = norm_l(v_ref, 1)
    out.json("diagnose.json", payload)
    return EXIT_OK


HANDLERS = {"solve": cmd_solve, "wave-solve": cmd_wave_solve, "continue": cmd_continue,
            "scan-resonance": cmd_scan, "probe-smoothness": cmd_probe, "diagnose": cmd_diagnose}


def run(cfg: RunConfig, command: str | None = None) -> int:
    """Execute a validated config; returns the process exit code."""
    command = command or cfg.command
    if command is None:
        raise ConfigError("command: none given on the command line or in the config")
    if cfg.command is not None and cfg.command != command:
        raise ConfigError(f"command: config says {cfg.command!r} but {command!r} was requested")
    cfg.command = command
    p = build_problem(cfg.problem)
    out = Writer(cfg, command)
    try:
        return HANDLERS[command](cfg, p, out)
    except ResonanceError as exc:
        out.json("error.json", {"error": "resonance", "message": str(exc)})
        return EXIT_RESONANCE


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="perihyp", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help="output directory (overrides config 'output')")
    ap.add_argument("--nt", type=int, help="time nodes (overrides config)")
    ap.add_argument("--nx", type=int, help="space nodes (overrides config)")
    ap.add_argument("--tol", type=float, help="outer tolerance (overrides config)")
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config, {"output": args.out, "n_t": args.nt, "n_x": args.nx,
                                        "tol": args.tol})
        return run(cfg, args.command)
    except ConfigError as exc:
        print(f"perihyp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PerihypError as exc:
        print(f"perihyp: {exc}", file=sys.stderr)
        return EXIT_NOCONV


if __name__ == "__main__":
    sys.exit(main())

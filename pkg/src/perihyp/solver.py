"""Frozen-Jacobian quasi-Newton iteration, continuation in lambda and smoothness probes."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, gmres

from .characteristics import QuadratureRule
from .errors import ResonanceError, StallError
from .field import Field, norm_l
from .operators import get_frame
from .tracesolve import TraceSystem

DENSE_GRID = 16
DENSE_CAP = 4096
BASIN_NOTE = ("convergence certifies a discrete solution near the seed; uniqueness is only "
              "known in a neighbourhood of the reference solution")


def worker_count() -> int:
    """Worker cap from PERIHYP_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("PERIHYP_THREADS", "1")))
    except ValueError:
        return 1


class LinearizedOperator:
    """I - calC - calD at (lam, u0) with cached trace factorization and dense fallback."""

    def __init__(self, p, lam: float, u0: Field, rule: QuadratureRule = QuadratureRule(),
                 trace_method: str = "dense", max_inner: int = 200):
        self.p = p
        self.lam = float(lam)
        self.u0 = u0
        self.frame = get_frame(p, lam, u0, rule)
        self.traces = TraceSystem(self.frame, method=trace_method)
        self.traces.check()
        self.max_inner = max_inner
        fr = self.frame
        self.has_D = bool(np.any(fr.offdiag)) or fr.auxjac is not None
        self._dense = None
        self._dense_lu = None

    @property
    def shape(self):
        return (self.p.n,) + self.frame.grid.shape

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.frame.linear(values)

    def assemble(self, batch: int = 256) -> np.ndarray:
        """Dense matrix of I - calC - calD (C-order flat index)."""
        if self._dense is None:
            self._dense = self.frame.dense(batch)
        return self._dense

    def _solve_dense(self, r):
        if self._dense_lu is None:
            self._dense_lu = sla.lu_factor(self.assemble())
        return sla.lu_solve(self._dense_lu, r.ravel()).reshape(self.shape)

    def solve(self, r: np.ndarray, tol: float | None = None):
        """w with |(I - calC - calD) w - r|_0 <= tol; returns (w, stats)."""
        rn = float(np.abs(r).max())
        if tol is None:
            tol = 1e-11 * rn
        tol = max(tol, 1e-15 * max(rn, 1e-300))
        if rn == 0.0:
            return np.zeros_like(r), {"method": "zero", "iterations": 0, "residual": 0.0}
        if not self.has_D:
            w = self.traces.solve(r)
            return w, {"method": "trace", "iterations": 0, "residual": None}
        g = self.frame.grid
        if g.n_t <= DENSE_GRID and g.n_x <= DENSE_GRID:
            w = self._solve_dense(r)
            res = float(np.abs(self.apply(w) - r).max())
            return w, {"method": "dense", "iterations": 0, "residual": res}
        w, stats = self._stationary(r, tol)
        if stats["converged"]:
            return w, stats
        w, st2 = self._krylov(r, tol, w)
        st2["stationary_iterations"] = stats["iterations"]
        if st2["converged"]:
            return w, st2
        if self.size <= DENSE_CAP:
            w = self._solve_dense(r)
            res = float(np.abs(self.apply(w) - r).max())
            return w, {"method": "dense", "iterations": stats["iterations"], "residual": res}
        raise StallError(f"linear solve stalled at residual {st2['residual']:.3e} (tol {tol:.3e})")

    def _stationary(self, r, tol):
        """w <- (I - calC)^{-1} (calD w + r); residual of the new iterate is calD(w_old - w_new)."""
        T, calD = self.traces.solve, self.frame.calD
        w = T(r)
        Dw = calD(w)
        hist = []
        for k in range(1, self.max_inner + 1):
            w_new = T(Dw + r)
            Dw_new = calD(w_new)
            res = float(np.abs(Dw - Dw_new).max())
            w, Dw = w_new, Dw_new
            hist.append(res)
            if res <= tol:
                return w, {"method": "stationary", "iterations": k, "residual": res, "converged": True}
            if not np.isfinite(res) or (k > 10 and res > 0.999 * hist[-11]):
                break
        return w, {"method": "stationary", "iterations": len(hist), "residual": hist[-1],
                   "converged": False}

    def _krylov(self, r, tol, w0):
        """GMRES on the (I - calC)-preconditioned system."""
        shape, N = self.shape, self.size
        T, calD = self.traces.solve, self.frame.calD
        op = LinearOperator((N, N), dtype=float,
                            matvec=lambda x: x - T(calD(x.reshape(shape))).ravel())
        b = T(r).ravel()
        count = [0]

        def cb(_):
            count[0] += 1

        x, _ = gmres(op, b, x0=w0.ravel(), rtol=0.0, atol=0.1 * tol, restart=60, maxiter=20,
                     callback=cb, callback_type="pr_norm")
        w = x.reshape(shape)
        res = float(np.abs(self.apply(w) - r).max())
        return w, {"method": "gmres", "iterations": count[0], "residual": res, "converged": res <= tol}


def solve_linearized(p, lam, u0: Field, r: Field, tol: float | None = None) -> Field:
    """w with (I - calC(lam) - calD(lam)) w = r, frozen at u0."""
    lin = LinearizedOperator(p, lam, u0)
    w, _ = lin.solve(r.values, tol)
    return Field(r.grid, w)


# ------------------------------------------------------------------ reports

@dataclass
class SolveReport:
    lam: float
    status: str
    iterates: list = dc_field(default_factory=list)
    contraction: list = dc_field(default_factory=list)
    final_residual: float = float("nan")
    linear_solver_stats: list = dc_field(default_factory=list)
    tol: float = 1e-8
    update_norms: list = dc_field(default_factory=list)
    distance_from_seed: float = 0.0
    trace: dict = dc_field(default_factory=dict)
    message: str = ""
    basin_caveat: str = BASIN_NOTE
    history: list = dc_field(default_factory=list, repr=False)
    extra: dict = dc_field(default_factory=dict, repr=False)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def iterations(self) -> int:
        return max(0, len(self.iterates) - 1)

    def to_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k not in ("history", "extra")}
        d["iterations"] = self.iterations
        d.update({k: v for k, v in self.extra.items() if isinstance(v, (int, float, str))})
        return jsonable(d)


def jsonable(obj):
    """Plain-JSON view: numpy scalars and arrays converted, non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def quasi_newton(p, lam: float, u_init: Field, tol: float = 1e-8, max_iter: int = 50,
                 rule: QuadratureRule = QuadratureRule(), keep_iterates: bool = False,
                 lin: LinearizedOperator | None = None):
    """u <- u - (I - calC - calD)^{-1} F(lam, u) with the Jacobian frozen at u_init.

    Returns (field, SolveReport). Status is one of converged, stalled,
    resonance, max-iter, diverged.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lam = float(lam)
    rep = SolveReport(lam=lam, status="max-iter", tol=tol)
    try:
        if lin is None:
            lin = LinearizedOperator(p, lam, u_init, rule)
    except ResonanceError as exc:
        rep.status = "resonance"
        rep.message = str(exc)
        rep.trace = {"sigma_min": exc.sigma_min, "sigma_max": exc.norm}
        return u_init, rep
    ts = lin.traces
    rep.trace = {"kind": ts.kind, "size": ts.size, "sigma_min": ts.sigma_min,
                 "sigma_max": ts.sigma_max}
    frame = lin.frame
    u = u_init
    F = frame.residual(u)
    rn = F.sup()
    rep.iterates.append(rn)
    if keep_iterates:
        rep.history.append(u)
    bad = 0
    for _ in range(max_iter):
        if rn <= tol:
            rep.status = "converged"
            break
        try:
            w, stats = lin.solve(F.values, 1e-2 * tol)
        except StallError as exc:
            rep.status = "stalled"
            rep.message = str(exc)
            break
        rep.linear_solver_stats.append(jsonable(stats))
        u = Field(u.grid, u.values - w)
        rep.update_norms.append(float(np.abs(w).max()))
        if keep_iterates:
            rep.history.append(u)
        F = frame.residual(u)
        new = F.sup()
        ratio = new / rn if rn > 0 else 0.0
        rep.contraction.append(ratio)
        rep.iterates.append(new)
        rn = new
        bad = bad + 1 if ratio >= 1.0 else 0
        if bad >= 5:
            rep.status = "diverged" if rn > 100 * tol else "stalled"
            break
        if not np.isfinite(rn):
            rep.status = "diverged"
            break
    else:
        rep.status = "converged" if rn <= tol else "max-iter"
    rep.final_residual = rn
    rep.distance_from_seed = float(np.abs(u.values - u_init.values).max())
    return u, rep


# ------------------------------------------------------------- continuation

@dataclass
class SolutionFamily:
    lams: np.ndarray
    fields: list
    reports: list
    seed_index: int = 0

    def __len__(self):
        return len(self.lams)

    @property
    def grid(self):
        for f in self.fields:
            if f is not None:
                return f.grid
        return None

    def all_converged(self) -> bool:
        return all(r.converged for r in self.reports)


def continuation(p, lam_grid, u_seed: Field | None = None, seed_lambda: float = 0.0,
                 tol: float = 1e-8, max_iter: int = 50, allow_failures: bool = False,
                 grid=None, rule: QuadratureRule = QuadratureRule(), workers: int | None = None,
                 solver=None) -> SolutionFamily:
    """Solve on every lam of a sorted grid, marching outward from the seed with warm starts.

    The seed is the grid point closest to seed_lambda. A failed solve stops the
    march in its direction unless allow_failures is set.
    """
    lams = np.asarray(lam_grid, dtype=float)
    if lams.ndim != 1 or lams.size == 0:
        raise ValueError("lam_grid must be a nonempty 1-d sequence")
    if np.any(np.diff(lams) <= 0):
        raise ValueError("lam_grid must be strictly increasing")
    if u_seed is None:
        if grid is None:
            raise ValueError("either u_seed or grid is required")
        u_seed = Field.zeros(grid, p.n if hasattr(p, "n") else 1)
    solve = solver or (lambda lam, u: quasi_newton(p, lam, u, tol, max_iter, rule))
    i0 = int(np.argmin(np.abs(lams - seed_lambda)))
    fields = [None] * lams.size
    reports = [None] * lams.size
    u0, rep0 = solve(lams[i0], u_seed)
    fields[i0], reports[i0] = (u0 if rep0.converged else None), rep0

    def march(indices):
        u = u0
        ok = rep0.converged
        for i in indices:
            if not ok and not allow_failures:
                reports[i] = SolveReport(lam=float(lams[i]), status="skipped",
                                         message="march stopped after an earlier failure")
                continue
            ui, rep = solve(lams[i], u)
            reports[i] = rep
            if rep.converged:
                fields[i] = ui
                u = ui
                ok = True
            else:
                ok = False

    up = list(range(i0 + 1, lams.size))
    down = list(range(i0 - 1, -1, -1))
    nw = worker_count() if workers is None else workers
    if nw > 1 and up and down:
        with ThreadPoolExecutor(max_workers=2) as ex:
            list(ex.map(march, [up, down]))
    else:
        march(up)
        march(down)
    return SolutionFamily(lams=lams, fields=fields, reports=reports, seed_index=i0)


# -------------------------------------------------------- smoothness probes

def central_weights(order: int, half_width: int) -> np.ndarray:
    """Central finite-difference weights on offsets -w..w (unit spacing) for d^order/dx^order."""
    offs = np.arange(-half_width, half_width + 1, dtype=float)
    V = np.vander(offs, increasing=True).T
    rhs = np.zeros(offs.size)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(V, rhs)


def _stencil_half(order: int) -> int:
    return (order + 1) // 2


def smoothness_probe(fam: SolutionFamily, order: int = 1, center: float | None = None) -> dict:
    """Central divided differences of lam -> u(lam) up to `order`, with Richardson order estimates.

    Differences use the minimal second-order central stencil at spacings h, 2h
    and 4h around the centre (default: the middle of the grid); the observed
    order is log2(|D(4h) - D(2h)| / |D(2h) - D(h)|) in the sup norm.
    """
    order = int(order)
    lams = fam.lams
    if order < 1:
        raise ValueError("order must be >= 1")
    if lams.size < 2 * order + 1:
        raise ValueError(f"need at least {2 * order + 1} points for order {order}")
    steps = np.diff(lams)
    h = float(steps.mean())
    if np.abs(steps - h).max() > 1e-9 * max(abs(h), 1e-300):
        raise ValueError("lambda grid must be uniform")
    if any(f is None for f in fam.fields):
        raise ValueError("family has failed solves")
    ic = lams.size // 2 if center is None else int(np.argmin(np.abs(lams - center)))
    vals = np.stack([f.values for f in fam.fields])
    grid = fam.grid
    out = {"lambda_center": float(lams[ic]), "h": h, "derivatives": {}, "richardson": {}}
    for k in range(1, order + 1):
        hw = _stencil_half(k)
        wts = central_weights(k, hw)
        ests = {}
        for scale in (1, 2, 4):
            lo, hi = ic - scale * hw, ic + scale * hw
            if lo < 0 or hi >= lams.size:
                break
            idx = ic + scale * np.arange(-hw, hw + 1)
            ests[scale] = np.tensordot(wts, vals[idx], axes=1) / (scale * h) ** k
        d1 = Field(grid, ests[1])
        out["derivatives"][k] = {"field": d1, "norm0": d1.sup(),
                                 "norm1": norm_l(d1, 1) if grid.n_t >= 6 else float("nan")}
        if 4 in ests:
            num = np.abs(ests[4] - ests[2]).max()
            den = np.abs(ests[2] - ests[1]).max()
            out["richardson"][k] = float(np.log2(num / den)) if den > 0 and num > 0 else float("nan")
    return out


# ---------------------------------------------------------- fiber monitor

def monitor_fiber(r, s, c: float, rtol: float = 1e-12) -> dict:
    """Check r[n+1] <= c r[n] + s[n] and evaluate the unrolled bound on r[n].

    bound[n] = min_l ( c^n r[0] + s_sup c^(n-1) sum_{k<=l} c^(-k)
                       + max_{l<k<n} s[k] / (1 - c) ),
    which dominates r[n] whenever the recursion holds. The limit is predicted
    to be zero when the tail of s vanishes.
    """
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    if not 0.0 <= c < 1.0:
        raise ValueError("c must lie in [0, 1)")
    if s.size < r.size - 1:
        raise ValueError("need one perturbation per step")
    scale = max(float(np.abs(r).max(initial=0.0)), float(np.abs(s).max(initial=0.0)), 1e-300)
    rec = r[1:] <= c * r[:-1] + s[:r.size - 1] + rtol * scale
    violations = [int(i) for i in np.nonzero(~rec)[0]]
    s_sup = float(s.max(initial=0.0))
    bound = [float(r[0])] if r.size else []
    for n in range(1, r.size):
        best = np.inf
        for l in range(-1, n):
            head = c ** n * r[0]
            if l >= 0:
                head += s_sup * sum(c ** (n - 1 - k) for k in range(l + 1))
            tail = s[l + 1:n].max(initial=0.0) / (1 - c)
            best = min(best, head + tail)
        bound.append(float(best))
    bound = np.array(bound)
    dominated = bool(np.all(r <= bound + rtol * scale))
    tail = s[len(s) // 2:] if s.size else s
    limit_zero = bool(tail.size == 0 or tail.max() <= 1e-12 * max(scale, 1.0))
    return {"satisfied": bool(not violations), "violations": violations,
            "bound": bound.tolist(), "dominated": dominated,
            "predicted_limit_zero": limit_zero,
            "asymptotic_bound": float(tail.max(initial=0.0) / (1 - c))}


def fiber_instrumentation(p, lam: float, u_init: Field, h: float = 1e-3, tol: float = 1e-10,
                          max_iter: int = 30, eps: float = 1e-6) -> dict:
    """Derivative iterates of the quasi-Newton map and their perturbation terms.

    With G_l(u) = u - J_l^{-1} F_l(u) the lambda-derivatives v_n of the
    iterates obey v_{n+1} = A_n v_n + w_n, A_n = d_u G(u_n), w_n = d_l G(u_n).
    Returns r_n = |v_n - v|, s_n = |(A_n - A) v| + |w_n - w| and the
    measured contraction c = max_n |A_n (v_n - v)| / |v_n - v|, all evaluated
    with central differences.
    """
    lins = {}
    runs = {}
    for mu in (lam - h, lam, lam + h):
        lins[mu] = LinearizedOperator(p, mu, u_init)
        runs[mu] = quasi_newton(p, mu, u_init, tol, max_iter, keep_iterates=True, lin=lins[mu])[1]
    lo, mid, hi = (runs[m].history for m in (lam - h, lam, lam + h))
    n = max(len(lo), len(hi), len(mid))
    pad = lambda seq: seq + [seq[-1]] * (n - len(seq))
    lo, mid, hi = pad(lo), pad(mid), pad(hi)

    def G(mu, u):
        lin = lins[mu]
        F = lin.frame.residual(u).values
        w, _ = lin.solve(F, 1e-14 * max(1.0, np.abs(F).max()))
        return u.values - w

    v_seq = [(b.values - a.values) / (2 * h) for a, b in zip(lo, hi)]
    v = v_seq[-1]
    grid = u_init.grid
    uhat = mid[-1]
    A_v = (G(lam, uhat + eps * Field(grid, v)) - G(lam, uhat - eps * Field(grid, v))) / (2 * eps)
    w_lim = (G(lam + h, uhat) - G(lam - h, uhat)) / (2 * h)
    r, s, ratios = [], [], []
    for k in range(n):
        un = mid[k]
        e = v_seq[k] - v
        r.append(float(np.abs(e).max()))
        An_v = (G(lam, un + eps * Field(grid, v)) - G(lam, un - eps * Field(grid, v))) / (2 * eps)
        wn = (G(lam + h, un) - G(lam - h, un)) / (2 * h)
        s.append(float(np.abs(An_v - A_v).max() + np.abs(wn - w_lim).max()))
        if r[-1] > 0:
            ef = Field(grid, e)
            scale_e = eps / max(r[-1], 1e-300)
            Ae = (G(lam, un + scale_e * ef) - G(lam, un - scale_e * ef)) / (2 * eps)
            ratios.append(float(np.abs(Ae).max()))
    c = max(ratios) if ratios else 0.0
    return {"r": r, "s": s, "c": c, "reports": runs}

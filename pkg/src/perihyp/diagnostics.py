"""Nonresonance and well-posedness indicators.

Everything here is computed from samples: coupling bounds R and S, their
time profiles for two-component systems, the wave-equation profiles, the
sufficient row-sum conditions for |calC| < 1, a dense coercivity surrogate
for tiny grids, parameter scans and finite-difference checks of
user-supplied partial derivatives.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import minimize_scalar

from .characteristics import QuadratureRule, SpeedProfile, speed_profile
from .errors import GridTooLargeError
from .field import Field, sample_shifted, shift_samples, space_derivative, time_derivative
from .operators import get_frame
from .problem import FirstOrderProblem, WaveProblem
from .tracesolve import RESONANCE_FLOOR, TraceSystem

COERCIVITY_GRID = 24
KERNEL_RTOL = 1e-8
RESONANT_SIGMA = 1e-6
RS_WARNING = 0.95


# ------------------------------------------------------------- sampling

def _aux_field(p, u0: Field, lam: float):
    return p.aux_map(u0, lam) if p.aux_map is not None else None


def diagonal_damping(p, lam: float, u0: Field, theta, x) -> np.ndarray:
    """d_{u_j} b_j on the reference field u0 at times t_i + theta[m], x[m]; shape (n, n_t, M)."""
    x = np.asarray(x, dtype=float).ravel()
    theta = np.broadcast_to(np.asarray(theta, float), x.shape)
    times = u0.grid.t[:, None] + theta[None, :]
    X = np.broadcast_to(x[None, :], times.shape)
    U = sample_shifted(u0.values, theta, x)
    aux = _aux_field(p, u0, lam)
    A = sample_shifted(aux.values, theta, x) if aux is not None else None
    J = p.eval_jacobian(times, X, lam, U, A)
    return np.stack([J[j, j] for j in range(p.n)])


def _gauss(rule: QuadratureRule):
    return rule.nodes_weights(0.0, 1.0)


def _require_reflection(p):
    if p.coupling.kind != "reflection":
        raise ValueError("this indicator is defined for reflection couplings")


# -------------------------------------------------------------- R and S

def nonresonance_RS(p: FirstOrderProblem, u0: Field, lam: float = 0.0,
                    rule: QuadratureRule = QuadratureRule()):
    """Coupling bounds (R, S) for a reflection coupling.

    The inner maxima over (t, s) are taken over the time nodes of u0's grid,
    the x integral by composite Gauss quadrature. An empty family gives 0.
    """
    _require_reflection(p)
    if p.n < 2:
        raise ValueError("R and S need at least two components")
    n, m = p.n, p.m
    t = u0.grid.t
    z, w = _gauss(rule)
    b0 = diagonal_damping(p, lam, u0, 0.0, z)                          # (n, n_t, Z)
    ratio = b0 / p.eval_speed(z, lam)[:, None, :]
    hi, lo = ratio.max(axis=1), ratio.min(axis=1)                       # (n, Z)
    rmax = np.abs(p.coupling.r(t, lam)).max(axis=-1)                    # (n, n)

    def bound(rows, mids, ends, sign):
        best = 0.0
        for j in rows:
            tot = 0.0
            for k in mids:
                expo = (hi[k] - lo[j]) if sign > 0 else (hi[j] - lo[k])
                growth = np.exp(np.dot(w, expo))
                tot += sum(rmax[j, k] * rmax[k, l] for l in ends) * growth
            best = max(best, tot)
        return float(best)

    R = bound(range(m), range(m, n), range(m), +1)
    S = bound(range(m, n), range(m), range(m, n), -1)
    return R, S


def _check_two(p):
    _require_reflection(p)
    if p.n != 2 or p.m != 1:
        raise ValueError(f"time profiles need n=2, m=1 (got n={p.n}, m={p.m})")


def nonresonance_R0S0(p: FirstOrderProblem, u0: Field, lam: float = 0.0, shift: float = 0.0,
                      rule: QuadratureRule = QuadratureRule()):
    """Round-trip gain profiles (R0(t), S0(t)) at the times t_i + shift.

    R0 follows a curve that leaves x=0 along family 2 and returns along
    family 1 started at the same time; S0 does the same from x=1 backwards.
    Two-component reflection problems only.
    """
    _check_two(p)
    t = u0.grid.t + shift
    z, w = _gauss(rule)
    th1 = speed_profile(p, 0, lam, rule)
    th2 = speed_profile(p, 1, lam, rule)
    T1z, T2z = th1.theta(z), th2.theta(z)
    T1, T2 = float(th1.theta(1.0)), float(th2.theta(1.0))
    a = p.eval_speed(z, lam)

    def gain(off1, off2):
        b1 = diagonal_damping(p, lam, u0, shift + off1, z)[0] / a[0]
        b2 = diagonal_damping(p, lam, u0, shift + off2, z)[1] / a[1]
        return np.exp((b2 - b1) @ w)

    def rr(tt, j, k):
        return p.coupling.r(np.asarray(tt, float), lam)[j, k]

    R0 = np.abs(rr(t, 0, 1) * rr(t + T2, 1, 0)) * gain(T1z, T2z)
    S0 = np.abs(rr(t, 1, 0) * rr(t - T1, 0, 1)) * gain(T1z - T1, T2z - T2)
    return R0, S0


def r0_from_coefficients(p: FirstOrderProblem, u0: Field, lam: float = 0.0,
                         rule: QuadratureRule = QuadratureRule()):
    """Round-trip gain from the damped coupling coefficients of calC.

    Returns (shift, gain) with gain(t_i) = |c12(t_i, 1) c21(t_i - T1, 0)| and
    shift = -T1, T1 the travel time of family 1 across [0, 1]; the result
    should equal R0 at the times t_i + shift.
    """
    _check_two(p)
    fr = get_frame(p, lam, u0, rule)
    c12 = fr.coefC[0, 1, 0, :, -1]
    c21 = fr.coefC[1, 0, 1, :, 0]
    T1 = float(fr.theta_x[0, -1])
    gain = np.abs(c12 * shift_samples(c21[:, None], -T1)[:, 0])
    return -T1, gain


# ------------------------------------------------------------ wave forms

def _wave_profile(wp: WaveProblem, lam: float, rule: QuadratureRule) -> SpeedProfile:
    return SpeedProfile(lambda x, l: np.asarray(wp.eval_a(x, l))[None], 0, lam, rule)


def wave_R0S0(wp: WaveProblem, u0: Field, lam: float = 0.0, shift: float = 0.0,
              rule: QuadratureRule = QuadratureRule()):
    """Profiles (R0(t), S0(t)) at t_i + shift of a wave problem linearized at the scalar field u0."""
    if u0.n != 1:
        raise ValueError("u0 must be a scalar field")
    z, w = _gauss(rule)
    prof = _wave_profile(wp, lam, rule)
    Th = prof.theta(z)
    T = float(prof.theta(1.0))
    a = wp.eval_a(z, lam)
    stacked = np.concatenate([u0.values, time_derivative(u0, 1).values,
                              space_derivative(u0, 1).values])

    def coeffs(offset):
        theta = shift + offset
        times = u0.grid.t[:, None] + theta[None, :]
        X = np.broadcast_to(z[None, :], times.shape)
        u, ut, ux = sample_shifted(stacked, theta, z)
        return wp.eval_b("d5b", times, X, lam, u, ut, ux), wp.eval_b("d6b", times, X, lam, u, ut, ux)

    def profile(minus, plus):
        b1m, b2m = coeffs(minus)
        b1p, b2p = coeffs(plus)
        return ((b1m + b1p) / a + (b2m - b2p) / a ** 2) @ w

    R0 = profile(-Th, Th)
    S0 = profile(T - Th, Th - T)
    return R0, S0


def telegraph_check(wp: WaveProblem, lam: float = 0.0, samples: int = 64, seed: int = 0,
                    rtol: float = 1e-9, rule: QuadratureRule = QuadratureRule()) -> float:
    """2 int_0^1 a1/a dx for b = a1(x) u_t + a2(x) u_x + g(t, x, u).

    Raises ValueError if d5b or d6b depend on anything but x.
    """
    rng = np.random.default_rng(seed)
    z, w = _gauss(rule)
    base = np.zeros_like(z)
    ref5 = wp.eval_b("d5b", base, z, lam, base, base, base)
    ref6 = wp.eval_b("d6b", base, z, lam, base, base, base)
    for _ in range(samples // 8 or 1):
        tt = rng.uniform(0, 2 * np.pi, z.shape)
        uu, pp, qq = rng.uniform(-1, 1, (3,) + z.shape)
        for name, ref in (("d5b", ref5), ("d6b", ref6)):
            got = wp.eval_b(name, tt, z, lam, uu, pp, qq)
            if np.abs(got - ref).max() > rtol * max(1.0, np.abs(ref).max()):
                raise ValueError(f"not a telegraph equation: {name} depends on (t, u, u_t, u_x)")
    return float(2.0 * np.dot(w, ref5 / wp.eval_a(z, lam)))


# ------------------------------------------------- contraction conditions

def bc_contraction_check(p: FirstOrderProblem, u0: Field, lam: float = 0.0,
                         rule: QuadratureRule = QuadratureRule()) -> dict:
    """Sufficient conditions for |calC| < 1 in the sup norm.

    Two routes are reported: boundary row sums below 1 together with damping
    of the right sign along every family, or the damping-weighted row sums
    below 1. The check passes if either route holds.
    """
    n, m = p.n, p.m
    fr = get_frame(p, lam, u0, rule)
    M = np.abs(p.coupling.matrices(u0.grid.t, lam)).max(axis=-1)     # (n, n, 2)
    rows = M.sum(axis=(1, 2))
    ratio = fr.diag / fr.a_z[:, None, :]
    sign_vals, sign_ok, cmax = [], [], []
    for j in range(n):
        if j < m:
            v = float(ratio[j].min())
            sign_ok.append(v > 0)
        else:
            v = float(ratio[j].max())
            sign_ok.append(v < 0)
        sign_vals.append(v)
        s = fr.side_index[j]
        cmax.append(float(np.exp(fr.E_x[j][:, s:s + 1] - fr.E_x[j]).max()))
    weighted = rows * np.array(cmax)
    row_pass = bool(np.all(rows < 1))
    weighted_pass = bool(np.all(weighted < 1))
    sign_pass = bool(all(sign_ok))
    passed = weighted_pass or (row_pass and sign_pass)
    bad = [j for j in range(n) if weighted[j] >= 1 and not (rows[j] < 1 and sign_ok[j])]
    return {
        "row_sums": rows.tolist(),
        "row_sum_pass": row_pass,
        "damping_sign": sign_vals,
        "damping_sign_pass": sign_pass,
        "damping_max": cmax,
        "weighted_row_sums": weighted.tolist(),
        "weighted_pass": weighted_pass,
        "passed": passed,
        "witness_row": (bad[0] if bad else None) if not passed else None,
    }


# ---------------------------------------------------------- coercivity

def dense_operator(p, lam: float, u0: Field, max_grid: int = COERCIVITY_GRID,
                   rule: QuadratureRule = QuadratureRule()) -> np.ndarray:
    g = u0.grid
    if g.n_t > max_grid or g.n_x > max_grid:
        raise GridTooLargeError(f"dense assembly is limited to {max_grid}x{max_grid} grids "
                                f"(got {g.n_t}x{g.n_x})")
    return get_frame(p, lam, u0, rule).dense()


def coercivity(p, lam: float, u0: Field, max_grid: int = COERCIVITY_GRID,
               rule: QuadratureRule = QuadratureRule()) -> dict:
    """Smallest singular value and numerical kernel dimension of I - calC - calD."""
    A = dense_operator(p, lam, u0, max_grid, rule)
    sv = np.linalg.svd(A, compute_uv=False)
    return {
        "lam": float(lam),
        "sigma_min": float(sv[-1]),
        "sigma_max": float(sv[0]),
        "kernel_dim": int(np.sum(sv < KERNEL_RTOL * sv[0])),
        "size": int(A.shape[0]),
    }


# ------------------------------------------------------------ scanning

@dataclass
class ResonanceTable:
    """Rows sorted by lam; each row is a dict of indicators and a list of flags."""

    rows: list = dc_field(default_factory=list)
    thresholds: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.rows.sort(key=lambda r: r["lam"])

    @property
    def lams(self) -> np.ndarray:
        return np.array([r["lam"] for r in self.rows])

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if r.get(name) is None else r[name] for r in self.rows], float)

    def flagged(self, flag: str = "resonant") -> list:
        return [r["lam"] for r in self.rows if flag in r["flags"]]

    def to_dict(self) -> dict:
        return {"thresholds": dict(self.thresholds), "rows": [dict(r) for r in self.rows]}


def _scan_row(p, u0: Field, lam: float, rs: bool, dense: bool, rule, floor: float,
              refined: bool = False) -> dict:
    ts = TraceSystem(get_frame(p, lam, u0, rule))
    cond = ts.condition()
    row = {"lam": float(lam), "refined": refined}
    row.update({k: v for k, v in cond.to_dict().items() if k not in ("kind", "size")})
    R = S = None
    if rs and p.coupling.kind == "reflection" and p.n >= 2:
        R, S = nonresonance_RS(p, u0, lam, rule)
    row["R"], row["S"] = R, S
    flags = []
    if cond.sigma_min_nonzero < floor:
        flags.append("resonant")
    if cond.sigma_min < RESONANCE_FLOOR * max(cond.sigma_max, 1.0):
        flags.append("singular")
    if R is not None and min(R, S) >= RS_WARNING:
        flags.append("rs-warning")
    if dense:
        c = coercivity(p, lam, u0, rule=rule)
        row["coercivity"] = c["sigma_min"]
        row["kernel_dim"] = c["kernel_dim"]
        if c["kernel_dim"] > 0:
            flags.append("kernel")
    row["flags"] = flags
    return row


def resonance_scan(p, u0: Field, lam_range, steps: int, refine: bool = True,
                   refine_below: float = 0.05, max_refine: int = 64, rs: bool = True,
                   dense: bool = False, floor: float = RESONANT_SIGMA, workers: int = 1,
                   rule: QuadratureRule = QuadratureRule()) -> ResonanceTable:
    """Indicators over a uniform lam grid, with local minima of the nonzero-mode
    singular value refined by bounded scalar minimization.

    Flags: 'resonant' (nonzero-mode sigma_min below `floor`), 'singular'
    (full sigma_min below the relative floor), 'rs-warning' (R and S both at
    least 0.95) and 'kernel' (dense surrogate has a numerical kernel).
    """
    lo, hi = (float(lam_range[0]), float(lam_range[-1])) if np.ndim(lam_range) else (float(lam_range),) * 2
    if lo == hi:
        lams = np.array([lo])
    else:
        if steps < 2:
            raise ValueError("steps must be at least 2 for a nondegenerate range")
        lams = np.linspace(lo, hi, steps)

    def row(lam, refined=False):
        return _scan_row(p, u0, lam, rs, dense, rule, floor, refined)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = list(ex.map(row, lams))
    else:
        rows = [row(l) for l in lams]

    if refine and len(rows) >= 3:
        vals = np.array([r["sigma_min_nonzero"] for r in rows])
        cand = [i for i in range(len(vals))
                if vals[i] < refine_below
                and (i == 0 or vals[i] <= vals[i - 1]) and (i == len(vals) - 1 or vals[i] <= vals[i + 1])]
        cand = sorted(cand, key=lambda i: vals[i])[:max_refine]

        def objective(lam):
            return TraceSystem(get_frame(p, lam, u0, rule)).sigma_min_nonzero()

        def refine_one(i):
            a, b = lams[max(i - 1, 0)], lams[min(i + 1, len(lams) - 1)]
            res = minimize_scalar(objective, bounds=(a, b), method="bounded",
                                  options={"xatol": 1e-13, "maxiter": 200})
            if res.fun < vals[i]:
                return row(float(res.x), refined=True)
            return None

        if workers > 1:
            with ThreadPoolExecutor(workers) as ex:
                extra = list(ex.map(refine_one, sorted(cand)))
        else:
            extra = [refine_one(i) for i in sorted(cand)]
        rows += [r for r in extra if r is not None]
    return ResonanceTable(rows=rows, thresholds={
        "resonant_sigma": floor, "singular_rel": RESONANCE_FLOOR, "rs_warning": RS_WARNING,
        "kernel_rtol": KERNEL_RTOL})


# --------------------------------------------------- derivative checks

_STEP = np.finfo(float).eps ** (1.0 / 3.0)


def _fd_error(supplied, fd):
    return float(np.max(np.abs(supplied - fd) / np.maximum(1.0, np.abs(fd))))


def derivative_consistency(p, samples: int = 100, seed: int = 0, lam_box=(-0.5, 0.5),
                           tol: float = 1e-5, n_lam: int = 4) -> dict:
    """Compare supplied partial derivatives with central differences.

    Errors are relative with the scale floored at 1. Works for first-order
    problems (jacobian, aux_jacobian) and wave problems (d4b, d5b, d6b, dxa).
    """
    rng = np.random.default_rng(seed)
    errs: dict = {}

    def record(name, e):
        errs[name] = max(errs.get(name, 0.0), e)

    per = max(1, samples // n_lam)
    for lam in rng.uniform(lam_box[0], lam_box[1], n_lam):
        t = rng.uniform(0.0, 2 * np.pi, per)
        x = rng.uniform(0.0, 1.0, per)
        if isinstance(p, WaveProblem):
            u, pp, q = rng.uniform(-1.0, 1.0, (3, per))
            args = [u, pp, q]
            for slot, name in enumerate(("d4b", "d5b", "d6b")):
                h = _STEP * np.maximum(1.0, np.abs(args[slot]))
                up = list(args)
                um = list(args)
                up[slot] = args[slot] + h
                um[slot] = args[slot] - h
                fd = (p.eval_b("b", t, x, lam, *up) - p.eval_b("b", t, x, lam, *um)) / (2 * h)
                record(name, _fd_error(p.eval_b(name, t, x, lam, *args), fd))
            xs = np.clip(x, 2 * _STEP, 1 - 2 * _STEP)
            fd = (p.eval_a(xs + _STEP, lam) - p.eval_a(xs - _STEP, lam)) / (2 * _STEP)
            record("dxa", _fd_error(p.eval_dxa(xs, lam), fd))
            continue
        u = rng.uniform(-1.0, 1.0, (p.n, per))
        aux = rng.uniform(-1.0, 1.0, (p.n_aux, per)) if p.aux_map is not None else None
        J = p.eval_jacobian(t, x, lam, u, aux)
        for k in range(p.n):
            h = _STEP * np.maximum(1.0, np.abs(u[k]))
            up, um = u.copy(), u.copy()
            up[k] += h
            um[k] -= h
            fd = (p.eval_source(t, x, lam, up, aux) - p.eval_source(t, x, lam, um, aux)) / (2 * h)
            for j in range(p.n):
                record(f"jacobian[{j},{k}]", _fd_error(J[j, k], fd[j]))
        if aux is not None:
            JA = p.eval_aux_jacobian(t, x, lam, u, aux)
            for a in range(p.n_aux):
                h = _STEP * np.maximum(1.0, np.abs(aux[a]))
                ap, am = aux.copy(), aux.copy()
                ap[a] += h
                am[a] -= h
                fd = (p.eval_source(t, x, lam, u, ap) - p.eval_source(t, x, lam, u, am)) / (2 * h)
                for j in range(p.n):
                    record(f"aux_jacobian[{j},{a}]", _fd_error(JA[j, a], fd[j]))
    worst = max(errs.values()) if errs else 0.0
    return {
        "max_rel_error": worst,
        "errors": errs,
        "flagged": sorted(k for k, v in errs.items() if v > tol),
        "passed": worst <= tol,
        "tol": tol,
    }

"""Problem definitions, hypothesis validation and built-in presets.

Evaluators are vectorized numpy callables returning all components at once:

    speed(x, lam)               -> (n, *x.shape)
    source(t, x, lam, u)        -> (n, *t.shape)        u has shape (n, *t.shape)
    jacobian(t, x, lam, u)      -> (n, n, *t.shape)     entry [j, k] = d b_j / d u_k
    coupling r(t, lam)          -> (n, n, *t.shape)

A first-order problem may also carry a linear auxiliary map (Field -> Field)
whose output enters the source as an extra argument; the wave reduction uses
it for the space integral that recovers u from the Riemann invariants.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import brentq

from .characteristics import SPEED_FLOOR


def as_components(res, lead: tuple, shape: tuple) -> np.ndarray:
    """Broadcast an evaluator result (array or nested lists of arrays/scalars) to lead + shape."""
    if isinstance(res, np.ndarray) and res.dtype != object:
        res = res.astype(float, copy=False)
        if lead and res.ndim == len(lead) and res.shape == lead:
            res = res.reshape(lead + (1,) * len(shape))
        return np.broadcast_to(res, lead + shape)
    if not lead:
        return np.broadcast_to(np.asarray(res, dtype=float), shape)
    if len(res) != lead[0]:
        raise ValueError(f"evaluator returned {len(res)} entries, expected {lead[0]}")
    return np.stack([as_components(r, lead[1:], shape) for r in res])


# ----------------------------------------------------------------- coupling

class BoundaryCoupling:
    """Boundary coupling of a first-order system.

    Reflection kind: u_j(t,0) = sum_{k>m} r_jk u_k(t,0) for j < m (0-based
    rows 0..m-1), u_j(t,1) = sum_{k<=m} r_jk u_k(t,1) for the rest.
    General kind: rows j < m read r00 @ u(t,0) + r01 @ u(t,1) at x=0, rows
    j >= m read r10 @ u(t,0) + r11 @ u(t,1) at x=1.
    """

    def __init__(self, kind: str, n: int, m: int, r=None, blocks=None):
        if kind not in ("reflection", "general"):
            raise ValueError(f"unknown coupling kind {kind!r}")
        self.kind = kind
        self.n = n
        self.m = m
        self._r = r
        self._blocks = blocks
        mask = np.zeros((n, n), dtype=bool)
        mask[:m, m:] = True
        mask[m:, :m] = True
        self.reflection_mask = mask

    @classmethod
    def reflection(cls, n: int, m: int, r: Optional[Callable] = None) -> "BoundaryCoupling":
        return cls("reflection", n, m, r=r)

    @classmethod
    def general(cls, n: int, m: int, r00=None, r01=None, r10=None, r11=None) -> "BoundaryCoupling":
        return cls("general", n, m, blocks=(r00, r01, r10, r11))

    def _eval(self, fn, t, lam):
        t = np.asarray(t, dtype=float)
        if fn is None:
            return np.zeros((self.n, self.n) + t.shape)
        return as_components(fn(t, lam), (self.n, self.n), t.shape).copy()

    def r(self, t, lam) -> np.ndarray:
        """Reflection matrix with entries outside the legal pattern set to 0."""
        if self.kind != "reflection":
            raise ValueError("r() is defined for reflection couplings only")
        out = self._eval(self._r, t, lam)
        out[~self.reflection_mask] = 0.0
        return out

    def block(self, name: str, t, lam) -> np.ndarray:
        idx = {"r00": 0, "r01": 1, "r10": 2, "r11": 3}[name]
        if self.kind == "general":
            return self._eval(self._blocks[idx], t, lam)
        out = np.zeros((self.n, self.n) + np.shape(t))
        rr = self.r(t, lam)
        m = self.m
        if name == "r00":
            out[:m, m:] = rr[:m, m:]
        elif name == "r11":
            out[m:, :m] = rr[m:, :m]
        return out

    def matrices(self, t, lam) -> np.ndarray:
        """Unified coefficients R[j, k, side] of u_k(t, x_side) in the condition for u_j."""
        t = np.asarray(t, dtype=float)
        n, m = self.n, self.m
        out = np.zeros((n, n, 2) + t.shape)
        if self.kind == "reflection":
            rr = self.r(t, lam)
            out[:m, :, 0] = rr[:m]
            out[m:, :, 1] = rr[m:]
        else:
            r00, r01, r10, r11 = (self._eval(b, t, lam) for b in self._blocks)
            out[:m, :, 0] = r00[:m]
            out[:m, :, 1] = r01[:m]
            out[m:, :, 0] = r10[m:]
            out[m:, :, 1] = r11[m:]
        return out


# ----------------------------------------------------------------- problems

@dataclass(eq=False)
class FirstOrderProblem:
    """d_t u_j + a_j(x, lam) d_x u_j + b_j(t, x, lam, u) = 0 with boundary coupling.

    Components 0..m-1 enter at x=0, components m..n-1 enter at x=1.
    """

    n: int
    m: int
    speed: Callable
    source: Callable
    jacobian: Callable
    coupling: BoundaryCoupling
    aux_map: Optional[Callable] = None
    aux_jacobian: Optional[Callable] = None
    n_aux: int = 0
    name: str = ""
    exact: Optional[Callable] = None
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.m <= self.n:
            raise ValueError(f"m={self.m} must lie in [0, n={self.n}]")
        if self.coupling.n != self.n or self.coupling.m != self.m:
            raise ValueError("coupling size does not match the problem")
        if (self.aux_map is None) != (self.aux_jacobian is None):
            raise ValueError("aux_map and aux_jacobian must be given together")

    def boundary_side(self, j: int) -> int:
        """0 if component j is prescribed at x=0, else 1."""
        return 0 if j < self.m else 1

    def eval_speed(self, x, lam) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return as_components(self.speed(x, lam), (self.n,), x.shape)

    def eval_source(self, t, x, lam, u, aux=None) -> np.ndarray:
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        args = (t, x, lam, u) if self.aux_map is None else (t, x, lam, u, aux)
        return as_components(self.source(*args), (self.n,), t.shape)

    def eval_jacobian(self, t, x, lam, u, aux=None) -> np.ndarray:
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        args = (t, x, lam, u) if self.aux_map is None else (t, x, lam, u, aux)
        return as_components(self.jacobian(*args), (self.n, self.n), t.shape)

    def eval_aux_jacobian(self, t, x, lam, u, aux) -> np.ndarray:
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        return as_components(self.aux_jacobian(t, x, lam, u, aux), (self.n, self.n_aux), t.shape)

    # scalar per-component accessors
    def a(self, j, x, lam):
        return float(self.eval_speed(np.array(x, float), lam)[j])

    def b(self, j, t, x, lam, u):
        u = np.asarray(u, float)
        return float(self.eval_source(np.array(t, float), np.array(x, float), lam, u)[j])

    def db(self, j, k, t, x, lam, u):
        u = np.asarray(u, float)
        return float(self.eval_jacobian(np.array(t, float), np.array(x, float), lam, u)[j, k])


@dataclass(eq=False)
class WaveProblem:
    """d_t^2 u - a(x,lam)^2 d_x^2 u + b(t, x, lam, u, d_t u, d_x u) = 0,
    u(t, 0) = d_x u(t, 1) = 0."""

    a: Callable
    dxa: Callable
    b: Callable
    d4b: Callable
    d5b: Callable
    d6b: Callable
    name: str = ""
    exact: Optional[Callable] = None
    meta: dict = dc_field(default_factory=dict)

    def eval_a(self, x, lam):
        x = np.asarray(x, dtype=float)
        return as_components(self.a(x, lam), (), x.shape)

    def eval_dxa(self, x, lam):
        x = np.asarray(x, dtype=float)
        return as_components(self.dxa(x, lam), (), x.shape)

    def eval_b(self, name, t, x, lam, u, p, q):
        t, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(x, float))
        fn = {"b": self.b, "d4b": self.d4b, "d5b": self.d5b, "d6b": self.d6b}[name]
        return as_components(fn(t, x, lam, u, p, q), (), t.shape)


# --------------------------------------------------------------- validation

@dataclass
class Violation:
    check: str
    message: str
    location: dict

    def to_dict(self):
        return {"check": self.check, "message": self.message, "location": self.location}


@dataclass
class ValidationReport:
    passed: bool
    violations: list
    samples: int
    lam_box: tuple

    def to_dict(self):
        return {"passed": self.passed, "samples": self.samples, "lambda_box": list(self.lam_box),
                "violations": [v.to_dict() for v in self.violations]}


def _safe(fn, *args):
    try:
        with np.errstate(all="ignore"):
            return np.asarray(fn(*args), dtype=float), None
    except Exception as exc:  # evaluator failure is reported, not raised
        return None, f"{type(exc).__name__}: {exc}"


def _scan_nonzero(values, xs, lams, fn_x, check, label, out, positive=False):
    """Flag zeros/sign changes of values[x_index, lam_index]; refine the witness by root finding."""
    bad = ~np.isfinite(values)
    if bad.any():
        i, k = np.argwhere(bad)[0]
        out.append(Violation("finite", f"{label} is not finite",
                             {"x": float(xs[i]), "lambda": float(lams[k])}))
        return
    small = np.abs(values) < SPEED_FLOOR
    if positive:
        small |= values <= 0
    flips = np.sign(values[1:]) * np.sign(values[:-1]) < 0
    for k in range(lams.size):
        col_small = np.nonzero(small[:, k])[0]
        col_flip = np.nonzero(flips[:, k])[0]
        if col_flip.size and (not col_small.size or col_flip[0] < col_small[0]):
            i = col_flip[0]
            try:
                xw = brentq(lambda s: fn_x(s, lams[k]), xs[i], xs[i + 1], xtol=1e-12)
            except Exception:
                xw = 0.5 * (xs[i] + xs[i + 1])
        elif col_small.size:
            xw = xs[col_small[0]]
        else:
            continue
        out.append(Violation(check, f"{label} vanishes or changes sign",
                             {"x": float(xw), "lambda": float(lams[k])}))
        return


def _periodicity(evaluate, t, label, out):
    """Compare evaluate(t) with evaluate(t + 2pi); evaluate holds its other arguments fixed."""
    v0, err0 = _safe(evaluate, t)
    v1, err1 = _safe(evaluate, t + 2 * np.pi)
    if err0 or err1:
        out.append(Violation("evaluator", f"{label} raised {err0 or err1}", {}))
        return
    if not (np.all(np.isfinite(v0)) and np.all(np.isfinite(v1))):
        out.append(Violation("finite", f"{label} is not finite", {}))
        return
    diff = np.abs(v1 - v0)
    tol = 1e-9 * (1.0 + np.abs(v0))
    if np.any(diff > tol):
        idx = np.unravel_index(np.argmax(diff - tol), diff.shape)
        out.append(Violation("periodic", f"{label} is not 2*pi-periodic in t",
                             {"t": float(t[idx[-1]])}))


def validate(p, lam_box=(-0.5, 0.5), samples: int = 64) -> ValidationReport:
    """Sample the standing hypotheses on a tensor grid of (x, lambda)."""
    samples = int(samples)
    if samples < 8:
        raise ValueError("samples must be >= 8")
    lo, hi = float(lam_box[0]), float(lam_box[1])
    xs = np.linspace(0.0, 1.0, samples)
    lams = np.linspace(lo, hi, samples)
    X, L = np.meshgrid(xs, lams, indexing="ij")
    out = []
    rng = np.random.default_rng(12345)
    t_pts = rng.uniform(0, 2 * np.pi, 16)

    if isinstance(p, WaveProblem):
        A, err = _safe(lambda: np.broadcast_to(p.eval_a(X, L), X.shape))
        if err:
            out.append(Violation("evaluator", f"speed raised {err}", {}))
        else:
            _scan_nonzero(A, xs, lams, lambda s, l: float(p.eval_a(s, l)),
                          "positive-speed", "a(x, lambda)", out, positive=True)
        for lam in (lo, hi):
            x = rng.uniform(0, 1, t_pts.size)
            u, pp, q = rng.normal(size=(3, t_pts.size))
            _periodicity(lambda t, lam=lam, x=x, u=u, pp=pp, q=q: np.stack(
                [p.eval_b(nm, t, x, lam, u, pp, q) for nm in ("b", "d4b", "d5b", "d6b")]),
                t_pts, "b", out)
    else:
        A, err = _safe(lambda: p.eval_speed(X, L))
        if err:
            out.append(Violation("evaluator", f"speed raised {err}", {}))
        else:
            for j in range(p.n):
                _scan_nonzero(A[j], xs, lams, lambda s, l, j=j: float(p.eval_speed(s, l)[j]),
                              "nonzero-speed", f"a_{j + 1}", out)
            for j in range(p.n):
                for k in range(j + 1, p.n):
                    _scan_nonzero(A[j] - A[k], xs, lams,
                                  lambda s, l, j=j, k=k: float(np.diff(p.eval_speed(s, l)[[k, j]])),
                                  "distinct-speeds", f"a_{j + 1} - a_{k + 1}", out)
        if p.aux_map is None:
            for lam in (lo, hi):
                x = rng.uniform(0, 1, t_pts.size)
                u = rng.normal(size=(p.n, t_pts.size))
                _periodicity(lambda t, lam=lam, x=x, u=u: np.concatenate(
                    [p.eval_source(t, x, lam, u), p.eval_jacobian(t, x, lam, u).reshape(-1, t.size)]),
                    t_pts, "b", out)
        for lam in (lo, hi):
            _periodicity(lambda t, lam=lam: p.coupling.matrices(t, lam), t_pts, "coupling", out)
    return ValidationReport(passed=not out, violations=out, samples=samples, lam_box=(lo, hi))


# ------------------------------------------------------------ tabulated data

class Tabulated:
    """Evaluator built from tabulated samples on a tensor grid.

    axes: ordered names among 't', 'x', 'lambda' with node arrays. The t axis
    is treated as 2*pi-periodic (the table is wrapped), other axes use cubic
    interpolation.
    """

    def __init__(self, axes: dict, values):
        self.names = list(axes)
        for nm in self.names:
            if nm not in ("t", "x", "lambda"):
                raise ValueError(f"unknown axis {nm!r}")
        nodes = [np.asarray(axes[nm], dtype=float) for nm in self.names]
        vals = np.asarray(values, dtype=float)
        if vals.shape != tuple(a.size for a in nodes):
            raise ValueError("table shape does not match its axes")
        if "t" in self.names:
            ax = self.names.index("t")
            tn = nodes[ax]
            order = np.argsort(np.mod(tn, 2 * np.pi))
            tn = np.mod(tn, 2 * np.pi)[order]
            vals = np.take(vals, order, axis=ax)
            first = np.take(vals, [0], axis=ax)
            last = np.take(vals, [-1], axis=ax)
            vals = np.concatenate([last, vals, first], axis=ax)
            nodes[ax] = np.concatenate([[tn[-1] - 2 * np.pi], tn, [tn[0] + 2 * np.pi]])
        method = "cubic" if all(a.size >= 4 for a in nodes) else "linear"
        self._interp = RegularGridInterpolator(nodes, vals, method=method)

    def __call__(self, t=None, x=None, lam=None):
        given = {"t": t, "x": x, "lambda": lam}
        arrs = [np.asarray(given[nm], dtype=float) for nm in self.names]
        arrs = list(np.broadcast_arrays(*arrs))
        if "t" in self.names:
            ax = self.names.index("t")
            arrs[ax] = np.mod(arrs[ax], 2 * np.pi)
        pts = np.stack([a.ravel() for a in arrs], axis=-1)
        return self._interp(pts).reshape(arrs[0].shape)


# ------------------------------------------------------------------ presets

def _zeros_like_jac(n):
    def jac(t, x, lam, u, *rest):
        return np.zeros((n, n) + np.shape(t))
    return jac


def remark_mn1() -> FirstOrderProblem:
    """Scalar transport u_t + (1+lam^2) u_x + cos t = 0, u(t,0) = 0."""
    def exact(t, x, lam):
        return np.sin(t - x / (1 + lam ** 2)) - np.sin(t)

    return FirstOrderProblem(
        n=1, m=1,
        speed=lambda x, lam: [1.0 + lam ** 2 + 0 * x],
        source=lambda t, x, lam, u: [np.cos(t)],
        jacobian=_zeros_like_jac(1),
        coupling=BoundaryCoupling.reflection(1, 1),
        name="remark-mn1",
        exact=lambda t, x, lam: exact(t, x, lam)[None],
    )


def remark_rema() -> FirstOrderProblem:
    """Transport pair with unit reflection and travel time 1+lam^2 per crossing."""
    def speed(x, lam):
        c = 1.0 / (1.0 + lam ** 2) + 0 * x
        return [c, -c]

    def r(t, lam):
        return [[0.0, 1.0], [1.0, 0.0]]

    return FirstOrderProblem(
        n=2, m=1, speed=speed,
        source=lambda t, x, lam, u: np.zeros_like(u),
        jacobian=_zeros_like_jac(2),
        coupling=BoundaryCoupling.reflection(2, 1, r),
        name="remark-rema",
    )


def linear_2x2() -> FirstOrderProblem:
    """Nonresonant linear 2x2 system with contracting reflection (R < 1)."""
    def speed(x, lam):
        return [1.0 + 0.2 * x + 0.5 * lam ** 2, -(1.5 - 0.3 * x)]

    def forcing(t, x):
        return np.stack([np.cos(t) * (1 + x), 0.5 * np.sin(2 * t - x)])

    def source(t, x, lam, u):
        g = forcing(t, x)
        return np.stack([0.3 * u[0] + 0.4 * u[1] - g[0],
                         0.3 * u[0] - 0.2 * u[1] - g[1]])

    def jacobian(t, x, lam, u):
        out = np.empty((2, 2) + np.shape(t))
        out[0, 0], out[0, 1], out[1, 0], out[1, 1] = 0.3, 0.4, 0.3, -0.2
        return out

    def r(t, lam):
        return [[0.0, 0.5], [0.6, 0.0]]

    return FirstOrderProblem(n=2, m=1, speed=speed, source=source, jacobian=jacobian,
                             coupling=BoundaryCoupling.reflection(2, 1, r), name="linear-2x2")


# manufactured semilinear system ------------------------------------------------

_MS = dict(beta=(0.5, -0.3), kappa=(0.2, 0.15), gamma=(0.2, 0.2))


def _ms_r12(t):
    return 0.6 + 0.1 * np.cos(t), -0.1 * np.sin(t)


def _ms_r21(t):
    return 0.7 + 0.1 * np.sin(t), 0.1 * np.cos(t)


def _ms_u1(t, x):
    """u1*, d_t u1*, d_x u1*."""
    s = np.sin(t + x)
    c = np.cos(t + x)
    w = np.cos(2 * t)
    return (0.5 * s + 0.3 * w * x, 0.5 * c - 0.6 * np.sin(2 * t) * x, 0.5 * c + 0.3 * w)


def _ms_exact(t, x):
    """(u1*, u2*) with time and space derivatives, built to satisfy the coupling."""
    u1, u1t, u1x = _ms_u1(t, x)
    p0, p0t, _ = _ms_u1(t, 0.0 * x)
    p1, p1t, _ = _ms_u1(t, 0.0 * x + 1.0)
    r12, r12t = _ms_r12(t)
    r21, r21t = _ms_r21(t)
    phi = p0 / r12
    phit = (p0t * r12 - p0 * r12t) / r12 ** 2
    psi = r21 * p1
    psit = r21t * p1 + r21 * p1t
    bump = 0.2 * np.cos(t - x)
    bumpt = -0.2 * np.sin(t - x)
    bumpx = 0.2 * np.sin(t - x)
    u2 = (1 - x) * phi + x * psi + x * (1 - x) * bump
    u2t = (1 - x) * phit + x * psit + x * (1 - x) * bumpt
    u2x = -phi + psi + (1 - 2 * x) * bump + x * (1 - x) * bumpx
    return np.stack([u1, u2]), np.stack([u1t, u2t]), np.stack([u1x, u2x])


def manufactured_2x2() -> FirstOrderProblem:
    """Semilinear 2x2 system with cubic terms, time-dependent reflection and a known solution."""
    beta, kappa, gamma = (np.array(_MS[k]) for k in ("beta", "kappa", "gamma"))

    def speed(x, lam):
        return [1.0 + 0.3 * x + 0.1 * lam, -(1.0 + 0.2 * x)]

    def nonlinear(u):
        return np.stack([beta[0] * u[0] + kappa[0] * u[1] + gamma[0] * u[0] ** 3,
                         beta[1] * u[1] + kappa[1] * u[0] + gamma[1] * u[1] ** 3])

    def forcing(t, x, lam):
        u, ut, ux = _ms_exact(t, x)
        a = np.stack([np.broadcast_to(s, np.shape(t)) for s in speed(x, lam)])
        return ut + a * ux + nonlinear(u)

    def source(t, x, lam, u):
        return nonlinear(u) - forcing(t, x, lam)

    def jacobian(t, x, lam, u):
        out = np.empty((2, 2) + np.shape(t))
        out[0, 0] = beta[0] + 3 * gamma[0] * u[0] ** 2
        out[0, 1] = kappa[0]
        out[1, 0] = kappa[1]
        out[1, 1] = beta[1] + 3 * gamma[1] * u[1] ** 2
        return out

    def r(t, lam):
        return [[0.0, _ms_r12(t)[0]], [_ms_r21(t)[0], 0.0]]

    return FirstOrderProblem(n=2, m=1, speed=speed, source=source, jacobian=jacobian,
                             coupling=BoundaryCoupling.reflection(2, 1, r),
                             name="manufactured-2x2",
                             exact=lambda t, x, lam: _ms_exact(t, x)[0])


# wave presets -------------------------------------------------------------------

def telegraph() -> WaveProblem:
    """Damped telegraph equation with a small cubic term and small forcing."""
    def a(x, lam):
        return 1.0 + 0.2 * x + 0.1 * lam ** 2

    def a1(x):
        return 0.5 + 0.2 * x

    def b(t, x, lam, u, p, q):
        return a1(x) * p + 0.1 * q + 0.2 * u ** 3 - 0.1 * np.cos(t) * np.sin(0.5 * np.pi * x)

    return WaveProblem(
        a=a, dxa=lambda x, lam: 0.2 + 0 * x, b=b,
        d4b=lambda t, x, lam, u, p, q: 0.6 * u ** 2,
        d5b=lambda t, x, lam, u, p, q: a1(x) + 0 * t,
        d6b=lambda t, x, lam, u, p, q: 0.1 + 0 * t,
        name="telegraph",
    )


def _mw_exact(t, x):
    s = np.sin(0.5 * np.pi * x)
    c = np.cos(0.5 * np.pi * x)
    g = np.sin(t) + 0.2 * np.cos(2 * t)
    gt = np.cos(t) - 0.4 * np.sin(2 * t)
    gtt = -np.sin(t) - 0.8 * np.cos(2 * t)
    k = 0.5 * np.pi
    return g * s, gt * s, k * g * c, gtt * s, -k * k * g * s


def manufactured_wave() -> WaveProblem:
    """Semilinear damped wave equation with a known solution folded into the forcing."""
    def a(x, lam):
        return 1.0 + 0.2 * x * (1 - x) + 0.1 * lam ** 2

    def dxa(x, lam):
        return 0.2 * (1 - 2 * x)

    def nonlinear(t, u, p, q):
        return 0.3 * p + 0.1 * q + 0.5 * u + 0.2 * u ** 3

    def forcing(t, x, lam):
        u, ut, ux, utt, uxx = _mw_exact(t, x)
        return utt - a(x, lam) ** 2 * uxx + nonlinear(t, u, ut, ux)

    return WaveProblem(
        a=a, dxa=dxa,
        b=lambda t, x, lam, u, p, q: nonlinear(t, u, p, q) - forcing(t, x, lam),
        d4b=lambda t, x, lam, u, p, q: 0.5 + 0.6 * u ** 2,
        d5b=lambda t, x, lam, u, p, q: 0.3 + 0 * t,
        d6b=lambda t, x, lam, u, p, q: 0.1 + 0 * t,
        name="manufactured-wave",
        exact=lambda t, x, lam: _mw_exact(t, x)[0],
    )


def builtin_problems() -> dict:
    """Named, parameter-free constructors for the preset problems."""
    return {
        "remark-mn1": remark_mn1,
        "remark-rema": remark_rema,
        "telegraph": telegraph,
        "linear-2x2": linear_2x2,
        "manufactured-2x2": manufactured_2x2,
        "manufactured-wave": manufactured_wave,
    }

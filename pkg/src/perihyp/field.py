"""Grid functions on [0, 2*pi) x [0, 1], periodic in time.

Time operations are trigonometric: every shift or derivative equals the
operation applied to the band-limited interpolant, sampled back at the
nodes. The Nyquist mode is read as cos(N t / 2), so odd derivatives drop it
and a shift by s scales it by cos(N s / 2). Space interpolation uses a
not-a-knot cubic spline.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

_NODE_TOL = 1e-13


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform tensor grid: n_t time samples on [0, 2pi), n_x space samples on [0, 1]."""

    n_t: int
    n_x: int

    def __post_init__(self):
        if not isinstance(self.n_t, (int, np.integer)) or not isinstance(self.n_x, (int, np.integer)):
            raise TypeError("grid sizes must be integers")
        if self.n_t < 4 or self.n_t % 2:
            raise ValueError(f"n_t must be even and >= 4, got {self.n_t}")
        if self.n_x < 2:
            raise ValueError(f"n_x must be >= 2, got {self.n_x}")

    @cached_property
    def t(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_t) / self.n_t

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n_x)

    @property
    def shape(self):
        return (self.n_t, self.n_x)

    def mesh(self):
        """(T, X) arrays of shape (n_t, n_x)."""
        return np.meshgrid(self.t, self.x, indexing="ij")


class Field:
    """Immutable n-component grid function with values of shape (n, n_t, n_x)."""

    __slots__ = ("grid", "_values")

    def __init__(self, grid: PeriodicGrid, values):
        vals = np.array(values, dtype=float)
        if vals.ndim == 2:
            vals = vals[None]
        if vals.ndim != 3 or vals.shape[1:] != grid.shape:
            raise ValueError(f"values of shape {vals.shape} do not fit grid {grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        self.grid = grid
        self._values = vals

    @classmethod
    def zeros(cls, grid: PeriodicGrid, n: int = 1) -> "Field":
        return cls(grid, np.zeros((n,) + grid.shape))

    @classmethod
    def from_function(cls, grid: PeriodicGrid, fn, n: int = 1) -> "Field":
        """Sample fn(t, x) -> (n, n_t, n_x) (or broadcastable) on the grid."""
        T, X = grid.mesh()
        vals = np.asarray(fn(T, X), dtype=float)
        return cls(grid, np.broadcast_to(vals, (n,) + grid.shape))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def n(self) -> int:
        return self._values.shape[0]

    def component(self, j: int) -> np.ndarray:
        return self._values[j]

    def trace(self, side: int) -> np.ndarray:
        """Boundary traces (n, n_t) at x=0 (side 0) or x=1 (side 1)."""
        return self._values[:, :, 0 if side == 0 else -1]

    def sup(self) -> float:
        return float(np.max(np.abs(self._values))) if self._values.size else 0.0

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)

    def _check(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        if other.grid != self.grid or other.n != self.n:
            raise ValueError("fields live on different grids or have different sizes")
        return other

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self._values + other._values)
        return Field(self.grid, self._values + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self._values - other._values)
        return Field(self.grid, self._values - other)

    def __mul__(self, c):
        if isinstance(c, Field):
            return NotImplemented
        return Field(self.grid, self._values * c)

    __rmul__ = __mul__
    __radd__ = __add__

    def __neg__(self):
        return Field(self.grid, -self._values)

    def __repr__(self):
        return f"Field(n={self.n}, n_t={self.grid.n_t}, n_x={self.grid.n_x})"

    def sample(self, t, x) -> np.ndarray:
        """Interpolated values at arbitrary points; returns shape (n, *t.shape)."""
        return sample_points(self._values, np.asarray(t, float), np.asarray(x, float))


# ---------------------------------------------------------------- time axis

def shift_phase(n_t: int, theta) -> np.ndarray:
    """rfft multipliers for a shift by theta; shape (n_t//2 + 1, *theta.shape)."""
    theta = np.asarray(theta, dtype=float)
    k = np.arange(n_t // 2 + 1)
    ph = np.exp(1j * np.multiply.outer(k, theta))
    ph[-1] = np.cos(0.5 * n_t * theta)
    return ph


def shift_samples(values: np.ndarray, theta) -> np.ndarray:
    """Shift samples along axis -2 (time): out[..., i, m] = u(t_i + theta[m]).

    theta is a scalar or has one entry per trailing column.
    """
    values = np.asarray(values, dtype=float)
    n_t = values.shape[-2]
    ph = shift_phase(n_t, theta)
    if ph.ndim == 1:
        ph = ph[:, None]
    spec = np.fft.rfft(values, axis=-2)
    return np.fft.irfft(spec * ph, n=n_t, axis=-2)


def shift_matrix(n_t: int, theta: float) -> np.ndarray:
    """Dense matrix S with S @ u = shift_samples(u, theta)."""
    return shift_samples(np.eye(n_t), float(theta))


def periodic_kernel(n_t: int, s) -> np.ndarray:
    """Trigonometric interpolation kernel: u(t_i + s) = sum_l K(t_i + s - t_l) u_l.

    Closed-form cosine sum; used as an FFT-free reference for shifts.
    """
    s = np.asarray(s, dtype=float)
    k = np.arange(1, n_t // 2)
    out = 1.0 + 2.0 * np.cos(np.multiply.outer(s, k)).sum(axis=-1) + np.cos(0.5 * n_t * s)
    return out / n_t


def _kernel_fast(n_t: int, s) -> np.ndarray:
    """periodic_kernel via sin(n s/2) cot(s/2) / n."""
    s = np.asarray(s, dtype=float)
    half = np.sin(0.5 * s)
    small = np.abs(half) < 1e-13
    safe = np.where(small, 1.0, half)
    out = np.sin(0.5 * n_t * s) * np.cos(0.5 * s) / safe / n_t
    return np.where(small, 1.0, out)


def derivative_multipliers(n_t: int, order: int) -> np.ndarray:
    k = np.arange(n_t // 2 + 1, dtype=float)
    mult = (1j * k) ** order
    if order % 2:
        mult[-1] = 0.0
    else:
        mult[-1] = (-1) ** (order // 2) * (0.5 * n_t) ** order
    return mult


def shift_time(u: Field, s: float) -> Field:
    """The field t -> u(t + s, x)."""
    s = float(s)
    if not np.isfinite(s):
        raise ValueError("shift must be finite")
    if s == 0.0:
        return u
    return Field(u.grid, shift_samples(u.values, s))


def time_derivative(u: Field, order: int = 1) -> Field:
    """Trigonometric time derivative of the given order, component-wise."""
    order = int(order)
    if order < 0:
        raise ValueError("derivative order must be nonnegative")
    if order > u.grid.n_t // 2 - 1:
        raise ValueError(f"order {order} too high for n_t={u.grid.n_t}")
    if order == 0:
        return u
    n_t = u.grid.n_t
    spec = np.fft.rfft(u.values, axis=1)
    spec *= derivative_multipliers(n_t, order)[:, None]
    return Field(u.grid, np.fft.irfft(spec, n=n_t, axis=1))


def norm_l(u: Field, l: int) -> float:
    """sum_{k<=l} max |d^k u / dt^k| over nodes and components."""
    l = int(l)
    if l < 0:
        raise ValueError("l must be nonnegative")
    if l > u.grid.n_t // 2 - 1:
        raise ValueError(f"l={l} too high for n_t={u.grid.n_t}")
    total = 0.0
    for k in range(l + 1):
        total += time_derivative(u, k).sup()
    return total


# --------------------------------------------------------------- space axis

@lru_cache(maxsize=64)
def _spline_matrix_cached(n_x: int, pts: tuple, deriv: int) -> np.ndarray:
    xg = np.linspace(0.0, 1.0, n_x)
    spl = CubicSpline(xg, np.eye(n_x), axis=0, bc_type="not-a-knot")
    if deriv:
        spl = spl.derivative(deriv)
    mat = spl(np.asarray(pts))
    if deriv == 0:
        idx = np.rint(np.asarray(pts) * (n_x - 1))
        hit = np.abs(np.asarray(pts) * (n_x - 1) - idx) < _NODE_TOL * n_x
        for row in np.nonzero(hit)[0]:
            mat[row] = 0.0
            mat[row, int(idx[row])] = 1.0
    mat.setflags(write=False)
    return mat


def spline_matrix(n_x: int, pts, deriv: int = 0) -> np.ndarray:
    """Matrix P with (P @ y) = spline interpolant of nodal y (or its derivative) at pts."""
    pts = np.asarray(pts, dtype=float).ravel()
    if np.any(pts < -1e-14) or np.any(pts > 1 + 1e-14):
        raise ValueError("x outside [0, 1]")
    return _spline_matrix_cached(int(n_x), tuple(np.clip(pts, 0.0, 1.0)), int(deriv))


def space_derivative(u: Field, order: int = 1) -> Field:
    """Spline derivative in x at the nodes."""
    D = spline_matrix(u.grid.n_x, u.grid.x, deriv=order)
    return Field(u.grid, u.values @ D.T)


def _time_weights(n_t: int, t: np.ndarray) -> np.ndarray:
    """Rows w with u(t_p) = w[p] @ u_nodes; exact unit rows at node times."""
    tg = 2 * np.pi * np.arange(n_t) / n_t
    w = _kernel_fast(n_t, t[:, None] - tg[None, :])
    pos = np.mod(t, 2 * np.pi) * n_t / (2 * np.pi)
    idx = np.rint(pos)
    hit = np.abs(pos - idx) < _NODE_TOL * n_t
    for row in np.nonzero(hit)[0]:
        w[row] = 0.0
        w[row, int(idx[row]) % n_t] = 1.0
    return w


def sample_points(values: np.ndarray, t: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Interpolate (n, n_t, n_x) samples at points (t, x); output (n, *t.shape)."""
    t, x = np.broadcast_arrays(t, x)
    shape = t.shape
    tf, xf = t.ravel(), x.ravel()
    if np.any(xf < -1e-14) or np.any(xf > 1 + 1e-14):
        raise ValueError("x outside [0, 1]")
    n_t, n_x = values.shape[1:]
    wt = _time_weights(n_t, tf)
    xg = np.linspace(0.0, 1.0, n_x)
    wx = CubicSpline(xg, np.eye(n_x), axis=0, bc_type="not-a-knot")(np.clip(xf, 0, 1))
    pos = np.clip(xf, 0, 1) * (n_x - 1)
    idx = np.rint(pos)
    hit = np.abs(pos - idx) < _NODE_TOL * n_x
    for row in np.nonzero(hit)[0]:
        wx[row] = 0.0
        wx[row, int(idx[row])] = 1.0
    out = np.einsum("pi,nij,pj->np", wt, values, wx)
    return out.reshape((values.shape[0],) + shape)


def sample_shifted(values: np.ndarray, theta, x) -> np.ndarray:
    """Samples at (t_i + theta[m], x[m]) for every grid time t_i; output (..., n_t, M)."""
    x = np.asarray(x, dtype=float).ravel()
    n_x = values.shape[-1]
    cols = values @ spline_matrix(n_x, x).T
    return shift_samples(cols, np.broadcast_to(np.asarray(theta, float), x.shape))


def eval_at(u: Field, t: float, x: float, j: int = 0) -> float:
    """Value of component j at (t, x): trig interpolation in t, cubic spline in x."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x={x} outside [0, 1]")
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    return float(sample_points(u.values[j:j + 1], np.array([t]), np.array([x]))[0, 0])

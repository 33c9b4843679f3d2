"""Riemann-invariant reduction of the damped wave problem.

With v1 = u_t + a u_x and v2 = u_t - a u_x the equation
    u_tt - a^2 u_xx + b(t, x, lam, u, u_t, u_x) = 0,  u(t,0) = u_x(t,1) = 0
becomes the 2x2 system
    d_t v1 - a d_x v1 + B = 0,   d_t v2 + a d_x v2 + B = 0,
    B = (a_x / 2)(v1 - v2) + b(t, x, lam, J v, (v1 + v2)/2, (v1 - v2)/(2a)),
with v1(t,0) = -v2(t,0), v2(t,1) = v1(t,1) and J v = 1/2 int_0^x (v1 - v2)/a.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .characteristics import QuadratureRule, panel_layout
from .field import Field, PeriodicGrid, space_derivative, spline_matrix, time_derivative
from .problem import BoundaryCoupling, FirstOrderProblem, WaveProblem
from .solver import quasi_newton

BOUNDARY_TOL = 1e-6
FD_WIDTH = 9


@lru_cache(maxsize=16)
def fd_matrix(n_x: int, deriv: int, width: int = FD_WIDTH) -> np.ndarray:
    """Finite-difference differentiation matrix on the uniform grid of [0, 1].

    Each row uses the `width` nodes closest to the target (centred in the
    interior, one-sided near the ends), exact for polynomials of degree width-1.
    """
    width = min(width, n_x)
    h = 1.0 / (n_x - 1)
    D = np.zeros((n_x, n_x))
    fact = float(np.prod(np.arange(1, deriv + 1)))
    for i in range(n_x):
        lo = min(max(i - width // 2, 0), n_x - width)
        offs = np.arange(lo, lo + width) - i
        V = np.vander(offs.astype(float), increasing=True).T
        rhs = np.zeros(width)
        rhs[deriv] = fact
        D[i, lo:lo + width] = np.linalg.solve(V, rhs) / h ** deriv
    D.setflags(write=False)
    return D


@dataclass(frozen=True)
class WaveState:
    u: Field
    v: Field


def _j0_values(values: np.ndarray, a_z: np.ndarray, n_x: int, rule: QuadratureRule) -> np.ndarray:
    """1/2 int_0^x (v1 - v2)/a for values (..., 2, n_t, n_x); output (..., 1, n_t, n_x)."""
    lay = panel_layout(n_x, rule)
    P = spline_matrix(n_x, lay.z)
    diff = (values[..., 0, :, :] - values[..., 1, :, :]) @ P.T        # (..., n_t, Z)
    integrand = 0.5 * diff * (lay.w / a_z)
    panels = integrand.reshape(integrand.shape[:-1] + (lay.n_panels, lay.order)).sum(axis=-1)
    zero = np.zeros(panels.shape[:-1] + (1,))
    cum = np.concatenate([zero, np.cumsum(panels, axis=-1)], axis=-1)[..., ::lay.panels_per_cell]
    return cum[..., None, :, :]


def recover(wp: WaveProblem, v: Field, lam: float, rule: QuadratureRule = QuadratureRule()) -> Field:
    """u = 1/2 int_0^x (v1 - v2)/a by Gauss quadrature per time slice."""
    if v.n != 2:
        raise ValueError("recover expects a 2-component field")
    lay = panel_layout(v.grid.n_x, rule)
    a_z = wp.eval_a(lay.z, lam)
    return Field(v.grid, _j0_values(v.values, a_z, v.grid.n_x, rule))


def reduce(wp: WaveProblem, u: Field, lam: float) -> Field:
    """Riemann invariants (u_t + a u_x, u_t - a u_x) of a scalar field with u(t,0) = 0."""
    if u.n != 1:
        raise ValueError("reduce expects a scalar field")
    bc = float(np.abs(u.trace(0)).max())
    if bc > BOUNDARY_TOL:
        raise ValueError(f"u(t,0) = 0 violated by {bc:.3e}")
    ut = time_derivative(u, 1).values[0]
    ux = space_derivative(u, 1).values[0]
    a = wp.eval_a(u.grid.x, lam)[None, :]
    return Field(u.grid, np.stack([ut + a * ux, ut - a * ux]))


def as_first_order(wp: WaveProblem, rule: QuadratureRule = QuadratureRule()) -> FirstOrderProblem:
    """The 2x2 first-order problem in the Riemann invariants (speeds -a, +a; m = 1)."""

    def speed(x, lam):
        a = wp.eval_a(x, lam)
        return np.stack([-a, a])

    def _args(t, x, lam, v, aux):
        a = wp.eval_a(x, lam)
        p = 0.5 * (v[0] + v[1])
        q = 0.5 * (v[0] - v[1]) / a
        return a, aux[0], p, q

    def source(t, x, lam, v, aux):
        a, u, p, q = _args(t, x, lam, v, aux)
        B = 0.5 * wp.eval_dxa(x, lam) * (v[0] - v[1]) + wp.eval_b("b", t, x, lam, u, p, q)
        return np.stack([B, B])

    def jacobian(t, x, lam, v, aux):
        a, u, p, q = _args(t, x, lam, v, aux)
        ax = wp.eval_dxa(x, lam)
        d5 = wp.eval_b("d5b", t, x, lam, u, p, q)
        d6 = wp.eval_b("d6b", t, x, lam, u, p, q)
        d1 = 0.5 * ax + 0.5 * d5 + 0.5 * d6 / a
        d2 = -0.5 * ax + 0.5 * d5 - 0.5 * d6 / a
        row = np.stack([d1, d2])
        return np.stack([row, row])

    def aux_jacobian(t, x, lam, v, aux):
        a, u, p, q = _args(t, x, lam, v, aux)
        d4 = wp.eval_b("d4b", t, x, lam, u, p, q)
        return np.stack([d4, d4])[:, None]

    def aux_map(v: Field, lam) -> Field:
        return recover(wp, v, lam, rule)

    def r(t, lam):
        return [[0.0, -1.0], [1.0, 0.0]]

    return FirstOrderProblem(
        n=2, m=1, speed=speed, source=source, jacobian=jacobian,
        coupling=BoundaryCoupling.reflection(2, 1, r),
        aux_map=aux_map, aux_jacobian=aux_jacobian, n_aux=1,
        name=f"{wp.name or 'wave'}-reduced", meta={"wave": wp})


def pde_residual(wp: WaveProblem, u: Field, lam: float, v: Field | None = None) -> Field:
    """u_tt - a^2 u_xx + b(u, u_t, u_x) by numerical differentiation.

    Time derivatives are trigonometric, space derivatives high-order differences.
    When the Riemann invariants v are given, u_t and u_x are read off them so
    only one derivative is taken numerically in each direction.
    """
    T, X = u.grid.mesh()
    a = wp.eval_a(X, lam)
    if v is None:
        ut = time_derivative(u, 1).values[0]
        utt = time_derivative(u, 2).values[0]
        ux = u.values[0] @ fd_matrix(u.grid.n_x, 1).T
        uxx = u.values[0] @ fd_matrix(u.grid.n_x, 2).T
    else:
        ut = 0.5 * (v.values[0] + v.values[1])
        ux = 0.5 * (v.values[0] - v.values[1]) / a
        utt = time_derivative(Field(u.grid, ut[None]), 1).values[0]
        uxx = ux @ fd_matrix(u.grid.n_x, 1).T
    b = wp.eval_b("b", T, X, lam, u.values[0], ut, ux)
    return Field(u.grid, utt - a ** 2 * uxx + b)


def wave_solve(wp: WaveProblem, lam: float, tol: float = 1e-8, grid: PeriodicGrid | None = None,
               u_init: Field | None = None, max_iter: int = 50,
               rule: QuadratureRule = QuadratureRule()):
    """Solve the wave problem through its first-order reduction; returns (u, report).

    The report's `extra` entry carries the Riemann invariants and the sup norm
    of the second-order residual of the recovered u.
    """
    grid = grid or (u_init.grid if u_init is not None else PeriodicGrid(128, 128))
    fo = as_first_order(wp, rule)
    v0 = reduce(wp, u_init, lam) if u_init is not None else Field.zeros(grid, 2)
    v, rep = quasi_newton(fo, lam, v0, tol, max_iter, rule)
    u = recover(wp, v, lam, rule)
    rep.extra = {"pde_residual": pde_residual(wp, u, lam, v).sup(),
                 "state": WaveState(u=u, v=v)}
    return u, rep

"""Integral operators along characteristics.

All line integrals are organized per characteristic family j in label
coordinates: the curve labelled sigma passes through (sigma + Theta_j(z), z)
with Theta_j(z) = int_0^z 1/a_j. Along a curve, with
    E_j(sigma, z) = int_0^z d_{u_j} b_j / a_j,
the damping factor is c_j(t, x, xi) = exp(E_j(sigma, xi) - E_j(sigma, x)), so

    D_j(t, x) = exp(-E_j(sigma, x)) * int_{x_j}^x exp(E_j(sigma, z)) f_j / a_j dz,
    sigma = t - Theta_j(x).

Quantities are tabulated on the time grid in sigma and mapped back to grid
times by one trigonometric shift per space column.
"""
from __future__ import annotations

import threading

import numpy as np

from .characteristics import QuadratureRule, panel_layout, speed_profile, _check_speed
from .field import Field, shift_phase, shift_samples, spline_matrix


def shift_one_to_many(cols: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """cols (..., n_t) shifted by each of thetas (M,): output (..., n_t, M)."""
    n_t = cols.shape[-1]
    spec = np.fft.rfft(cols, axis=-1)
    ph = shift_phase(n_t, thetas)  # (nk, M)
    return np.fft.irfft(spec[..., :, None] * ph, n=n_t, axis=-2)


class CharacteristicFrame:
    """Characteristic data for a problem at fixed lam with frozen field v.

    Holds travel times, quadrature panels, samples of v along every family,
    the exponent E_j, the Jacobian rows of the source along the curves and
    the boundary-coupling coefficients of the operator calC.
    """

    def __init__(self, p, lam: float, v: Field, rule: QuadratureRule = QuadratureRule()):
        if v.n != p.n:
            raise ValueError(f"field has {v.n} components, problem has {p.n}")
        self.p = p
        self.lam = float(lam)
        self.v = v
        self.grid = grid = v.grid
        self.rule = rule
        n, n_t, n_x = p.n, grid.n_t, grid.n_x
        lay = self.layout = panel_layout(n_x, rule)
        z = lay.z
        self.P = spline_matrix(n_x, z)
        self.side = np.array([p.boundary_side(j) for j in range(n)])
        self.side_index = np.where(self.side == 0, 0, n_x - 1)

        a_z = p.eval_speed(z, lam)
        for j in range(n):
            _check_speed(a_z[j], j)
        self.a_z = a_z
        self.theta_z = np.empty((n, z.size))
        self.theta_x = np.empty((n, n_x))
        for j in range(n):
            prof = speed_profile(p, j, lam, rule)
            self.theta_z[j] = prof.theta(z)
            self.theta_x[j] = prof.theta(grid.x)
        # shift from the grid column x_k to the boundary x_j along family j
        self.delta = self.theta_x[np.arange(n), self.side_index][:, None] - self.theta_x

        self.times_z = grid.t[None, :, None] + self.theta_z[:, None, :]   # (n, n_t, Z)
        aux_v = p.aux_map(v, lam).values if p.aux_map is not None else None
        self.diag = np.empty((n, n_t, z.size))
        self.offdiag = np.empty((n, n, n_t, z.size))
        self.auxjac = np.empty((n, p.n_aux, n_t, z.size)) if aux_v is not None else None
        self.E_z = np.empty((n, n_t, z.size))
        self.E_x = np.empty((n, n_t, n_x))
        Wint = lay.integration_matrix()
        P_, q = lay.n_panels, lay.order
        per = lay.panels_per_cell
        for j in range(n):
            V = self.along(v.values, j)
            A = self.along(aux_v, j) if aux_v is not None else None
            jac = p.eval_jacobian(self.times_z[j], z[None, :], lam, V, A)
            self.diag[j] = jac[j, j]
            off = jac[j].copy()
            off[j] = 0.0
            self.offdiag[j] = off
            if A is not None:
                self.auxjac[j] = p.eval_aux_jacobian(self.times_z[j], z[None, :], lam, V, A)[j]
            g = jac[j, j] / a_z[j]
            gp = g.reshape(n_t, P_, q)
            panel = np.einsum("ipq,pq->ip", gp, lay.w.reshape(P_, q))
            edges = np.concatenate([np.zeros((n_t, 1)), np.cumsum(panel, axis=1)], axis=1)
            inner = np.einsum("ipr,qr->ipq", gp, Wint) * lay.half[None, :, None]
            self.E_z[j] = (edges[:, :-1, None] + inner).reshape(n_t, -1)
            self.E_x[j] = edges[:, ::per]
        self.kernel_z = lay.w[None, None, :] * np.exp(self.E_z) / a_z[:, None, :]
        self.expm_E_x = np.exp(-self.E_x)
        self._build_coupling()

    # ---------------------------------------------------------------- helpers
    def along(self, values: np.ndarray, j: int) -> np.ndarray:
        """Sample (..., c, n_t, n_x) values along family j: (..., c, n_t, Z) in label time."""
        return shift_samples(values @ self.P.T, self.theta_z[j])

    def to_grid(self, sigma_values: np.ndarray, j: int) -> np.ndarray:
        """Map (..., n_t, n_x) tabulated in label time back to grid times."""
        return shift_samples(sigma_values, -self.theta_x[j])

    def _build_coupling(self):
        p, grid, n = self.p, self.grid, self.p.n
        n_t, n_x = grid.shape
        coef = np.zeros((n, n, 2, n_t, n_x))
        for j in range(n):
            s = self.side_index[j]
            E_here = self.to_grid(self.E_x[j], j)
            E_bd = shift_one_to_many(self.E_x[j][:, s], -self.theta_x[j])
            c = np.exp(E_bd - E_here)
            when = grid.t[:, None] + self.delta[j][None, :]
            R = p.coupling.matrices(when, self.lam)[j]   # (n, 2, n_t, n_x)
            coef[j] = c[None, None] * R
        self.coefC = coef
        self.active = np.abs(coef).reshape(n, n, 2, -1).max(axis=-1) > 0.0  # (j, k, side)
        self.used_traces = [(k, s) for k in range(n) for s in (0, 1) if self.active[:, k, s].any()]

    # -------------------------------------------------------------- operators
    def apply_calC_traces(self, traces: np.ndarray) -> np.ndarray:
        """calC applied to boundary traces (..., n, 2, n_t); returns (..., n, n_t, n_x)."""
        n = self.p.n
        n_t, n_x = self.grid.shape
        lead = traces.shape[:-3]
        out = np.zeros(lead + (n, n_t, n_x))
        for j in range(n):
            ks = [(k, s) for (k, s) in self.used_traces if self.active[j, k, s]]
            if not ks:
                continue
            cols = np.stack([traces[..., k, s, :] for (k, s) in ks], axis=-2)   # (..., K, n_t)
            shifted = shift_one_to_many(cols, self.delta[j])                   # (..., K, n_t, n_x)
            cf = np.stack([self.coefC[j, k, s] for (k, s) in ks])             # (K, n_t, n_x)
            out[..., j, :, :] = np.einsum("...kix,kix->...ix", shifted, cf)
        return out

    def calC(self, values: np.ndarray) -> np.ndarray:
        traces = np.stack([values[..., 0], values[..., -1]], axis=-2)   # (..., n, 2, n_t)
        return self.apply_calC_traces(traces)

    def _integrate(self, integrand: np.ndarray, j: int) -> np.ndarray:
        """int_{x_j}^x c_j(t, x, z)/a_j(z) * integrand dz on the grid; integrand (..., n_t, Z)."""
        lay = self.layout
        n_t = self.grid.n_t
        P_, q = lay.n_panels, lay.order
        weighted = (integrand * self.kernel_z[j]).reshape(integrand.shape[:-1] + (P_, q)).sum(axis=-1)
        zero = np.zeros(weighted.shape[:-1] + (1,))
        # accumulate from the inflow side so no large partial sums cancel
        if self.side_index[j] == 0:
            H = np.concatenate([zero, np.cumsum(weighted, axis=-1)], axis=-1)
        else:
            tail = np.cumsum(weighted[..., ::-1], axis=-1)[..., ::-1]
            H = -np.concatenate([tail, zero], axis=-1)
        return self.to_grid(self.expm_E_x[j] * H[..., ::lay.panels_per_cell], j)

    def calD(self, values: np.ndarray) -> np.ndarray:
        p = self.p
        out = np.zeros_like(values)
        aux = None
        if p.aux_map is not None:
            aux = self._aux_values(values)
        for j in range(p.n):
            if not np.any(self.offdiag[j]) and self.auxjac is None:
                continue
            W = self.along(values, j)
            integrand = -np.einsum("kiz,...kiz->...iz", self.offdiag[j], W)
            if aux is not None:
                integrand = integrand - np.einsum("aiz,...aiz->...iz", self.auxjac[j], self.along(aux, j))
            out[..., j, :, :] = self._integrate(integrand, j)
        return out

    def _aux_values(self, values):
        p = self.p
        lead = values.shape[:-3]
        flat = values.reshape((-1,) + values.shape[-3:])
        res = np.stack([p.aux_map(Field(self.grid, f), self.lam).values for f in flat])
        return res.reshape(lead + res.shape[1:])

    def D(self, u: Field) -> np.ndarray:
        """Nonlinear D(lam, u, v) with v the frame's frozen field."""
        p = self.p
        z = self.layout.z
        out = np.zeros((p.n,) + self.grid.shape)
        aux_u = p.aux_map(u, self.lam).values if p.aux_map is not None else None
        for j in range(p.n):
            U = self.along(u.values, j)
            A = self.along(aux_u, j) if aux_u is not None else None
            b = p.eval_source(self.times_z[j], z[None, :], self.lam, U, A)[j]
            f = self.diag[j] * U[j] - b
            out[j] = self._integrate(f, j)
        return out

    def C(self, u: Field) -> np.ndarray:
        return self.calC(u.values)

    def residual(self, u: Field) -> Field:
        return Field(self.grid, u.values - self.calC(u.values) - self.D(u))

    def linear(self, values: np.ndarray) -> np.ndarray:
        """(I - calC - calD) applied to raw values (..., n, n_t, n_x)."""
        return values - self.calC(values) - self.calD(values)

    def dense(self, batch: int = 256) -> np.ndarray:
        """Matrix of I - calC - calD built from unit basis fields (C-order flat index)."""
        shape = (self.p.n,) + self.grid.shape
        N = int(np.prod(shape))
        cols = []
        for start in range(0, N, batch):
            stop = min(N, start + batch)
            E = np.zeros((stop - start, N))
            E[np.arange(stop - start), np.arange(start, stop)] = 1.0
            cols.append(self.linear(E.reshape((-1,) + shape)).reshape(stop - start, N))
        return np.concatenate(cols).T


_cache_lock = threading.Lock()
_frame_cache: list = []
_CACHE_SIZE = 6


def get_frame(p, lam: float, v: Field, rule: QuadratureRule = QuadratureRule()) -> CharacteristicFrame:
    """Frame for (p, lam, v), memoized on object identity of p and v."""
    lam = float(lam)
    with _cache_lock:
        for fr in _frame_cache:
            if fr.p is p and fr.v is v and fr.lam == lam and fr.rule == rule:
                return fr
    fr = CharacteristicFrame(p, lam, v, rule)
    with _cache_lock:
        _frame_cache.append(fr)
        del _frame_cache[:-_CACHE_SIZE]
    return fr


def apply_C(p, lam, v: Field, u: Field) -> Field:
    """C(lam, v) u: damped, coupled boundary traces transported along characteristics."""
    return Field(u.grid, get_frame(p, lam, v).C(u))


def apply_D(p, lam, u: Field, v: Field) -> Field:
    """D(lam, u, v): line integrals of c_j f_j / a_j from the inflow boundary."""
    return Field(u.grid, get_frame(p, lam, v).D(u))


def apply_calC(p, lam, u0: Field, u: Field) -> Field:
    return Field(u.grid, get_frame(p, lam, u0).calC(u.values))


def apply_calD(p, lam, u0: Field, u: Field) -> Field:
    return Field(u.grid, get_frame(p, lam, u0).calD(u.values))


def residual_F(p, lam, u0: Field, u: Field) -> Field:
    """F(lam, u) = u - C(lam, u0) u - D(lam, u, u0)."""
    return get_frame(p, lam, u0).residual(u)

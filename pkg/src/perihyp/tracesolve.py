"""Resolvent of I - calC through the boundary-trace equations.

A solution of u - calC u = f is fixed by its boundary traces. Restricting
the equation to x = 0 and x = 1 gives a closed linear system for the traces
that calC actually reads; each row is a damped, coupled trace evaluated at a
shifted time. Once the traces are known the interior is u = calC(traces) + f.

For reflection couplings the system splits into two blocks,
    V = K W + f_V   (traces at x=1 of components entering at x=0)
    W = L V + f_W   (traces at x=0 of components entering at x=1)
and either Schur complement I - K L or I - L K is solved, whichever is
better conditioned.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ResonanceError
from .field import Field, periodic_kernel, shift_matrix
from .operators import CharacteristicFrame, get_frame

RESONANCE_FLOOR = 1e-10


def _mean_free_basis(n_t: int, blocks: int) -> np.ndarray:
    q = sla.null_space(np.ones((1, n_t)))
    return np.kron(np.eye(blocks), q)


@dataclass
class TraceCondition:
    sigma_min: float
    sigma_max: float
    cond: float
    sigma_min_nonzero: float
    min_mode_multiplier: float | None
    kind: str
    size: int

    def to_dict(self):
        return {k: (None if v is None else (float(v) if not isinstance(v, (str, int)) else v))
                for k, v in self.__dict__.items()}


class TraceSystem:
    """Dense trace system of I - calC for a frame; LU factorization is cached.

    Attributes: kind ('empty', 'reduced-right', 'reduced-left', 'full'),
    size, matrix, multipliers (per-mode matrices for t-independent
    coefficients, else None) and the singular-value summary.
    """

    def __init__(self, frame: CharacteristicFrame, method: str = "dense"):
        self.frame = frame
        self.method = method
        self.lam = frame.lam
        n_t = frame.grid.n_t
        self.n_t = n_t
        used = frame.used_traces
        self.used = used
        blocks = self._blocks(used)
        self.M = blocks
        p = frame.p
        V = [(k, s) for (k, s) in used if s == 1 and k < p.m]
        W = [(k, s) for (k, s) in used if s == 0 and k >= p.m]
        reflection = p.coupling.kind == "reflection" and set(V) | set(W) == set(used)
        if not used:
            self.kind = "empty"
            self.matrix = np.zeros((0, 0))
        elif reflection and V and W:
            iV = [used.index(x) for x in V]
            iW = [used.index(x) for x in W]
            K = np.block([[blocks[a][b] for b in iW] for a in iV])
            L = np.block([[blocks[a][b] for b in iV] for a in iW])
            A1 = np.eye(K.shape[0]) - K @ L
            A2 = np.eye(L.shape[0]) - L @ K
            s1 = np.linalg.svd(A1, compute_uv=False)
            s2 = np.linalg.svd(A2, compute_uv=False)
            c1 = s1[0] / max(s1[-1], 1e-300)
            c2 = s2[0] / max(s2[-1], 1e-300)
            self.K, self.L, self.iV, self.iW = K, L, iV, iW
            if c1 <= c2:
                self.kind, self.matrix, self._sv = "reduced-right", A1, s1
            else:
                self.kind, self.matrix, self._sv = "reduced-left", A2, s2
        else:
            self.kind = "full"
            nb = len(used)
            full = np.eye(nb * n_t) - np.block([[blocks[a][b] for b in range(nb)] for a in range(nb)])
            self.matrix = full
        if self.kind == "full" or self.kind == "empty":
            self._sv = (np.linalg.svd(self.matrix, compute_uv=False) if self.matrix.size
                        else np.ones(1))
        self.size = self.matrix.shape[0]
        self._lu = None

    # ------------------------------------------------------------ assembly
    def _blocks(self, used):
        """blocks[a][b]: n_t x n_t matrix mapping trace used[b] into the calC trace used[a]."""
        fr = self.frame
        n_t = self.n_t
        out = [[np.zeros((n_t, n_t)) for _ in used] for _ in used]
        for a, (j, s) in enumerate(used):
            col = 0 if s == 0 else fr.grid.n_x - 1
            S = shift_matrix(n_t, fr.delta[j, col])
            for b, (k, sk) in enumerate(used):
                if fr.active[j, k, sk]:
                    out[a][b] = fr.coefC[j, k, sk, :, col][:, None] * S
        return out

    @property
    def sigma_min(self) -> float:
        return float(self._sv[-1])

    @property
    def sigma_max(self) -> float:
        return float(self._sv[0])

    def t_independent(self, rtol: float = 1e-12) -> bool:
        fr = self.frame
        for (j, s) in self.used:
            col = 0 if s == 0 else fr.grid.n_x - 1
            c = fr.coefC[j, :, :, :, col]
            scale = max(np.abs(c).max(), 1e-300)
            if np.abs(c - c[..., :1]).max() > rtol * scale:
                return False
        return True

    def multipliers(self):
        """Per-mode matrices of the chosen trace matrix when it is block circulant, else None.

        Returns an array (n_t, b, b) indexed by discrete frequency (FFT order).
        """
        if self.kind == "empty" or not self.t_independent():
            return None
        n_t = self.n_t
        b = self.size // n_t
        A = self.matrix.reshape(b, n_t, b, n_t)
        first_cols = A[:, :, :, 0]                  # (b, n_t, b)
        mult = np.fft.fft(first_cols, axis=1)       # (b, n_t, b)
        return np.transpose(mult, (1, 0, 2))

    def min_mode_multiplier(self):
        mult = self.multipliers()
        if mult is None:
            return None
        n_t = self.n_t
        sv = [np.linalg.svd(mult[k], compute_uv=False)[-1] for k in range(1, n_t // 2)]
        return float(min(sv))

    def sigma_min_nonzero(self) -> float:
        """Smallest singular value on inputs with zero time-mean in every block."""
        if self.kind == "empty":
            return 1.0
        b = self.size // self.n_t
        Q = _mean_free_basis(self.n_t, b)
        return float(np.linalg.svd(self.matrix @ Q, compute_uv=False)[-1])

    def condition(self) -> TraceCondition:
        smin, smax = self.sigma_min, self.sigma_max
        return TraceCondition(
            sigma_min=smin, sigma_max=smax,
            cond=smax / smin if smin > 0 else float("inf"),
            sigma_min_nonzero=self.sigma_min_nonzero(),
            min_mode_multiplier=self.min_mode_multiplier(),
            kind=self.kind, size=self.size)

    # --------------------------------------------------------------- solve
    def check(self):
        # the identity part sets a unit scale; at exact resonance the whole matrix may vanish
        if self.kind != "empty" and self.sigma_min < RESONANCE_FLOOR * max(self.sigma_max, 1.0):
            raise ResonanceError(self.lam, self.sigma_min, self.sigma_max)

    def _factor(self):
        if self._lu is None:
            self.check()
            self._lu = sla.lu_factor(self.matrix)
        return self._lu

    def _solve_matrix(self, rhs):
        if self.method == "neumann":
            x = self._neumann(rhs)
            if x is not None:
                return x
        return sla.lu_solve(self._factor(), rhs)

    def _neumann(self, rhs, tol=1e-14, max_iter=2000):
        """x = (I - B) x + rhs iteration with B = I - matrix; None if it fails to converge."""
        self.check()
        B = np.eye(self.size) - self.matrix
        x = rhs.copy()
        scale = max(np.abs(rhs).max(), 1e-300)
        for _ in range(max_iter):
            nxt = B @ x + rhs
            if np.abs(nxt - x).max() <= tol * scale:
                return nxt
            x = nxt
        return None

    def solve_traces(self, f_traces: np.ndarray) -> np.ndarray:
        """Trace values (..., n, 2, n_t) of the solution of u - calC u = f."""
        n_t = self.n_t
        out = np.zeros_like(f_traces)
        if self.kind == "empty":
            return out
        lead = f_traces.shape[:-3]
        fu = np.stack([f_traces[..., k, s, :] for (k, s) in self.used], axis=-2)  # (..., U, n_t)
        fu = fu.reshape(lead + (-1,))
        flat = fu.reshape(-1, fu.shape[-1]).T       # (U*n_t, batch)
        if self.kind in ("reduced-right", "reduced-left"):
            iV, iW = self.iV, self.iW
            def pick(idx):
                return np.concatenate([flat[i * n_t:(i + 1) * n_t] for i in idx], axis=0)
            fV, fW = pick(iV), pick(iW)
            if self.kind == "reduced-right":
                Vs = self._solve_matrix(fV + self.K @ fW)
                Ws = self.L @ Vs + fW
            else:
                Ws = self._solve_matrix(fW + self.L @ fV)
                Vs = self.K @ Ws + fV
            sol = np.empty_like(flat)
            for pos, i in enumerate(iV):
                sol[i * n_t:(i + 1) * n_t] = Vs[pos * n_t:(pos + 1) * n_t]
            for pos, i in enumerate(iW):
                sol[i * n_t:(i + 1) * n_t] = Ws[pos * n_t:(pos + 1) * n_t]
        else:
            sol = self._solve_matrix(flat)
        sol = sol.T.reshape(lead + (len(self.used), n_t))
        for a, (k, s) in enumerate(self.used):
            out[..., k, s, :] = sol[..., a, :]
        return out

    def solve(self, f_values: np.ndarray) -> np.ndarray:
        """Raw-array solve of (I - calC) u = f for f of shape (..., n, n_t, n_x)."""
        f_tr = np.stack([f_values[..., 0], f_values[..., -1]], axis=-2)
        traces = self.solve_traces(f_tr)
        return self.frame.apply_calC_traces(traces) + f_values

    # ---------------------------------------------------------- norm bound
    def norm_bound(self) -> float:
        """d with |(I - calC)^{-1} f|_0 <= d |f|_0 on the grid (infinity-norm estimate)."""
        fr = self.frame
        if self.kind == "empty":
            return 1.0
        n_t = self.n_t
        tg = fr.grid.t
        # |calC(traces)|_inf <= cmap * |traces|_inf
        cmap = 0.0
        for j in range(fr.p.n):
            leb = np.array([np.abs(periodic_kernel(n_t, d - tg)).sum() for d in fr.delta[j]])
            rows = np.abs(fr.coefC[j]).sum(axis=(0, 1)) * leb[None, :]
            cmap = max(cmap, float(rows.max()))
        inv = np.linalg.inv(self.matrix)
        ninv = np.abs(inv).sum(axis=1).max()
        if self.kind == "full":
            tr = ninv
        else:
            Kn = np.abs(self.K).sum(axis=1).max()
            Ln = np.abs(self.L).sum(axis=1).max()
            if self.kind == "reduced-right":
                first = ninv * (1 + Kn)
                tr = max(first, Ln * first + 1)
            else:
                first = ninv * (1 + Ln)
                tr = max(first, Kn * first + 1)
        return float(1.0 + cmap * tr)


def build_trace_system(p, lam, u0: Field, method: str = "dense") -> TraceSystem:
    return TraceSystem(get_frame(p, lam, u0), method=method)


def solve_I_minus_calC(p, lam, u0: Field, f: Field, method: str = "dense") -> Field:
    """u with u - calC(lam) u = f; raises ResonanceError near singular trace systems."""
    ts = build_trace_system(p, lam, u0, method=method)
    return Field(f.grid, ts.solve(f.values))


def trace_condition(p, lam, u0: Field) -> TraceCondition:
    return build_trace_system(p, lam, u0).condition()

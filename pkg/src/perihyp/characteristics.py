"""Characteristic curves, travel times and damping factors by Gauss quadrature.

For family j the characteristic through (t, x) is
    tau_j(t, x, xi) = t + int_x^xi d eta / a_j(eta),
and the damping factor is
    c_j(t, x, xi) = exp int_x^xi  d_{u_j} b_j(tau_j, eta, v(tau_j, eta)) / a_j(eta) d eta.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import SingularSpeedError
from .field import Field

SPEED_FLOOR = 1e-12


@dataclass(frozen=True)
class QuadratureRule:
    """Composite Gauss-Legendre rule: `order` points on panels of width <= 1/panels_per_unit."""

    order: int = 4
    panels_per_unit: int = 32

    @cached_property
    def reference(self):
        s, w = np.polynomial.legendre.leggauss(self.order)
        return s, w

    def nodes_weights(self, a: float, b: float):
        """Nodes and signed weights for int_a^b."""
        if a == b:
            return np.zeros(0), np.zeros(0)
        npan = max(1, int(np.ceil(abs(b - a) * self.panels_per_unit - 1e-12)))
        edges = np.linspace(a, b, npan + 1)
        s, w = self.reference
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes = (mid[:, None] + half[:, None] * s[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return nodes, weights


@lru_cache(maxsize=16)
def _integration_matrix(order: int) -> np.ndarray:
    """W[q, r] = int_{-1}^{s_q} l_r(s) ds for the Lagrange basis on Gauss nodes."""
    s, _ = np.polynomial.legendre.leggauss(order)
    V = np.vander(s, order, increasing=True)
    i = np.arange(order)
    A = (s[:, None] ** (i + 1) - (-1.0) ** (i + 1)) / (i + 1)
    return A @ np.linalg.inv(V)


@dataclass(frozen=True)
class PanelLayout:
    """Gauss panels aligned with the space grid (each grid cell split evenly).

    Node arrays are ordered panel by panel, `panels_per_cell` panels per grid
    cell, so panel sums can be accumulated onto grid nodes directly.
    """

    z: np.ndarray
    w: np.ndarray
    half: np.ndarray
    order: int
    panels_per_cell: int
    n_x: int

    @property
    def n_panels(self) -> int:
        return self.half.size

    def integration_matrix(self) -> np.ndarray:
        return _integration_matrix(self.order)


@lru_cache(maxsize=32)
def panel_layout(n_x: int, rule: QuadratureRule = QuadratureRule()) -> PanelLayout:
    h = 1.0 / (n_x - 1)
    per_cell = max(1, int(np.ceil(h * rule.panels_per_unit - 1e-12)))
    edges = np.linspace(0.0, 1.0, (n_x - 1) * per_cell + 1)
    xg = np.linspace(0.0, 1.0, n_x)
    edges[::per_cell] = xg
    s, w = rule.reference
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    z = (mid[:, None] + half[:, None] * s[None, :]).ravel()
    ww = (half[:, None] * w[None, :]).ravel()
    for arr in (z, ww, half):
        arr.setflags(write=False)
    return PanelLayout(z=z, w=ww, half=half, order=rule.order, panels_per_cell=per_cell, n_x=n_x)


def _check_speed(a, j):
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)) or np.any(np.abs(a) < SPEED_FLOOR):
        raise SingularSpeedError(f"speed of family {j} is below {SPEED_FLOOR:g} or not finite")
    return a


class SpeedProfile:
    """Cumulative travel time Theta_j(x) = int_0^x 1/a_j for fixed (j, lambda).

    Breakpoint values are cached; a partial Gauss panel completes the
    integral at arbitrary x.
    """

    def __init__(self, speed, j: int, lam: float, rule: QuadratureRule = QuadratureRule()):
        self.speed = speed
        self.j = j
        self.lam = float(lam)
        self.rule = rule
        npan = rule.panels_per_unit
        self.edges = np.linspace(0.0, 1.0, npan + 1)
        nodes, weights = rule.nodes_weights(0.0, 1.0)
        inv = 1.0 / _check_speed(self._a(nodes), j)
        signs = np.sign(np.concatenate([inv, _check_speed(self._a(self.edges), j)]))
        if np.any(signs != signs[0]):
            raise SingularSpeedError(f"speed of family {j} changes sign on [0, 1]")
        panel_sums = (weights * inv).reshape(npan, rule.order).sum(axis=1)
        self.cum = np.concatenate([[0.0], np.cumsum(panel_sums)])

    def _a(self, x):
        return np.asarray(self.speed(np.asarray(x, float), self.lam)[self.j], dtype=float)

    def theta(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x < -1e-14) or np.any(x > 1 + 1e-14):
            raise ValueError("x outside [0, 1]")
        xf = np.clip(x.ravel(), 0.0, 1.0)
        npan = self.rule.panels_per_unit
        k = np.minimum((xf * npan).astype(int), npan - 1)
        left = self.edges[k]
        s, w = self.rule.reference
        half = 0.5 * (xf - left)
        mid = 0.5 * (xf + left)
        pts = mid[:, None] + half[:, None] * s[None, :]
        inv = 1.0 / _check_speed(self._a(pts), self.j)
        part = (half[:, None] * w[None, :] * inv).sum(axis=1)
        return (self.cum[k] + part).reshape(x.shape)


def speed_profile(p, j: int, lam: float, rule: QuadratureRule = QuadratureRule()) -> SpeedProfile:
    """Profile for family j at lam, memoized on the problem object."""
    cache = p.__dict__.setdefault("_profile_cache", {})
    key = (j, float(lam), rule)
    prof = cache.get(key)
    if prof is None:
        prof = SpeedProfile(p.speed, j, lam, rule)
        cache[key] = prof
    return prof


def travel_time(p, j: int, x, xi, lam: float, rule: QuadratureRule = QuadratureRule()):
    """int_x^xi d eta / a_j(eta, lam)."""
    prof = speed_profile(p, j, lam, rule)
    out = prof.theta(xi) - prof.theta(x)
    return float(out) if np.ndim(out) == 0 else out


def tau(p, j: int, t, x, xi, lam: float, rule: QuadratureRule = QuadratureRule()):
    """Time at which the j-th characteristic through (t, x) reaches xi."""
    return t + travel_time(p, j, x, xi, lam, rule)


def damping(p, j: int, t: float, x: float, xi: float, lam: float, v: Field,
            rule: QuadratureRule = QuadratureRule()) -> float:
    """Damping factor c_j(t, x, xi) by direct quadrature along the curve."""
    eta, w = rule.nodes_weights(float(x), float(xi))
    if eta.size == 0:
        return 1.0
    times = tau(p, j, t, x, eta, lam, rule)
    vals = v.sample(times, eta)
    aux = None
    if p.aux_map is not None:
        aux = p.aux_map(v, lam).sample(times, eta)
    jac = p.eval_jacobian(times, eta, lam, vals, aux)
    a = _check_speed(p.speed(eta, lam)[j], j)
    return float(np.exp(np.sum(w * jac[j, j] / a)))

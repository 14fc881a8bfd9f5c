"""Flat Grauert tube over the torus: continuation, heat operator, T_hol, the conjugated operator P_rho.

Tube points are z = x + i xi with x on the torus and xi in a box |xi_j| <= tau.
For u = sum c_k e^{i kappa k.x}

    u^C(x + i xi) = sum_k c_k e^{-kappa k.xi} e^{i kappa k.x},
    T_hol u       = h^{-n/4} e^{-1/2h} e^{-rho/h} u^C,      rho = |xi|^2 / 2,

and e^{rho/h} T_hol u is holomorphic, hence harmonic, so
P_rho = e^{-rho/h} (-h^2 Delta_dbar) e^{rho/h} annihilates it.
With Delta_dbar = 2 (Delta_x + Delta_xi) the conjugation expands to

    P_rho = -h^2 Delta_dbar - 4 h xi.d_xi - h Delta_dbar(rho) - 4 rho,  Delta_dbar(rho) = 2n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import FourierField, TorusGrid

LOG_BUDGET = 700.0


def heat_apply(u: FourierField, t: Optional[float] = None) -> FourierField:
    """e^{(t/2) Delta}: c_k -> exp(-t |kappa k|^2 / 2) c_k; t defaults to h."""
    g = u.grid
    t = g.h if t is None else t
    lam = sum((g.kappa * k) ** 2 for k in g.klattice())
    return FourierField(g, np.exp(-0.5 * t * lam) * u.coeffs, u.label, u.real)


def continuation_tail(u: FourierField, xi, band: int = 2) -> float:
    """Bound on the continuation error from the outermost `band` lattice shells."""
    g = u.grid
    xi = np.atleast_1d(np.asarray(xi, float))
    ks = g.klattice()
    edge = np.zeros(g.shape, bool)
    for k in ks:
        edge |= np.abs(k) >= g.N // 2 - band
    growth = np.exp(-g.kappa * sum(k * x for k, x in zip(ks, xi)))
    return float(np.sum(np.abs(u.coeffs[edge]) * growth[edge]))


def holomorphic_continue(u: FourierField, xi, tol: float = 1e-10) -> np.ndarray:
    """u^C(x + i xi) on the x grid for a fixed imaginary part xi (one value per axis)."""
    g = u.grid
    xi = np.atleast_1d(np.asarray(xi, float))
    if len(xi) != g.n:
        raise ValueError("xi needs one component per axis")
    tail = continuation_tail(u, xi)
    scale = max(float(np.sum(np.abs(u.coeffs))), 1e-300)
    if tail > tol * scale:
        raise ValueError(f"tube radius exceeds coefficient decay: tail {tail:.3g}")
    ks = g.klattice()
    damp = np.exp(-g.kappa * sum(k * x for k, x in zip(ks, xi)))
    out = FourierField(g, u.coeffs * damp).values()
    kmax = g.kappa * max(float(np.max(np.abs(k[u.coeffs != 0]))) if np.any(u.coeffs != 0) else 0.0 for k in ks)
    bound = float(np.sum(np.abs(u.coeffs))) * math.exp(kmax * float(np.sum(np.abs(xi))))
    assert np.max(np.abs(out)) <= bound * (1 + 1e-12) + 1e-300
    return out


def cauchy_riemann_residual(u: FourierField, xi, step: float = 1e-4, axis: int = 0) -> float:
    """max |d_x u^C + i d_xi u^C| / max |u^C| along one complex axis (central differences in xi)."""
    g = u.grid
    xi = np.atleast_1d(np.asarray(xi, float))
    e = np.zeros(g.n)
    e[axis] = step
    f = holomorphic_continue(u, xi)
    dxi = (holomorphic_continue(u, xi + e) - holomorphic_continue(u, xi - e)) / (2 * step)
    F = FourierField.from_values(g, f, real=False)
    k = g.klattice()[axis]
    dx = FourierField(g, 1j * g.kappa * k * F.coeffs).values()
    return float(np.max(np.abs(dx + 1j * dxi)) / np.max(np.abs(f)))


def r2_complex(z, y, period: float = 2.0):
    """Per-axis complexified squared distance sum (z_j - y_j)^2, nearest image in the real part."""
    tot = 0.0
    for zj, yj in zip(z, y):
        d = zj - yj
        dr = (np.real(d) + period / 2) % period - period / 2
        tot = tot + (dr + 1j * np.imag(d)) ** 2
    return tot


def rho(xi):
    return 0.5 * sum(np.asarray(a, float) ** 2 for a in xi)


def kahler_checks(xi_samples, x_samples, period: float = 2.0) -> dict:
    """Compare 2 rho with Re r2(z, Re z) and r2(z, conj z)/4 on samples."""
    z = [x + 1j * k for x, k in zip(x_samples, xi_samples)]
    two_rho = 2 * rho(xi_samples)
    a = np.real(r2_complex(z, x_samples, period))
    b = r2_complex(z, [np.conj(c) for c in z], period) / 4
    return {"plus_re": float(np.max(np.abs(two_rho - a))),
            "minus_re": float(np.max(np.abs(two_rho + a))),
            "minus_quarter_conj": float(np.max(np.abs(two_rho + b)))}


@dataclass(frozen=True)
class TubeGrid:
    base: TorusGrid
    tau: float
    M: int

    def __post_init__(self):
        if not self.tau > 1:
            raise ValueError("tube radius tau must exceed 1 (the energy shell |xi| = 1 must lie inside)")
        if self.M < 9:
            raise ValueError("need at least 9 xi nodes")
        if self.tau**2 / (2 * self.base.h) > LOG_BUDGET:
            raise ValueError("e^{rho/h} weight exceeds the log-space budget")

    @property
    def n(self) -> int:
        return self.base.n

    def xi_axis(self) -> np.ndarray:
        return np.linspace(-self.tau, self.tau, self.M)

    @property
    def dxi(self) -> float:
        return 2 * self.tau / (self.M - 1)

    def xi_weights(self) -> np.ndarray:
        w = np.full(self.M, self.dxi)
        w[0] = w[-1] = self.dxi / 2
        return w

    def coords(self):
        """Meshgrid (x..., xi...) of shape N^n x M^n."""
        n = self.n
        axes = [self.base.axis()] * n + [self.xi_axis()] * n
        return np.meshgrid(*axes, indexing="ij")

    def cell_weights(self) -> np.ndarray:
        n = self.n
        w = self.base.weight * np.ones(self.base.shape)
        wx = self.xi_weights()
        W = w
        for _ in range(n):
            W = np.multiply.outer(W, wx)
        return W

    def norm(self, F) -> float:
        return float(np.sqrt(np.sum(np.abs(F) ** 2 * self.cell_weights())))


def make_tube(base: TorusGrid, tau: float = 1.5, refine: float = 16.0) -> TubeGrid:
    M = int(math.ceil(2 * tau * refine / math.sqrt(base.h))) + 1
    return TubeGrid(base, tau, M)


def _slices_log_sum(tube: TubeGrid, coeffs, logw):
    """sum_k c_k exp(logw_k(xi)) e^{i kappa k.x} over the tube, per xi node, in log-space.

    logw(xi_vec) returns the log weight array on the lattice for one xi node;
    returns (values scaled by exp(-m), m) with m the per-node max exponent.
    """
    g = tube.base
    n = g.n
    xs = tube.xi_axis()
    out = np.zeros(g.shape + (tube.M,) * n, dtype=complex)
    mx = np.zeros((tube.M,) * n)
    ph = g.phase() * g.size
    active = coeffs != 0
    for idx in np.ndindex(*((tube.M,) * n)):
        xi = [xs[i] for i in idx]
        L = logw(xi)
        m = float(np.max(L[active])) if np.any(active) else 0.0
        c = np.where(active, coeffs * np.exp(np.where(active, L - m, 0.0)), 0.0)
        out[(Ellipsis,) + idx] = np.fft.ifftn(c * ph)
        mx[idx] = m
    return out, mx


def t_hol(u: FourierField, tube: TubeGrid, normalize: bool = True) -> dict:
    """T_hol u by two routes: continuation of the heat-smoothed field, and e^{-1/2h} times the raw continuation.

    For an exact eigenfunction of -h^2 Delta at E = 1 both agree to rounding.
    """
    g = tube.base
    h, n = g.h, g.n
    ks = g.klattice()
    lam = sum((g.kappa * k) ** 2 for k in ks)
    pref = h ** (-n / 4) if normalize else 1.0

    def heat_route(xi):
        return -0.5 * h * lam - g.kappa * sum(k * x for k, x in zip(ks, xi))

    def raw_route(xi):
        return -g.kappa * sum(k * x for k, x in zip(ks, xi))

    A, ma = _slices_log_sum(tube, u.coeffs, heat_route)
    B, mb = _slices_log_sum(tube, u.coeffs, raw_route)
    coords = tube.coords()
    r = rho(coords[n:])
    ea = np.exp(np.broadcast_to(ma, A.shape) - r / h)
    eb = np.exp(np.broadcast_to(mb, B.shape) - r / h - 1.0 / (2 * h))
    TA = pref * A * ea
    TB = pref * B * eb
    scale = max(float(np.max(np.abs(TB))), 1e-300)
    return {"T": TA, "T_alt": TB, "deviation": float(np.max(np.abs(TA - TB)) / scale),
            "norm": tube.norm(TA)}


def _d_x_tube(F, tube: TubeGrid, axis: int, order: int = 1):
    g = tube.base
    k = g.kappa * np.fft.fftfreq(g.N, 1.0 / g.N)
    shape = [1] * F.ndim
    shape[axis] = g.N
    mult = ((1j * k) ** order).reshape(shape)
    return np.fft.ifft(np.fft.fft(F, axis=axis) * mult, axis=axis)


_FD4_C1 = np.array([1, -8, 0, 8, -1]) / 12.0
_FD4_C2 = np.array([-1, 16, -30, 16, -1]) / 12.0
# one-sided fourth-order stencils for the first two and last two nodes
_FD4_L1 = [np.array([-25, 48, -36, 16, -3]) / 12.0, np.array([-3, -10, 18, -6, 1]) / 12.0]
_FD4_L2 = [np.array([45, -154, 214, -156, 61, -10]) / 12.0, np.array([10, -15, -4, 14, -6, 1]) / 12.0]


def fd4(F, axis: int, dx: float, order: int = 1):
    """Fourth-order finite differences along one axis, one-sided at the ends."""
    F = np.moveaxis(F, axis, 0)
    M = F.shape[0]
    out = np.zeros_like(F)
    if order == 1:
        C, L = _FD4_C1, _FD4_L1
    else:
        C, L = _FD4_C2, _FD4_L2
    for j, c in enumerate(C):
        out[2:M - 2] += c * F[j:M - 4 + j]
    sgn = -1.0 if order == 1 else 1.0
    for i, st in enumerate(L):
        w = len(st)
        out[i] = np.tensordot(st, F[:w], axes=(0, 0))
        out[M - 1 - i] = sgn * np.tensordot(st, F[::-1][:w], axes=(0, 0))
    out = out / dx**order
    return np.moveaxis(out, 0, axis)


def conjugated_operator_apply(F, tube: TubeGrid, convention: str = "dbar") -> np.ndarray:
    """Apply P_rho to a tube array: spectral in x, fourth-order differences in xi.

    convention 'dbar'    : -h^2 Delta_dbar - 4h grad rho - h Delta_dbar rho - 4 rho (exact conjugation);
    convention 'gtilde'  : -h^2 Delta - 2h grad rho - h Delta rho - 2 rho (conjugation of -h^2 Delta);
    convention 'literal' : -h^2 Delta_dbar - 2h grad rho - h Delta_dbar rho (expanded form without the rho term).
    """
    g = tube.base
    h, n = g.h, g.n
    coords = tube.coords()
    xi = coords[n:]
    lap = sum(_d_x_tube(F, tube, j, 2) for j in range(n)) + sum(fd4(F, n + j, tube.dxi, 2) for j in range(n))
    grad = sum(x * fd4(F, n + j, tube.dxi, 1) for j, x in enumerate(xi))
    r = rho(xi)
    if convention == "dbar":
        return -2 * h**2 * lap - 4 * h * grad - 2 * n * h * F - 4 * r * F
    if convention == "gtilde":
        return -h**2 * lap - 2 * h * grad - n * h * F - 2 * r * F
    if convention == "literal":
        return -2 * h**2 * lap - 2 * h * grad - 2 * n * h * F
    raise ValueError(f"unknown convention {convention!r}")


def grad_rho_checks(tube: TubeGrid) -> dict:
    """grad rho = xi.d_xi applied to rho returns 2 rho; |grad rho|^2 = 2 rho."""
    n = tube.n
    c = tube.coords()
    xi = c[n:]
    r = rho(xi)
    Xr = sum(x * fd4(r, n + j, tube.dxi, 1) for j, x in enumerate(xi))
    g2 = sum(x**2 for x in xi)
    return {"X_rho": float(np.max(np.abs(Xr - 2 * r))), "gradnorm": float(np.max(np.abs(g2 - 2 * r)))}


def p_rho_residual(u: FourierField, tube: TubeGrid, convention: str = "dbar") -> float:
    """||P_rho T_hol u|| / ||T_hol u|| on the tube grid."""
    T = t_hol(u, tube)["T"]
    R = conjugated_operator_apply(T, tube, convention)
    return tube.norm(R) / tube.norm(T)


# ---- Fermi charts for flat hypersurfaces in the tube -------------------------

@dataclass
class FermiChart:
    """kind 'plane': beta = N.(z - z0) with unit N = (N_x, N_xi) in R^{2n};
    kind 'xi_sphere': beta = |xi| - c.
    """

    kind: str
    n: int
    Nx: tuple = ()
    Nxi: tuple = ()
    offset: float = 0.0
    c: float = 1.0
    beta_max: float = 0.5

    def __post_init__(self):
        if self.kind == "plane":
            nrm = math.sqrt(sum(a * a for a in self.Nx) + sum(a * a for a in self.Nxi))
            if abs(nrm - 1) > 1e-12:
                raise ValueError("plane normal must be a unit vector")
        elif self.kind == "xi_sphere":
            if not self.beta_max < self.c:
                raise ValueError("Fermi chart not injective: beta_max must stay below the focal radius c")
        else:
            raise ValueError(f"unknown chart kind {self.kind!r}")

    def beta(self, x, xi):
        if self.kind == "plane":
            return sum(a * b for a, b in zip(self.Nx, x)) + sum(a * b for a, b in zip(self.Nxi, xi)) - self.offset
        return np.sqrt(sum(np.asarray(k, float) ** 2 for k in xi)) - self.c

    def normal(self, x, xi):
        """(d_beta x, d_beta xi) at the point."""
        if self.kind == "plane":
            return [np.full(np.shape(x[0]), a, float) for a in self.Nx], \
                   [np.full(np.shape(x[0]), a, float) for a in self.Nxi]
        r = np.sqrt(sum(np.asarray(k, float) ** 2 for k in xi))
        return [np.zeros(np.shape(r)) for _ in range(self.n)], [np.asarray(k, float) / r for k in xi]

    def grad_defect(self, x, xi, step: float = 1e-6) -> float:
        """max | |grad beta| - 1 | by central differences."""
        tot = 0.0
        for j in range(self.n):
            xp = [np.array(a, float) for a in x]
            xm = [np.array(a, float) for a in x]
            xp[j] += step
            xm[j] -= step
            tot = tot + ((self.beta(xp, xi) - self.beta(xm, xi)) / (2 * step)) ** 2
        for j in range(self.n):
            kp = [np.array(a, float) for a in xi]
            km = [np.array(a, float) for a in xi]
            kp[j] += step
            km[j] -= step
            tot = tot + ((self.beta(x, kp) - self.beta(x, km)) / (2 * step)) ** 2
        return float(np.max(np.abs(np.sqrt(tot) - 1)))

    def rho_beta(self, x, xi):
        """Normal part of grad rho = xi.d_xi: rho_beta = xi . d_beta xi."""
        _, nxi = self.normal(x, xi)
        return sum(np.asarray(k, float) * m for k, m in zip(xi, nxi))

    def xi_dot_dbeta_x(self, x, xi):
        nx, _ = self.normal(x, xi)
        return sum(np.asarray(k, float) * m for k, m in zip(xi, nx))

    def tangential_laplacian(self) -> dict:
        """Coefficients of Delta_Sigma at beta = 0 in the chart's tangential coordinates."""
        if self.kind == "plane":
            return {"kind": "flat", "curvature_correction": 0.0}
        if self.n == 1:
            return {"kind": "flat", "curvature_correction": 0.0, "note": "Sigma = two lines xi = +-c"}
        return {"kind": "torus x circle", "angular_coefficient": 1.0 / self.c**2,
                "arc_length_coefficient": 1.0}

    def metric_determinant(self) -> float:
        return 1.0


def symbol_q(chart: FermiChart, a, x, xi, tol: float = 1e-8) -> dict:
    """q1 and q2 at a point of Sigma on the energy shell |xi| = 1 (flat tube, b0 = 1).

    q2 = a ((xi.d_beta x)^2 - rho_beta (xi.d_beta x));
    q1(x, eta) = 8 a(x, -2 eta) (d_beta phi)(x, -2 eta) (eta . d_x beta), with eta the
    point's frequency and the surface-delta limit of eps^{-1} chi'(beta/eps) taken as 1.
    For phi = i(r2(z, y)/2 + rho(z)) at y = x one has d_x phi = -xi and d_xi phi = 0,
    so d_beta phi = -(d_beta x) . xi.
    """
    x = [np.asarray(v, float) for v in x]
    xi = [np.asarray(v, float) for v in xi]
    if abs(float(np.max(np.abs(chart.beta(x, xi))))) > tol or \
            float(np.max(np.abs(sum(k**2 for k in xi) - 1))) > tol:
        raise ValueError("point is not on Sigma intersected with the energy shell")
    b0 = 1.0
    s = chart.xi_dot_dbeta_x(x, xi)
    q2 = a(x, xi) * b0**2 * (s**2 - chart.rho_beta(x, xi) * s)
    nx, _ = chart.normal(x, xi)
    xi_sub = [-2 * e for e in xi]
    dphi = -sum(m * k for m, k in zip(nx, xi_sub))
    eta_dx_beta = sum(e * m for e, m in zip(xi, nx))
    q1 = 8 * a(x, xi_sub) * b0**2 * dphi * eta_dx_beta
    return {"q1": float(np.real(q1)), "q2": float(np.real(q2))}

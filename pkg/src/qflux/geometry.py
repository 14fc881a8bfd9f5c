"""Hamiltonians, flows, energy-shell measures and cross-section integrals.

Phase-space points are passed as lists of arrays: x = [x1, x2], xi = [xi1, xi2].

Two normalizations of the shell measure are supported:
  'surface' - dx times Euclidean surface measure on the fibre shell,
              |grad_xi p| dx dxi / dp  (area(T^2) * 2*pi for |xi|^2 - 1);
  'leray'   - dx dxi / dp.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Optional

import numpy as np

from .core import SymbolFn
from .expr import parse_param_expr, parse_symbol


@dataclass
class Hamiltonian:
    """p(x, xi) = |xi|^2 + V(x) - E when V is given (kinetic form), else a general symbol."""

    n: int
    E: float = 1.0
    V: Optional[Callable] = None
    gradV: Optional[Callable] = None
    p_general: Optional[SymbolFn] = None
    fd_step: float = 1e-6

    @property
    def kinetic(self) -> bool:
        return self.p_general is None

    def p(self, x, xi):
        if self.p_general is not None:
            return np.real(self.p_general(x, xi))
        val = sum(np.asarray(k, float) ** 2 for k in xi) - self.E
        if self.V is not None:
            val = val + self.V(x)
        return val

    def _fd(self, x, xi, which, j):
        e = self.fd_step
        xp = [np.array(a, float) for a in x]
        xm = [np.array(a, float) for a in x]
        kp = [np.array(a, float) for a in xi]
        km = [np.array(a, float) for a in xi]
        if which == "x":
            xp[j] = xp[j] + e
            xm[j] = xm[j] - e
        else:
            kp[j] = kp[j] + e
            km[j] = km[j] - e
        return (self.p(xp, kp) - self.p(xm, km)) / (2 * e)

    def p_x(self, x, xi):
        if self.kinetic:
            if self.V is None:
                return [np.zeros(np.shape(x[j])) for j in range(self.n)]
            if self.gradV is not None:
                return self.gradV(x)
        return [self._fd(x, xi, "x", j) for j in range(self.n)]

    def p_xi(self, x, xi):
        if self.kinetic:
            return [2.0 * np.asarray(k, float) for k in xi]
        return [self._fd(x, xi, "xi", j) for j in range(self.n)]


def free_hamiltonian(n: int = 2, E: float = 1.0) -> Hamiltonian:
    return Hamiltonian(n, E)


def hamiltonian_vector_field(H: Hamiltonian, x, xi):
    """(dx/dt, dxi/dt) = (d_xi p, -d_x p)."""
    px = H.p_x(x, xi)
    return H.p_xi(x, xi), [-a for a in px]


def flow(H: Hamiltonian, x0, xi0, t: float, dt: float = 1e-3, period: Optional[float] = 2.0):
    """Integrate the Hamilton flow; Stormer-Verlet for kinetic form, RK4 otherwise."""
    if dt > 1e-2:
        raise ValueError(f"step too large: dt={dt} > 1e-2")
    steps = max(1, int(round(abs(t) / dt)))
    dt = t / steps
    x = [np.array(a, float) for a in x0]
    xi = [np.array(a, float) for a in xi0]
    if H.kinetic:
        for _ in range(steps):
            px = H.p_x(x, xi)
            xi = [k - 0.5 * dt * g for k, g in zip(xi, px)]
            x = [a + dt * 2.0 * k for a, k in zip(x, xi)]
            px = H.p_x(x, xi)
            xi = [k - 0.5 * dt * g for k, g in zip(xi, px)]
    else:
        def f(z):
            xs, ks = z[: H.n], z[H.n:]
            dx, dk = hamiltonian_vector_field(H, xs, ks)
            return list(dx) + list(dk)

        z = x + xi
        for _ in range(steps):
            k1 = f(z)
            k2 = f([a + 0.5 * dt * b for a, b in zip(z, k1)])
            k3 = f([a + 0.5 * dt * b for a, b in zip(z, k2)])
            k4 = f([a + dt * b for a, b in zip(z, k3)])
            z = [a + dt / 6 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(z, k1, k2, k3, k4)]
        x, xi = z[: H.n], z[H.n:]
    if period is not None:
        x = [(a + period / 2) % period - period / 2 for a in x]
    return x, xi


def _shell_fixed_x(H, f, x_pts, eta, n_theta, n_r, normalization):
    """Thin-shell integral over {|p| < eta} at fixed x, divided by 2 eta."""
    vx = H.V(x_pts) if H.V is not None else np.zeros(np.shape(x_pts[0]))
    lo2 = np.maximum(H.E - vx - eta, 0.0)
    hi2 = H.E - vx + eta
    if np.any(hi2 <= 0):
        raise ValueError("shell empty at some base points")
    gr, gw = np.polynomial.legendre.leggauss(n_r)
    total = np.zeros(np.shape(x_pts[0]))
    if H.n == 1:
        # xi in two intervals sqrt(lo2)..sqrt(hi2), both signs
        a, b = np.sqrt(lo2), np.sqrt(hi2)
        for sgn in (1.0, -1.0):
            for r, w in zip(gr, gw):
                k = 0.5 * (b - a) * r + 0.5 * (b + a)
                wt = w * 0.5 * (b - a)
                jac = 2 * k if normalization == "surface" else 1.0
                total = total + wt * jac * f(x_pts, [sgn * k])
        return total / (2 * eta)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    a, b = np.sqrt(lo2), np.sqrt(hi2)
    for r, w in zip(gr, gw):
        rad = 0.5 * (b - a) * r + 0.5 * (b + a)
        wt = w * 0.5 * (b - a) * rad * (2 * np.pi / n_theta)
        jac = 2 * rad if normalization == "surface" else 1.0
        for t in th:
            total = total + wt * jac * f(x_pts, [rad * np.cos(t), rad * np.sin(t)])
    return total / (2 * eta)


def liouville_measure(H: Hamiltonian, f: Optional[Callable] = None, period: float = 2.0, n_x: int = 32,
                      n_theta: int = 128, n_r: int = 8, etas=(0.02, 0.01, 0.005),
                      normalization: str = "surface") -> dict:
    """Integral of f over {p = 0} by thin-shell quadrature with Richardson extrapolation in eta^2."""
    if not H.kinetic:
        raise ValueError("shell quadrature requires the kinetic-plus-potential form")
    if normalization not in ("surface", "leray"):
        raise ValueError("normalization must be 'surface' or 'leray'")
    f = f or (lambda x, xi: np.ones(np.shape(x[0])))
    ax = -period / 2 + period * (np.arange(n_x) + 0.5) / n_x
    xs = np.meshgrid(*([ax] * H.n), indexing="ij")
    w = (period / n_x) ** H.n
    vals = []
    for eta in etas:
        inner = _shell_fixed_x(H, f, xs, eta, n_theta, n_r, normalization)
        vals.append(float(np.sum(inner) * w))
    e2 = np.asarray(etas) ** 2
    A = np.vstack([np.ones_like(e2), e2]).T
    coef = np.linalg.lstsq(A, np.asarray(vals), rcond=None)[0]
    exact = None
    if H.V is None:
        exact = exact_free_shell(H, f, period, n_x, 4 * n_theta, normalization)
    return {"value": float(coef[0]), "raw": vals, "etas": list(etas), "exact_product": exact}


def exact_free_shell(H: Hamiltonian, f, period=2.0, n_x=32, n_theta=512, normalization="surface"):
    """V = 0 product form: uniform in x, uniform on the sphere |xi| = sqrt(E)."""
    R = np.sqrt(H.E)
    ax = -period / 2 + period * (np.arange(n_x) + 0.5) / n_x
    xs = np.meshgrid(*([ax] * H.n), indexing="ij")
    w = (period / n_x) ** H.n
    scale = 1.0 if normalization == "surface" else 1.0 / (2 * R)
    if H.n == 1:
        tot = f(xs, [np.full(xs[0].shape, R)]) + f(xs, [np.full(xs[0].shape, -R)])
        return float(np.sum(tot) * w * scale)
    tot = 0.0
    for t in 2 * np.pi * np.arange(n_theta) / n_theta:
        tot = tot + f(xs, [np.full(xs[0].shape, R * np.cos(t)), np.full(xs[0].shape, R * np.sin(t))])
    return float(np.sum(tot) * w * (2 * np.pi * R / n_theta) * scale)


@dataclass
class Patch:
    """Parametrization s -> (x(s), xi(s)) of a piece of Sigma within {p = 0}.

    nodes: list of parameter arrays (flattened tensor grid); weights: quadrature weights.
    tangents(s): list of tangent vectors, each (dx list, dxi list); may be None (finite differences).
    """

    chart: Callable
    nodes: list
    weights: np.ndarray
    tangents: Optional[Callable] = None
    fd_step: float = 1e-6

    def points(self):
        return self.chart(self.nodes)

    def tangent_vectors(self):
        if self.tangents is not None:
            return self.tangents(self.nodes)
        out = []
        for a in range(len(self.nodes)):
            sp = [np.array(s, float) for s in self.nodes]
            sm = [np.array(s, float) for s in self.nodes]
            sp[a] = sp[a] + self.fd_step
            sm[a] = sm[a] - self.fd_step
            (xp, kp), (xm, km) = self.chart(sp), self.chart(sm)
            out.append(([(p - m) / (2 * self.fd_step) for p, m in zip(xp, xm)],
                        [(p - m) / (2 * self.fd_step) for p, m in zip(kp, km)]))
        return out


@dataclass
class Hypersurface:
    n: int
    beta: Callable
    grad_beta: Optional[Callable] = None
    patches: list = field(default_factory=list)
    orientation: int = 1
    normalized: bool = True
    boundary: bool = False
    label: str = ""
    fd_step: float = 1e-6

    def beta_grad(self, x, xi):
        if self.grad_beta is not None:
            return self.grad_beta(x, xi)
        e = self.fd_step
        gx, gk = [], []
        for j in range(self.n):
            xp = [np.array(a, float) for a in x]
            xm = [np.array(a, float) for a in x]
            xp[j] = xp[j] + e
            xm[j] = xm[j] - e
            gx.append((self.beta(xp, xi) - self.beta(xm, xi)) / (2 * e))
        for j in range(self.n):
            kp = [np.array(a, float) for a in xi]
            km = [np.array(a, float) for a in xi]
            kp[j] = kp[j] + e
            km[j] = km[j] - e
            gk.append((self.beta(x, kp) - self.beta(x, km)) / (2 * e))
        return gx, gk

    def flipped(self) -> "Hypersurface":
        return Hypersurface(self.n, self.beta, self.grad_beta, self.patches, -self.orientation,
                            self.normalized, self.boundary, self.label + " (flipped)", self.fd_step)

    def check_nodes(self, H: Hamiltonian, tol: float = 1e-8) -> dict:
        worst_b = worst_p = worst_g = 0.0
        for P in self.patches:
            x, xi = P.points()
            worst_b = max(worst_b, float(np.max(np.abs(self.beta(x, xi)))))
            worst_p = max(worst_p, float(np.max(np.abs(H.p(x, xi)))))
            if self.normalized:
                gx, gk = self.beta_grad(x, xi)
                g = np.sqrt(sum(a**2 for a in gx) + sum(a**2 for a in gk))
                worst_g = max(worst_g, float(np.max(np.abs(g - 1))))
        return {"beta": worst_b, "p": worst_p, "grad": worst_g,
                "ok": worst_b <= tol and worst_p <= tol and worst_g <= 1e-6}


def H_p_beta(H: Hamiltonian, S: Hypersurface, x, xi):
    """H_p beta = d_xi p . d_x beta - d_x p . d_xi beta."""
    gx, gk = S.beta_grad(x, xi)
    px, pk = H.p_x(x, xi), H.p_xi(x, xi)
    return sum(a * b for a, b in zip(pk, gx)) - sum(a * b for a, b in zip(px, gk))


def symplectic_density(tangents, n: int):
    """|(omega|_Sigma)^{n-1}/(n-1)!| on the patch tangents, omega = sum dxi_j ^ dx_j."""
    m = len(tangents)
    if m == 0:
        return 1.0
    W = [[None] * m for _ in range(m)]
    for a in range(m):
        for b in range(m):
            (xa, ka), (xb, kb) = tangents[a], tangents[b]
            W[a][b] = sum(ka[j] * xb[j] - xa[j] * kb[j] for j in range(n))
    if m == 2:
        return np.abs(W[0][1])
    raise ValueError("only n <= 2 supported")


@dataclass
class SectionMeasure:
    """dalpha on Sigma; convention 'literal' uses H_p beta times the symplectic density,
    'flux' uses sign(H_p beta) |grad_xi p| times the symplectic density."""

    H: Hamiltonian
    S: Hypersurface
    convention: str = "literal"
    tol_tangent: float = 1e-8

    def density(self, patch: Patch):
        x, xi = patch.points()
        hb = H_p_beta(self.H, self.S, x, xi)
        taper = np.clip(np.abs(hb) / self.tol_tangent, 0.0, 1.0)
        dens = symplectic_density(patch.tangent_vectors(), self.H.n)
        if self.convention == "literal":
            core = hb
        elif self.convention == "flux":
            gp = np.sqrt(sum(a**2 for a in self.H.p_xi(x, xi)))
            core = np.sign(hb) * gp
        else:
            raise ValueError(f"unknown convention {self.convention!r}")
        return self.S.orientation * core * taper * dens

    def sign_map(self):
        out = []
        for P in self.S.patches:
            x, xi = P.points()
            out.append(np.sign(H_p_beta(self.H, self.S, x, xi)))
        return out


def section_integral(S: Hypersurface, M: SectionMeasure, a: Optional[Callable]) -> float:
    """Integral of a over Sigma against dalpha (no 1/((n-1)! mu) prefactor)."""
    if a is None:
        return 0.0
    tot = 0.0
    for P in S.patches:
        x, xi = P.points()
        vals = np.real(np.asarray(a(x, xi))) * M.density(P)
        tot += float(np.sum(vals * P.weights))
    return tot


def classify_transversality(S: Hypersurface, H: Hamiltonian, tol_tangent: float = 1e-8):
    out = []
    for P in S.patches:
        x, xi = P.points()
        hb = np.abs(H_p_beta(H, S, x, xi))
        out.append(np.where(hb > tol_tangent, "transversal", "tangential"))
    return out


def _gl(a, b, m):
    r, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (b - a) * r + 0.5 * (b + a), 0.5 * (b - a) * w


def _tensor(nodes1, w1, nodes2, w2):
    A, B = np.meshgrid(nodes1, nodes2, indexing="ij")
    W = np.outer(w1, w2)
    return [A.ravel(), B.ravel()], W.ravel()


def example4_surface(E: float = 1.0, c: float = 0.5, xi2_range=None, n_x2: int = 64, n_xi2: int = 96,
                     period: float = 2.0, orientation: int = 1) -> Hypersurface:
    """Sigma = {x1 = c, xi1 = sqrt(E - xi2^2)}, beta = x1 - c, chart (x2, xi2)."""
    R = np.sqrt(E)
    lo, hi = xi2_range if xi2_range is not None else (-R, R)
    x2 = -period / 2 + period * np.arange(n_x2) / n_x2
    w2 = np.full(n_x2, period / n_x2)
    k2, wk = _gl(lo, hi, n_xi2)
    nodes, W = _tensor(x2, w2, k2, wk)

    def chart(s):
        X2, K2 = s
        return [np.full_like(X2, c), X2], [np.sqrt(np.maximum(E - K2**2, 0.0)), K2]

    def tangents(s):
        X2, K2 = s
        z = np.zeros_like(X2)
        one = np.ones_like(X2)
        dk1 = -K2 / np.sqrt(np.maximum(E - K2**2, 1e-300))
        return [([z, one], [z, z]), ([z, z], [dk1, one])]

    def beta(x, xi):
        return np.asarray(x[0]) - c

    def grad_beta(x, xi):
        z = np.zeros(np.shape(x[0]))
        return [np.ones(np.shape(x[0])), z], [z, z]

    return Hypersurface(2, beta, grad_beta, [Patch(chart, nodes, W, tangents)], orientation,
                        True, False, f"x1={c}, xi1>0")


def hypersurface_from_json(doc, n: int = 2) -> Hypersurface:
    """{beta: expr in x,xi; patches: [{param_ranges, node_counts, chart: [x..., xi...]}], orientation}."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    beta_sym = parse_symbol(doc["beta"])
    patches = []
    for pd in doc["patches"]:
        ranges = pd["param_ranges"]
        counts = pd["node_counts"]
        if len(ranges) != 2 * n - 2 or len(counts) != len(ranges):
            raise ValueError("patch needs 2n-2 parameter ranges with node counts")
        fns = [parse_param_expr(e) for e in pd["chart"]]
        if len(fns) != 2 * n:
            raise ValueError("chart needs 2n expressions (x..., xi...)")
        if len(ranges) == 0:
            nodes, W = [], np.ones(1)
        else:
            (a1, b1), (a2, b2) = ranges
            n1, w1 = _gl(a1, b1, counts[0])
            n2, w2 = _gl(a2, b2, counts[1])
            nodes, W = _tensor(n1, w1, n2, w2)

        def chart(s, fns=fns):
            vals = [f(s) for f in fns]
            return vals[:n], vals[n:]

        patches.append(Patch(chart, nodes, W))

    return Hypersurface(n, lambda x, xi: np.real(beta_sym(x, xi)), None, patches,
                        int(doc.get("orientation", 1)), bool(doc.get("normalized", True)),
                        bool(doc.get("boundary", False)), doc.get("label", ""))


def cosphere_measure(n: int = 2, period: float = 2.0, normalization: str = "surface") -> float:
    """mu(S*X) for the flat torus with p = |xi|^2 - 1, in closed form."""
    area = period ** n
    sphere = 2.0 if n == 1 else 2 * np.pi
    return area * sphere * (1.0 if normalization == "surface" else 0.5)


def ball_bundle_integral(a0: Callable, period: float = 2.0, n_x: int = 64, n_theta: int = 64) -> float:
    """Integral over B*H (H = {x1 = c}, coordinates x2, xi2 with |xi2| < 1) of a0(x2, xi2) sqrt(1 - xi2^2).

    xi2 = sin(t) turns the weight into cos(t)^2 dt, smooth on [-pi/2, pi/2].
    """
    x2 = -period / 2 + period * np.arange(n_x) / n_x
    t, wt = _gl(-np.pi / 2, np.pi / 2, n_theta)
    X, T = np.meshgrid(x2, t, indexing="ij")
    vals = np.asarray(a0(X, np.sin(T))) * np.cos(T) ** 2
    return float(np.sum(vals * wt[None, :]) * period / n_x)


def corollary_rhs(a0: Callable, period: float = 2.0, normalization: str = "surface", **quad) -> float:
    """(4 / mu(S*X)) * integral over B*H of a0 sqrt(1 - |xi'|^2)."""
    return 4.0 / cosphere_measure(2, period, normalization) * ball_bundle_integral(a0, period, **quad)

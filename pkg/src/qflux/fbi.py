"""Gaussian FBI transform on the torus, its adjoint, Husimi densities and restriction to x_n = c.

    T u(x, xi) = c_n h^{-3n/4} int u(y) exp(i xi.(x - y)/h) exp(-|x - y|^2 / 2h) dy

The integral over R^n of a periodic u is a periodic convolution with the
image-summed kernel. Phase space is the torus in x times a box |xi_j| <= tau
sampled uniformly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import FourierField, TorusGrid

PHASE_CAP = 40_000_000


def cn_formula(n: int) -> float:
    """Value of c_n that makes T an isometry: 2^{-n/2} pi^{-3n/4}."""
    return 2.0 ** (-n / 2) * math.pi ** (-3 * n / 4)


@dataclass(frozen=True)
class PhaseBox:
    tau: float
    M: int

    def axis(self) -> np.ndarray:
        return np.linspace(-self.tau, self.tau, self.M, endpoint=False) + self.tau / self.M

    @property
    def spacing(self) -> float:
        return 2 * self.tau / self.M


def make_box(h: float, tau: float = 2.0, refine: float = 4.0) -> PhaseBox:
    """Uniform xi sampling with spacing at most sqrt(h)/refine."""
    M = int(math.ceil(2 * tau * refine / math.sqrt(h)))
    return PhaseBox(tau, M + (M % 2))


def _check_box(grid: TorusGrid, box: PhaseBox):
    nyq = grid.h * grid.kappa * grid.N / 2
    if box.tau + 4 * math.sqrt(grid.h) > nyq:
        raise ValueError(f"phase box |xi| <= {box.tau} plus Gaussian tail exceeds Nyquist {nyq:.3g}")
    if box.spacing > math.sqrt(grid.h) / 4 + 1e-15:
        raise ValueError("xi spacing must be <= sqrt(h)/4")
    size = grid.size * box.M ** grid.n
    if size > PHASE_CAP:
        raise ValueError(f"phase-space array of {size} points exceeds cap {PHASE_CAP}")


@dataclass
class PhaseSpaceField:
    """values[x_1..x_n, xi_1..xi_n] on grid x box."""

    values: np.ndarray
    grid: TorusGrid
    box: PhaseBox

    @property
    def cell(self) -> float:
        return self.grid.weight * self.box.spacing ** self.grid.n

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.cell))

    def inner(self, other: "PhaseSpaceField") -> complex:
        return complex(np.sum(self.values * np.conj(other.values)) * self.cell)

    def __sub__(self, other):
        return PhaseSpaceField(self.values - other.values, self.grid, self.box)


def _kernel_hat(grid: TorusGrid, xis: np.ndarray, images: int) -> np.ndarray:
    """FFT (over the grid offset z) of the image-summed 1D kernel exp(i xi z/h - z^2/2h); shape (M, N)."""
    h = grid.h
    z = grid.spacing * np.arange(grid.N)
    z = np.where(z >= grid.period / 2, z - grid.period, z)
    K = np.zeros((len(xis), grid.N), dtype=complex)
    for m in range(-images, images + 1):
        zm = z + m * grid.period
        K += np.exp(1j * np.outer(xis, zm) / h - zm[None, :] ** 2 / (2 * h))
    return np.fft.fft(K, axis=1)


def fbi_forward(u: FourierField, box: PhaseBox, images: int = 3, cn: Optional[float] = None) -> PhaseSpaceField:
    grid = u.grid
    _check_box(grid, box)
    n, h = grid.n, grid.h
    cn = cn_formula(n) if cn is None else cn
    xis = box.axis()
    Kh = _kernel_hat(grid, xis, images)
    uh = np.fft.fftn(u.values())
    pref = cn * h ** (-0.75 * n) * grid.spacing ** n
    if n == 1:
        T = np.fft.ifft(uh[None, :] * Kh, axis=1).T
    else:
        prod = uh[None, None, :, :] * Kh[:, None, :, None] * Kh[None, :, None, :]
        T = np.fft.ifft2(prod, axes=(2, 3)).transpose(2, 3, 0, 1)
    return PhaseSpaceField(pref * T, grid, box)


def fbi_analytic(u: FourierField, box: PhaseBox, cn: Optional[float] = None) -> PhaseSpaceField:
    """Coefficient route: sum_k c_k e^{i kappa k.x} (2 pi h)^{n/2} exp(-|xi - xi_k|^2 / 2h)."""
    grid = u.grid
    n, h = grid.n, grid.h
    cn = cn_formula(n) if cn is None else cn
    xis = box.axis()
    kax = grid.kaxis()
    G = np.exp(-(xis[:, None] - h * grid.kappa * kax[None, :]) ** 2 / (2 * h))
    c = u.coeffs * grid.phase() * grid.size
    pref = cn * h ** (-0.75 * n) * (2 * np.pi * h) ** (n / 2)
    if n == 1:
        T = np.fft.ifft(c[None, :] * G, axis=1).T
    else:
        prod = c[None, None, :, :] * G[:, None, :, None] * G[None, :, None, :]
        T = np.fft.ifft2(prod, axes=(2, 3)).transpose(2, 3, 0, 1)
    return PhaseSpaceField(pref * T, grid, box)


def fbi_adjoint(v: PhaseSpaceField, images: int = 3, cn: Optional[float] = None) -> FourierField:
    grid, box = v.grid, v.box
    n, h = grid.n, grid.h
    cn = cn_formula(n) if cn is None else cn
    Kh = np.conj(_kernel_hat(grid, box.axis(), images))
    pref = cn * h ** (-0.75 * n) * grid.spacing ** n * box.spacing ** n
    if n == 1:
        vh = np.fft.fft(v.values, axis=0)
        out = np.fft.ifft(np.sum(vh * Kh.T, axis=1))
    else:
        vh = np.fft.fft2(v.values, axes=(0, 1))
        # correlation with the conjugated kernel, summed over both xi axes
        acc = np.einsum("abij,ia,jb->ab", vh, Kh, Kh)
        out = np.fft.ifft2(acc)
    return FourierField.from_values(grid, pref * out, real=False)


def coherent_state(grid: TorusGrid, x0, xi0, images: int = 3) -> FourierField:
    """Periodized exp(i xi0.(x - x0)/h - |x - x0|^2 / 2h), normalized."""
    h = grid.h
    x = grid.coords()
    v = np.ones(grid.shape, dtype=complex)
    for X, a, b in zip(x, np.atleast_1d(x0), np.atleast_1d(xi0)):
        s = np.zeros(grid.shape, dtype=complex)
        for m in range(-images, images + 1):
            d = X - a + m * grid.period
            s += np.exp(1j * b * d / h - d**2 / (2 * h))
        v = v * s
    return FourierField.from_values(grid, v, "coherent", real=False).normalized()


def calibrate_cn(grid: TorusGrid, box: PhaseBox, images: int = 3) -> float:
    """c_n making ||T u|| = ||u|| on a reference Gaussian centred at the origin with xi0 = 0."""
    u = coherent_state(grid, [0.0] * grid.n, [0.0] * grid.n, images)
    return 1.0 / fbi_forward(u, box, images, cn=1.0).norm()


@dataclass
class HusimiDensity:
    density: np.ndarray
    grid: TorusGrid
    box: PhaseBox
    raw_mass: float

    def mass(self, mask=None) -> float:
        cell = self.grid.weight * self.box.spacing ** self.grid.n
        d = self.density if mask is None else self.density * mask
        return float(np.sum(d) * cell)

    def xi_marginal(self) -> np.ndarray:
        n = self.grid.n
        return np.sum(self.density, axis=tuple(range(n))) * self.grid.weight

    def x_marginal(self) -> np.ndarray:
        n = self.grid.n
        return np.sum(self.density, axis=tuple(range(n, 2 * n))) * self.box.spacing ** n

    def phase_coords(self):
        n = self.grid.n
        axes = [self.grid.axis()] * n + [self.box.axis()] * n
        return np.meshgrid(*axes, indexing="ij")


def husimi(Tu: PhaseSpaceField) -> HusimiDensity:
    d = np.abs(Tu.values) ** 2
    m = float(np.sum(d) * Tu.cell)
    return HusimiDensity(d / m, Tu.grid, Tu.box, m)


def off_shell_mass(H: HusimiDensity, E: float = 1.0, width: float = 0.1) -> float:
    """Husimi mass where | |xi|^2 - E | > width."""
    c = H.phase_coords()
    n = H.grid.n
    r2 = sum(c[n + j] ** 2 for j in range(n))
    return H.mass(np.abs(r2 - E) > width)


def _d_x(T: PhaseSpaceField, j: int) -> np.ndarray:
    g = T.grid
    k = g.h * g.kappa * np.fft.fftfreq(g.N, 1.0 / g.N)
    shape = [1] * (2 * g.n)
    shape[j] = g.N
    return np.fft.ifft(np.fft.fft(T.values, axis=j) * k.reshape(shape), axis=j)


def _d_xi(T: PhaseSpaceField, j: int) -> np.ndarray:
    """h D_xi by spectral differentiation across the box (T decays at the box edge)."""
    g, b = T.grid, T.box
    ax = g.n + j
    k = 2 * np.pi * np.fft.fftfreq(b.M, b.spacing)
    shape = [1] * (2 * g.n)
    shape[ax] = b.M
    return g.h * np.fft.ifft(np.fft.fft(T.values, axis=ax) * k.reshape(shape), axis=ax)


def intertwining_defects(u: FourierField, box: PhaseBox, j: int = 0, Tu: Optional[PhaseSpaceField] = None) -> dict:
    """d1 = ||hD_x Tu - xi Tu||, d2 = ||hD_xi Tu||, d3 = |<hD_xi Tu, Tu>|."""
    T = Tu if Tu is not None else fbi_forward(u, box)
    g = T.grid
    shape = [1] * (2 * g.n)
    shape[g.n + j] = box.M
    xi = box.axis().reshape(shape)
    r1 = _d_x(T, j) - xi * T.values
    r2 = _d_xi(T, j)
    d1 = math.sqrt(np.sum(np.abs(r1) ** 2) * T.cell)
    d2 = math.sqrt(np.sum(np.abs(r2) ** 2) * T.cell)
    d3 = abs(np.sum(r2 * np.conj(T.values)) * T.cell)
    return {"d1": d1, "d2": d2, "d3": d3, "closed_form_d1": math.sqrt(g.h / 2) * u.norm()}


def anti_wick(a: Callable, Tu: PhaseSpaceField) -> float:
    """integral of a(x, xi) |Tu|^2; a takes (x list, xi list)."""
    n = Tu.grid.n
    c = np.meshgrid(*([Tu.grid.axis()] * n + [Tu.box.axis()] * n), indexing="ij")
    vals = np.real(a(c[:n], c[n:]))
    return float(np.sum(vals * np.abs(Tu.values) ** 2) * Tu.cell)


def restriction_straight(u: FourierField, c: float, box: PhaseBox, images: int = 3,
                         V_near_H: bool = False) -> FourierField:
    """u|_H on H = {x_n = c}: T_0 u sliced at x_n = c, integrated over xi_n, then T_1^* in x'.

    With the identity canonical transformation this returns w * u(x', c) for
    band-limited u, where w is a constant weight (restriction_weight).
    """
    if V_near_H:
        raise ValueError("straight polarization needs V = 0 near H")
    grid = u.grid
    if grid.n != 2:
        raise ValueError("restriction is implemented for n = 2")
    _check_box(grid, box)
    h = grid.h
    xis = box.axis()
    y = grid.axis()
    # integral over y_2 against the xi_2 kernel at x_2 = c, then over xi_2
    v = u.values()
    w2 = np.zeros(grid.N, dtype=complex)
    for m in range(-images, images + 1):
        d = c - y + m * grid.period
        K = np.exp(1j * np.outer(xis, d) / h - d[None, :] ** 2 / (2 * h))
        w2 += np.sum(K, axis=0) * box.spacing
    inner = (v * w2[None, :]).sum(axis=1) * grid.spacing  # function of y_1
    g1 = TorusGrid(1, grid.N, h, grid.period)
    f = FourierField.from_values(g1, inner, real=False)
    # T_0 in x' of the reduced field, then T_1^*
    T1 = fbi_forward(f, box, images)
    back = fbi_adjoint(T1, images)
    pref = cn_formula(2) * h ** (-1.5) / (cn_formula(1) * h ** (-0.75))
    return back.scale(pref)


def restriction_weight(h: float, xi_n, box: PhaseBox):
    """Weight w(xi_n) with restriction_straight(u) = sum_k w(xi_{k,n}) W(xi_{k,1}) c_k e^{i kappa k.(x', c)}.

    The xi_n-Gaussian summed over the box nodes; deep inside the box this is
    the constant 2 pi h times the ratio of the 2D and 1D prefactors, and it
    falls off like an erf window near |xi_n| = tau.
    """
    xi_n = np.asarray(xi_n, float)
    nodes = box.axis()
    s = np.sum(np.exp(-(nodes[:, None] - xi_n.ravel()[None, :]) ** 2 / (2 * h)), axis=0) * box.spacing
    n2 = cn_formula(2) * h ** (-1.5)
    n1 = cn_formula(1) * h ** (-0.75)
    return (n2 / n1 * np.sqrt(2 * np.pi * h) * s).reshape(xi_n.shape)


def box_window(h: float, xi, box: PhaseBox):
    """Fraction of the |T u|^2 mass of a plane wave at xi carried by the box nodes (T^* T on one axis)."""
    xi = np.asarray(xi, float)
    nodes = box.axis()
    s = np.sum(np.exp(-(nodes[:, None] - xi.ravel()[None, :]) ** 2 / h), axis=0) * box.spacing
    return (s / np.sqrt(np.pi * h)).reshape(xi.shape)


def restriction_direct(u: FourierField, c: float, box: PhaseBox) -> np.ndarray:
    """Direct trace sum_k w(xi_{k,2}) W(xi_{k,1}) c_k e^{i kappa (k1 x' + k2 c)} on the x' grid."""
    g = u.grid
    k = g.kaxis()
    w = restriction_weight(g.h, g.h * g.kappa * k, box)
    coef = np.sum(u.coeffs * (w * np.exp(1j * g.kappa * k * c))[None, :], axis=1)
    coef = coef * box_window(g.h, g.h * g.kappa * k, box)
    g1 = TorusGrid(1, g.N, g.h, g.period)
    return FourierField(g1, coef).values()

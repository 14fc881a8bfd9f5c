"""Quantized operators on the torus, cutoffs and the one-sided commutator."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .core import FourierField, SymbolFn, TorusGrid, dense_oracle_of, ORACLE_CAP
from .profiles import bump_step, profile, symmetric_plateau, window


class QuantizedOp:
    """Linear operator on FourierFields with an explicit adjoint."""

    def __init__(self, grid: TorusGrid, apply: Callable, adjoint: Optional[Callable] = None,
                 kind: str = "composition", symbol: Optional[SymbolFn] = None, self_adjoint: bool = False):
        self.grid = grid
        self._apply = apply
        self._adjoint = adjoint
        self.kind = kind
        self.symbol = symbol
        self.self_adjoint = self_adjoint
        self.V = None
        self.E = None

    def __call__(self, u: FourierField) -> FourierField:
        return self.apply(u)

    def apply(self, u: FourierField) -> FourierField:
        if u.grid != self.grid:
            raise ValueError("grid mismatch")
        return self._apply(u)

    def adjoint(self) -> "QuantizedOp":
        if self.self_adjoint:
            return self
        if self._adjoint is None:
            raise NotImplementedError(f"no adjoint for {self.kind}")
        return QuantizedOp(self.grid, self._adjoint, self._apply, kind=self.kind + "*")

    def __matmul__(self, other: "QuantizedOp") -> "QuantizedOp":
        return compose(self, other)

    def __add__(self, other: "QuantizedOp") -> "QuantizedOp":
        return op_sum([(1.0, self), (1.0, other)])

    def __sub__(self, other: "QuantizedOp") -> "QuantizedOp":
        return op_sum([(1.0, self), (-1.0, other)])

    def scaled(self, a: complex) -> "QuantizedOp":
        return op_sum([(a, self)])

    def dense(self):
        return dense_oracle_of(self.apply, self.grid)




def compose(*ops: QuantizedOp) -> QuantizedOp:
    """compose(A, B, C) applies C first."""
    grid = ops[0].grid

    def ap(u):
        for op in reversed(ops):
            u = op.apply(u)
        return u

    adj = None
    if all(op.self_adjoint or op._adjoint is not None for op in ops):
        def adj(u):
            for op in ops:
                u = op.adjoint().apply(u)
            return u
    return QuantizedOp(grid, ap, adj, kind="composition")


def op_sum(terms: Sequence[tuple]) -> QuantizedOp:
    grid = terms[0][1].grid

    def ap(u):
        out = np.zeros(grid.shape, dtype=complex)
        for a, op in terms:
            out = out + a * op.apply(u).coeffs
        return FourierField(grid, out)

    adj = None
    if all(op.self_adjoint or op._adjoint is not None for _, op in terms):
        def adj(u):
            out = np.zeros(grid.shape, dtype=complex)
            for a, op in terms:
                out = out + np.conj(a) * op.adjoint().apply(u).coeffs
            return FourierField(grid, out)
    sa = all(op.self_adjoint and np.isreal(a) for a, op in terms)
    return QuantizedOp(grid, ap, adj, kind="sum", self_adjoint=sa)


def identity(grid: TorusGrid) -> QuantizedOp:
    return QuantizedOp(grid, lambda u: u, lambda u: u, kind="identity", self_adjoint=True)


def fourier_multiplier(grid: TorusGrid, g, symbol: Optional[SymbolFn] = None) -> QuantizedOp:
    """g is either an array on the lattice or a callable of the frequency list."""
    mult = np.asarray(g(grid.frequencies()) if callable(g) else g)
    mult = np.broadcast_to(mult, grid.shape)
    sa = bool(np.all(np.isreal(mult)))
    return QuantizedOp(grid, lambda u: FourierField(grid, mult * u.coeffs),
                       lambda u: FourierField(grid, np.conj(mult) * u.coeffs),
                       kind="fourier_multiplier", symbol=symbol, self_adjoint=sa)


def position_multiplier(grid: TorusGrid, f, symbol: Optional[SymbolFn] = None) -> QuantizedOp:
    vals = np.asarray(f(grid.coords()) if callable(f) else f)
    vals = np.broadcast_to(vals, grid.shape)
    sa = bool(np.all(np.isreal(vals)))

    def ap(u):
        return FourierField.from_values(grid, vals * u.values(), real=False)

    def adj(u):
        return FourierField.from_values(grid, np.conj(vals) * u.values(), real=False)

    return QuantizedOp(grid, ap, adj, kind="position_multiplier", symbol=symbol, self_adjoint=sa)


def kn_matrix(grid: TorusGrid, a: SymbolFn) -> np.ndarray:
    """Coefficient-basis matrix of the left (Kohn-Nirenberg) quantization.

    M[l, k] = (1/vol) * integral a(x, xi_k) exp(i kappa (k - l).x) dx, computed by FFT.
    """
    if grid.size > ORACLE_CAP:
        raise ValueError("general Kohn-Nirenberg symbols are limited to N^n <= 4096; "
                         "supply separable_parts for larger grids")
    x = grid.coords()
    xi = grid.frequencies()
    ks = [k.ravel() for k in grid.klattice()]
    M = np.empty((grid.size, grid.size), dtype=complex)
    ph = grid.phase()
    for j in range(grid.size):
        xik = [np.full(grid.shape, f.ravel()[j]) for f in xi]
        vals = np.asarray(a(x, xik), dtype=complex) * np.ones(grid.shape)
        kvec = [k[j] for k in ks]
        wave = np.ones(grid.shape, dtype=complex)
        for X, kk in zip(x, kvec):
            wave = wave * np.exp(1j * grid.kappa * kk * X)
        col = np.fft.fftn(vals * wave) / grid.size * np.conj(ph)
        M[:, j] = col.ravel()
    return M


def _matrix_op(grid, M, kind, symbol, sa):
    def ap(u):
        return FourierField(grid, (M @ u.coeffs.ravel()).reshape(grid.shape))

    MH = M.conj().T

    def adj(u):
        return FourierField(grid, (MH @ u.coeffs.ravel()).reshape(grid.shape))

    return QuantizedOp(grid, ap, adj, kind=kind, symbol=symbol, self_adjoint=sa)


def check_band_limit(grid: TorusGrid, a: SymbolFn):
    if a.band_limit is not None and a.band_limit > grid.N // 4:
        raise ValueError(f"symbol band limit {a.band_limit} exceeds N/4 = {grid.N // 4}")


def quantize(a: SymbolFn, grid: TorusGrid, symmetrize: Optional[bool] = None) -> QuantizedOp:
    """Op_h(a) u(x) = sum_k a(x, xi_k) c_k e^{i kappa k.x}; real symbols are symmetrized."""
    check_band_limit(grid, a)
    if symmetrize is None:
        symmetrize = a.real
    if a.xi_only:
        return fourier_multiplier(grid, lambda xi: a(grid.coords(), xi), symbol=a)
    if a.x_only:
        return position_multiplier(grid, lambda x: a(x, grid.frequencies()), symbol=a)
    if a.separable_parts:
        parts = [(position_multiplier(grid, f), fourier_multiplier(grid, g)) for f, g in a.separable_parts]
        op = op_sum([(1.0, compose(F, G)) for F, G in parts])
        op.kind, op.symbol = "kohn_nirenberg", a
        if symmetrize:
            op = op_sum([(0.5, op), (0.5, op.adjoint())])
            op.kind, op.symbol, op.self_adjoint = "kohn_nirenberg", a, True
        return op
    M = kn_matrix(grid, a)
    if symmetrize:
        M = 0.5 * (M + M.conj().T)
    return _matrix_op(grid, M, "kohn_nirenberg", a, bool(symmetrize))


def laplace_symbol(grid: TorusGrid) -> np.ndarray:
    return sum(f**2 for f in grid.frequencies())


def build_P(grid: TorusGrid, V: Optional[SymbolFn] = None, E: float = 1.0) -> QuantizedOp:
    """P = -h^2 Delta + V - E."""
    kin = fourier_multiplier(grid, laplace_symbol(grid) - E)
    if V is None:
        kin.kind = "P"
        kin.V = None
        kin.E = E
        return kin
    pot = position_multiplier(grid, lambda x: np.real(V(x, [np.zeros_like(x[0])] * grid.n)))
    op = op_sum([(1.0, kin), (1.0, pot)])
    op.kind = "P"
    op.V = V
    op.E = E
    return op


def _dense_P(P: QuantizedOp) -> np.ndarray:
    """Hermitian matrix of P in the normalized coefficient basis."""
    grid = P.grid
    M = np.empty((grid.size, grid.size), dtype=complex)
    for j in range(grid.size):
        e = np.zeros(grid.size, dtype=complex)
        e[j] = 1.0
        M[:, j] = P.apply(FourierField(grid, e)).coeffs.ravel()
    return 0.5 * (M + M.conj().T)


def _spectral_bounds(P: QuantizedOp):
    grid = P.grid
    lap = laplace_symbol(grid)
    lo, hi = float(lap.min()) - P.E, float(lap.max()) - P.E
    if P.V is not None:
        v = np.real(P.V(grid.coords(), [np.zeros(grid.shape)] * grid.n))
        lo += float(v.min())
        hi += float(v.max())
    return lo - 1e-9, hi + 1e-9


def energy_window(P: QuantizedOp, w: float = 0.2, fn: Optional[Callable] = None,
                  method: str = "auto", tol: float = 1e-8, max_degree: int = 200000) -> QuantizedOp:
    """psi(P) for psi = window(., w) (or a supplied function)."""
    fn = fn or (lambda t: window(t, w))
    grid = P.grid
    if P.V is None:
        return fourier_multiplier(grid, fn(laplace_symbol(grid) - P.E))
    if method == "auto":
        method = "dense" if grid.size <= ORACLE_CAP else "chebyshev"
    if method == "dense":
        lam, Q = scipy.linalg.eigh(_dense_P(P))
        M = (Q * fn(lam)) @ Q.conj().T
        return _matrix_op(grid, M, "fourier_multiplier", None, True)
    if method == "chebyshev":
        lo, hi = _spectral_bounds(P)
        coef = chebyshev_coefficients(fn, lo, hi, tol, max_degree)
        c0, r = 0.5 * (hi + lo), 0.5 * (hi - lo)

        def ap(u):
            def Pt(v):
                return (P.apply(v).coeffs - c0 * v.coeffs) / r
            t0 = u.coeffs
            acc = coef[0] * t0
            if len(coef) == 1:
                return FourierField(grid, acc)
            t1 = Pt(u)
            acc = acc + coef[1] * t1
            for c in coef[2:]:
                t2 = 2 * Pt(FourierField(grid, t1)) - t0
                acc = acc + c * t2
                t0, t1 = t1, t2
            return FourierField(grid, acc)

        return QuantizedOp(grid, ap, ap, kind="chebyshev", self_adjoint=True)
    raise ValueError(f"unknown method {method!r}")


def chebyshev_coefficients(fn, lo, hi, tol=1e-8, max_degree=200000):
    deg = 64
    while True:
        j = np.arange(deg)
        theta = np.pi * (j + 0.5) / deg
        t = np.cos(theta)
        vals = fn(0.5 * (hi + lo) + 0.5 * (hi - lo) * t)
        c = 2.0 / deg * np.cos(np.outer(np.arange(deg), theta)) @ vals
        c[0] *= 0.5
        tail = np.sum(np.abs(c[-deg // 4:]))
        if tail < tol / 10:
            keep = np.nonzero(np.abs(c) > tol / (10 * deg))[0]
            return c[: (keep[-1] + 1 if len(keep) else 1)]
        deg *= 2
        if deg > max_degree:
            raise ValueError(f"Chebyshev degree cap {max_degree} exceeded")


def sign_projector(grid: TorusGrid, axis: int, sign: int, smooth: bool = False) -> QuantizedOp:
    """1_{sign * xi_axis > 0} with the xi_axis = 0 mode given weight 1/2.

    smooth=True uses a transition of width h^{1/2} in xi_axis instead of the sharp cut.
    """
    if sign == 0:
        return identity(grid)
    xi = grid.frequencies()[axis]
    if smooth:
        t = sign * xi / np.sqrt(grid.h)
        m = bump_step((t - 1.0) / 2.0)
    else:
        k = grid.klattice()[axis]
        m = np.where(sign * k > 0, 1.0, np.where(k == 0, 0.5, 0.0))
    return fourier_multiplier(grid, m)


def _per(d, period):
    return (d + period / 2) % period - period / 2


@dataclass
class CutoffSpec:
    """chi = chi_tilde(beta/eps) * psi(P) together with the one-sided localizer.

    kind 'x': chi_tilde and the localizer are position multipliers,
    kind 'xi': both are Fourier multipliers. chi_fn and loc_fn take the
    coordinate list (positions or frequencies).
    """

    kind: str
    chi_fn: Callable
    loc_fn: Callable
    eps: float
    delta: float
    psi_w: float = 0.2
    profile_name: str = "bump"
    normal_axis: int = 0
    orientation: int = 1
    boundary: bool = False
    label: str = ""

    def __post_init__(self):
        if not self.delta > self.eps:
            raise ValueError(f"need delta > eps, got delta={self.delta}, eps={self.eps}")

    def chi_op(self, grid: TorusGrid) -> QuantizedOp:
        if self.kind == "x":
            return position_multiplier(grid, self.chi_fn)
        return fourier_multiplier(grid, self.chi_fn)

    def localizer(self, grid: TorusGrid) -> QuantizedOp:
        if self.kind == "x":
            return position_multiplier(grid, self.loc_fn)
        return fourier_multiplier(grid, self.loc_fn)


def _far_factor(d, period, width=0.1):
    """1 away from the antipode of Sigma, 0 at it; shared by all profiles."""
    return bump_step((period / 2 - d) / width - 1.0)


def hyperplane_cutoff(axis: int, c: float, eps: float, delta: Optional[float] = None, psi_w: float = 0.2,
                      profile_name: str = "bump", orientation: int = 1, period: float = 2.0,
                      far_width: float = 0.1) -> CutoffSpec:
    """Sigma = {x_axis = c}; beta = orientation * (x_axis - c).

    chi_tilde = S(beta/eps) near Sigma and returns to 0 just before the antipodal
    point, with a far transition that does not depend on the profile.
    """
    delta = 2 * eps if delta is None else delta
    S = profile(profile_name)[0]
    if 2 * delta >= period / 2 - far_width:
        raise ValueError("localizer would reach the far transition; reduce eps")

    def chi(x):
        d = orientation * _per(x[axis] - c, period)
        return S(d / eps) * _far_factor(d, period, far_width)

    def loc(x):
        return symmetric_plateau(_per(x[axis] - c, period), delta)

    return CutoffSpec("x", chi, loc, eps, delta, psi_w, profile_name, axis, orientation, False,
                      f"x{axis + 1}={c}")


def slab_cutoff(axis: int, c1: float, c2: float, eps: float, delta: Optional[float] = None,
                psi_w: float = 0.2, profile_name: str = "bump", period: float = 2.0) -> CutoffSpec:
    """Sigma = boundary of the slab {c1 < x_axis < c2}: chi_tilde = 1 outside, 0 deep inside."""
    delta = 2 * eps if delta is None else delta
    if not 0 < c2 - c1 < period / 2 - 2 * eps:
        raise ValueError("slab too wide for a smooth periodic cutoff")
    if 2 * eps >= (c2 - c1) / 2:
        raise ValueError("eps too large for the slab")
    S = profile(profile_name)[0]

    def chi(x):
        b2 = _per(x[axis] - c2, period)
        b1 = _per(c1 - x[axis], period)
        return 1.0 - (1.0 - S(b2 / eps)) * (1.0 - S(b1 / eps))

    def loc(x):
        d = np.minimum(np.abs(_per(x[axis] - c1, period)), np.abs(_per(x[axis] - c2, period)))
        return symmetric_plateau(d, delta)

    return CutoffSpec("x", chi, loc, eps, delta, psi_w, profile_name, axis, 1, True,
                      f"slab x{axis + 1} in ({c1},{c2})")


def frequency_cutoff(axis: int, c: float, eps: float, delta: Optional[float] = None, psi_w: float = 0.2,
                     profile_name: str = "bump", orientation: int = 1) -> CutoffSpec:
    """Sigma = {xi_axis = c} inside the shell; beta = orientation * (xi_axis - c)."""
    delta = 2 * eps if delta is None else delta
    S = profile(profile_name)[0]

    def chi(xi):
        return S(orientation * (xi[axis] - c) / eps)

    def loc(xi):
        return symmetric_plateau(xi[axis] - c, delta)

    return CutoffSpec("xi", chi, loc, eps, delta, psi_w, profile_name, axis, orientation, False,
                      f"xi{axis + 1}={c}")


@dataclass
class OneSidedCommutator:
    """L o 1_sign o (i/h)[P, chi_tilde o psi(P)]; the localizer L is outermost."""

    P: QuantizedOp
    cut: CutoffSpec
    sign: int = 0
    smooth_projector: bool = False
    psi_op: Optional[QuantizedOp] = None

    def __post_init__(self):
        grid = self.P.grid
        self.grid = grid
        self.chi = self.cut.chi_op(grid)
        self.psi = self.psi_op if self.psi_op is not None else energy_window(self.P, self.cut.psi_w)
        self.proj = sign_projector(grid, self.cut.normal_axis, self.sign, self.smooth_projector)
        self.loc = self.cut.localizer(grid)

    def base(self, u: FourierField) -> FourierField:
        """(i/h)[P, chi o psi] u."""
        h = self.grid.h
        a = self.P.apply(self.chi.apply(self.psi.apply(u)))
        b = self.chi.apply(self.psi.apply(self.P.apply(u)))
        return FourierField(self.grid, (1j / h) * (a.coeffs - b.coeffs))

    def apply(self, u: FourierField) -> FourierField:
        return self.loc.apply(self.proj.apply(self.base(u)))

    def as_op(self) -> QuantizedOp:
        return QuantizedOp(self.grid, self.apply, kind="one_sided_commutator")


def one_sided_commutator(P: QuantizedOp, cut: CutoffSpec, sign: int = 0, smooth: bool = False,
                         psi_op: Optional[QuantizedOp] = None) -> OneSidedCommutator:
    if sign not in (-1, 0, 1):
        raise ValueError("sign must be -1, 0 or +1")
    return OneSidedCommutator(P, cut, sign, smooth, psi_op)


def operator_norm(apply: Callable, grid: TorusGrid, iters: int = 60, seed: int = 0) -> float:
    """Power-iteration estimate of the top |eigenvalue|; exact in the limit for normal operators."""
    rng = np.random.default_rng(seed)
    u = FourierField(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))
    u = u.normalized()
    est = 0.0
    for _ in range(iters):
        v = apply(u)
        nv = v.norm()
        if nv == 0:
            return 0.0
        est = nv
        u = v.scale(1.0 / nv)
    return float(est)


def flow_invariant_check(A: QuantizedOp, P: QuantizedOp, localizer: QuantizedOp,
                         tol_scale: float = 1e-3) -> dict:
    """defect = ||L (i/h)[P, A] L|| by power iteration; admitted if defect <= 1e-3 (1 + ||A||)."""
    grid = P.grid
    h = grid.h

    def B(u):
        v = localizer.apply(u)
        c = P.apply(A.apply(v)).coeffs - A.apply(P.apply(v)).coeffs
        return localizer.apply(FourierField(grid, (1j / h) * c))

    def BstarB(u):
        v = B(u)
        Bs = compose(localizer, QuantizedOp(grid, lambda w: FourierField(
            grid, (-1j / h) * (A.adjoint().apply(P.apply(w)).coeffs - P.apply(A.adjoint().apply(w)).coeffs))), localizer)
        return Bs.apply(v)

    try:
        defect = np.sqrt(operator_norm(BstarB, grid))
    except NotImplementedError:
        defect = operator_norm(B, grid)
    normA = operator_norm(A.apply, grid)
    tol = tol_scale * (1 + normA)
    return {"defect": float(defect), "norm_A": float(normA), "tol": float(tol), "admitted": bool(defect <= tol)}

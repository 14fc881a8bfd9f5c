"""Grids, Fourier fields, symbols, dense oracles and seeded random streams.

Storage convention: a field on the torus [-1,1)^n (period 2 by default) is

    u(x) = sum_k c_k exp(i * 2*pi/period * k.x)

with k on the FFT lattice {-N/2, ..., N/2-1}^n, coefficients kept in numpy's
fft ordering. With this convention ||u||^2 = period^n * sum |c_k|^2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


def _is_pow2(N: int) -> bool:
    return N >= 1 and (N & (N - 1)) == 0


@dataclass(frozen=True)
class TorusGrid:
    n: int
    N: int
    h: float
    period: float = 2.0

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"unsupported dimension n={self.n}")
        if not _is_pow2(self.N) or self.N < 8:
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if not self.period > 0:
            raise ValueError("period must be positive")

    @property
    def shape(self):
        return (self.N,) * self.n

    @property
    def size(self) -> int:
        return self.N ** self.n

    @property
    def spacing(self) -> float:
        return self.period / self.N

    @property
    def weight(self) -> float:
        return self.spacing ** self.n

    @property
    def volume(self) -> float:
        return self.period ** self.n

    @property
    def x0(self) -> float:
        return -self.period / 2

    @property
    def kappa(self) -> float:
        """Angular wavenumber per lattice unit, 2*pi/period."""
        return 2 * np.pi / self.period

    def axis(self) -> np.ndarray:
        return self.x0 + self.spacing * np.arange(self.N)

    def kaxis(self) -> np.ndarray:
        return np.fft.fftfreq(self.N, 1.0 / self.N)

    def coords(self) -> list[np.ndarray]:
        """Meshgrid of positions, one array per axis (indexing='ij')."""
        ax = self.axis()
        return list(np.meshgrid(*([ax] * self.n), indexing="ij"))

    def klattice(self) -> list[np.ndarray]:
        ka = self.kaxis()
        return list(np.meshgrid(*([ka] * self.n), indexing="ij"))

    def frequencies(self) -> list[np.ndarray]:
        """Semiclassical frequencies xi = h * 2*pi/period * k on the lattice."""
        return [self.h * self.kappa * k for k in self.klattice()]

    def phase(self) -> np.ndarray:
        """exp(i kappa k x0) per lattice point; converts FFT output to coefficients."""
        ph = np.ones(self.shape, dtype=complex)
        for k in self.klattice():
            ph = ph * np.exp(1j * self.kappa * k * self.x0)
        return ph

    def with_h(self, h: float) -> "TorusGrid":
        return TorusGrid(self.n, self.N, h, self.period)


def make_grid(n: int, N: int, h: float, period: float = 2.0) -> TorusGrid:
    return TorusGrid(int(n), int(N), float(h), float(period))


@dataclass
class FourierField:
    grid: TorusGrid
    coeffs: np.ndarray
    label: str = ""
    real: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.size != self.grid.size:
            raise ValueError("coefficient count does not match grid")
        self.coeffs = c.reshape(self.grid.shape)

    @classmethod
    def from_values(cls, grid: TorusGrid, values, label: str = "", real: Optional[bool] = None):
        v = np.asarray(values).reshape(grid.shape)
        c = np.fft.fftn(v) / grid.size * np.conj(grid.phase())
        if real is None:
            real = not np.iscomplexobj(values)
        return cls(grid, c, label, bool(real))

    def values(self) -> np.ndarray:
        v = np.fft.ifftn(self.coeffs * self.grid.phase()) * self.grid.size
        return v.real.copy() if self.real else v

    def norm(self) -> float:
        return float(np.sqrt(self.grid.volume * np.sum(np.abs(self.coeffs) ** 2)))

    def normalized(self) -> "FourierField":
        return FourierField(self.grid, self.coeffs / self.norm(), self.label, self.real)

    def conj_reflect_defect(self) -> float:
        """max |c(-k) - conj c(k)| relative to max |c|."""
        c = self.coeffs
        r = c
        for ax in range(c.ndim):
            r = np.roll(np.flip(r, axis=ax), 1, axis=ax)
        scale = max(np.max(np.abs(c)), 1e-300)
        # the Nyquist row has no partner inside the lattice; ignore it
        d = np.abs(r - np.conj(c))
        for ax in range(c.ndim):
            idx = [slice(None)] * c.ndim
            idx[ax] = self.grid.N // 2
            d[tuple(idx)] = 0.0
        return float(np.max(d) / scale)

    def __add__(self, other: "FourierField") -> "FourierField":
        _check_same(self.grid, other.grid)
        return FourierField(self.grid, self.coeffs + other.coeffs, self.label, self.real and other.real)

    def scale(self, a) -> "FourierField":
        return FourierField(self.grid, a * self.coeffs, self.label, self.real and np.isrealobj(a))


def _check_same(g1: TorusGrid, g2: TorusGrid):
    if g1 != g2:
        raise ValueError(f"grid mismatch: {g1} vs {g2}")


def l2_inner(u: FourierField, v: FourierField) -> complex:
    """<u, v> = integral u * conj(v), linear in the first slot."""
    _check_same(u.grid, v.grid)
    return complex(u.grid.volume * np.vdot(v.coeffs.ravel(), u.coeffs.ravel()))


def l2_inner_grid(u: FourierField, v: FourierField) -> complex:
    """Same pairing evaluated by the uniform grid quadrature."""
    _check_same(u.grid, v.grid)
    return complex(u.grid.weight * np.sum(u.values() * np.conj(v.values())))


def plane_wave(grid: TorusGrid, k: Sequence[int], real: str = "") -> FourierField:
    """exp(i kappa k.x); real='cos' or 'sin' gives the real combinations."""
    k = np.atleast_1d(np.asarray(k, dtype=int))
    c = np.zeros(grid.shape, dtype=complex)
    idx = tuple(int(ki) % grid.N for ki in k)
    midx = tuple(int(-ki) % grid.N for ki in k)
    if real == "cos":
        c[idx] += 0.5
        c[midx] += 0.5
    elif real == "sin":
        c[idx] += -0.5j
        c[midx] += 0.5j
    else:
        c[idx] = 1.0
    return FourierField(grid, c, f"plane{tuple(k)}{real}", bool(real))


@dataclass
class SymbolFn:
    """Phase-space symbol a(x, xi); x and xi are lists of arrays (one per axis)."""

    evaluator: Callable
    band_limit: Optional[int] = None
    support_hint: Optional[tuple] = None
    separable_parts: Optional[list] = None
    x_only: bool = False
    xi_only: bool = False
    real: bool = True
    label: str = ""

    def __call__(self, x, xi):
        return self.evaluator(x, xi)

    def separable_defect(self, samples: int = 64, seed: int = 0, n: int = 2) -> float:
        if not self.separable_parts:
            return 0.0
        rng = np.random.default_rng(seed)
        x = [rng.uniform(-1, 1, samples) for _ in range(n)]
        xi = [rng.uniform(-2, 2, samples) for _ in range(n)]
        ref = np.asarray(self(x, xi))
        tot = sum(np.asarray(f(x)) * np.asarray(g(xi)) for f, g in self.separable_parts)
        return float(np.max(np.abs(ref - tot)))


def symbol_x(f: Callable, label: str = "", real: bool = True) -> SymbolFn:
    return SymbolFn(lambda x, xi: f(x), x_only=True, real=real, label=label)


def symbol_xi(g: Callable, label: str = "", real: bool = True) -> SymbolFn:
    return SymbolFn(lambda x, xi: g(xi), xi_only=True, real=real, label=label)


ORACLE_CAP = 4096


@dataclass
class DenseOracle:
    matrix: np.ndarray
    grid: TorusGrid

    def apply_values(self, v: np.ndarray) -> np.ndarray:
        return (self.matrix @ np.asarray(v).ravel()).reshape(self.grid.shape)

    def apply(self, u: FourierField) -> FourierField:
        return FourierField.from_values(self.grid, self.apply_values(u.values()), real=False)

    def adjoint_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def dense_oracle_of(apply: Callable[[FourierField], FourierField], grid: TorusGrid) -> DenseOracle:
    """Column j of the matrix is apply(delta at grid point j), in position values."""
    M = grid.size
    if M > ORACLE_CAP:
        raise ValueError(f"dense oracle capped at {ORACLE_CAP} points, got {M}")
    mat = np.empty((M, M), dtype=complex)
    for j in range(M):
        e = np.zeros(M)
        e[j] = 1.0
        out = apply(FourierField.from_values(grid, e.reshape(grid.shape), real=False))
        mat[:, j] = np.asarray(out.values()).ravel()
    return DenseOracle(mat, grid)


@dataclass(frozen=True)
class SeededRng:
    """Counter-based (Philox) streams; child i depends only on (seed, i)."""

    seed: int
    algorithm: str = "philox4x64"

    def stream(self, *index: int) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=int(self.seed) & (2**64 - 1), spawn_key=tuple(int(i) for i in index))
        return np.random.Generator(np.random.Philox(ss))

"""Eigenfunctions of P(h) = -h^2 Delta + V - E on the torus and surrogate ensembles.

For V = 0 the eigenfunctions are lattice plane waves and h is tied to the
lattice radius so that the eigenvalue residual is exactly zero.
"""
from __future__ import annotations

import hashlib
import io
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .core import FourierField, SeededRng, TorusGrid, l2_inner, ORACLE_CAP
from .quantization import build_P, laplace_symbol


@dataclass
class EigenPair:
    u: FourierField
    Eh: float
    residual_norm: float
    k: Optional[tuple] = None


@dataclass
class QEEnsemble:
    members: list
    h_list: list
    construction: str
    seed: Optional[int] = None
    multiplicity: int = 0
    flagged: bool = False

    def gram_defect(self) -> float:
        m = len(self.members)
        G = np.array([[l2_inner(a.u, b.u) for b in self.members] for a in self.members])
        return float(np.max(np.abs(G - np.eye(m)))) if m else 0.0


def lattice_circle(n: int, R2: int) -> list:
    """All integer k with |k|^2 = R2, sorted."""
    R2 = int(R2)
    if n == 1:
        r = math.isqrt(R2)
        return [(r,), (-r,)] if r * r == R2 and r > 0 else []
    pts = []
    r = math.isqrt(R2)
    for a in range(-r, r + 1):
        b2 = R2 - a * a
        b = math.isqrt(b2)
        if b * b == b2:
            pts.append((a, b))
            if b:
                pts.append((a, -b))
    return sorted(pts)


def h_for_radius(R2: int, E: float = 1.0, period: float = 2.0) -> float:
    """h with |h 2 pi k / period|^2 = E on the circle |k|^2 = R2."""
    return math.sqrt(E) / (2 * math.pi / period * math.sqrt(R2))


def circle_of_grid(grid: TorusGrid, E: float, tol: float = 1e-9) -> int:
    R2 = E / (grid.h * grid.kappa) ** 2
    R2i = int(round(R2))
    if abs(R2 - R2i) > tol * max(1.0, R2) or not lattice_circle(grid.n, R2i):
        raise ValueError(f"no lattice points at radius^2 {R2:.6g} for h={grid.h}")
    return R2i


def weyl_sum(pts, J: int = 8) -> float:
    """max_{1<=j<=J} |mean exp(i j theta)| over the lattice angles."""
    th = np.array([math.atan2(b, a) for a, b in pts])
    return float(max(abs(np.mean(np.exp(1j * j * th))) for j in range(1, J + 1)))


def select_circle(lo: int, min_points: int = 32, J: int = 8) -> int:
    """In the band lo <= R < 2 lo, the circle with >= min_points points minimizing the Weyl sum."""
    best = None
    for R2 in range(lo * lo, 4 * lo * lo):
        pts = lattice_circle(2, R2)
        if len(pts) < min_points:
            continue
        w = weyl_sum(pts, J)
        if best is None or w < best[0]:
            best = (w, R2)
    if best is None:
        raise ValueError(f"no circle with >= {min_points} points in band [{lo}, {2 * lo})")
    return best[1]


def _check_nyquist(grid, pts):
    if max(abs(c) for k in pts for c in k) >= grid.N // 2:
        raise ValueError("lattice circle reaches the Nyquist frequency; increase N")


def exact_lattice_modes(grid: TorusGrid, E: float = 1.0) -> list:
    """Real cos/sin modes on the lattice circle selected by grid.h; normalized."""
    R2 = circle_of_grid(grid, E)
    pts = lattice_circle(grid.n, R2)
    _check_nyquist(grid, pts)
    reps = [k for k in pts if k > tuple(-c for c in k)]
    P = build_P(grid, None, E)
    out = []
    for k in reps:
        for kind in ("cos", "sin"):
            c = np.zeros(grid.shape, dtype=complex)
            ip = tuple(c_ % grid.N for c_ in k)
            im = tuple((-c_) % grid.N for c_ in k)
            if kind == "cos":
                c[ip], c[im] = 0.5, 0.5
            else:
                c[ip], c[im] = -0.5j, 0.5j
            u = FourierField(grid, c, f"{kind}{k}", True).normalized()
            r = P.apply(u).norm()
            out.append(EigenPair(u, 0.0, r, k))
    return out


def _gram_schmidt(fields):
    out = []
    for f in fields:
        c = f.coeffs.copy()
        for _ in range(2):
            for q in out:
                c = c - l2_inner(FourierField(f.grid, c), q) * q.coeffs
        g = FourierField(f.grid, c, f.label, f.real)
        nrm = g.norm()
        if nrm < 1e-10:
            raise ValueError("Gram-Schmidt breakdown: linearly dependent members")
        out.append(g.scale(1.0 / nrm))
    return out


def random_qe_superposition(grid: TorusGrid, E: float, count: int, seed: int = 0,
                            min_multiplicity: int = 8) -> QEEnsemble:
    """Random real superpositions over one lattice circle, Gram-Schmidt orthonormalized."""
    R2 = circle_of_grid(grid, E)
    pts = lattice_circle(grid.n, R2)
    _check_nyquist(grid, pts)
    m = len(pts)
    if count > m:
        raise ValueError(f"count {count} exceeds eigenspace dimension {m}")
    flagged = m < min_multiplicity
    if flagged:
        raise ValueError(f"multiplicity {m} < {min_multiplicity}: QE surrogate unreliable")
    rng = SeededRng(seed)
    reps = [k for k in pts if k > tuple(-c for c in k)]
    raw = []
    for i in range(count):
        g = rng.stream(i)
        z = (g.standard_normal(len(reps)) + 1j * g.standard_normal(len(reps))) / math.sqrt(2)
        c = np.zeros(grid.shape, dtype=complex)
        for zk, k in zip(z, reps):
            c[tuple(a % grid.N for a in k)] = zk
            c[tuple((-a) % grid.N for a in k)] = np.conj(zk)
        raw.append(FourierField(grid, c, f"qe{i}", True))
    P = build_P(grid, None, E)
    members = [EigenPair(u, 0.0, P.apply(u).norm()) for u in _gram_schmidt(raw)]
    return QEEnsemble(members, [grid.h], "random_superposition", seed, m, flagged)


def full_eigenspace(grid: TorusGrid, E: float = 1.0) -> QEEnsemble:
    """Orthonormal real basis of the whole eigenspace; its mean is the exact trace average."""
    modes = exact_lattice_modes(grid, E)
    return QEEnsemble(modes, [grid.h], "exact_lattice", None, len(modes))


def dense_pseudospectral(grid: TorusGrid, V, E: float) -> np.ndarray:
    """Real symmetric matrix of -h^2 Delta + V - E acting on grid values."""
    N = grid.N
    lam = (grid.h * grid.kappa * grid.kaxis()) ** 2
    F = np.fft.fft(np.eye(N), axis=0)
    D1 = np.real(np.fft.ifft(lam[:, None] * F, axis=0))
    D1 = 0.5 * (D1 + D1.T)
    if grid.n == 1:
        A = D1
    else:
        I = np.eye(N)
        A = np.kron(D1, I) + np.kron(I, D1)
    A = A - E * np.eye(grid.size)
    if V is not None:
        x = grid.coords()
        A[np.diag_indices(grid.size)] += np.real(V(x, [np.zeros_like(x[0])] * grid.n)).ravel()
    return A


def lanczos_modes(grid: TorusGrid, V, E: float, window: float, max_modes: int = 64,
                  seed: int = 0, tol: float = 1e-6) -> list:
    """Eigenpairs of the pseudospectral -h^2 Delta + V with eigenvalue in [E - window, E + window].

    Up to ORACLE_CAP unknowns: dense matrix and shift-invert Lanczos (LU at sigma = E).
    Above: Lanczos on (P - E)^2 applied matrix-free, smallest eigenvalues first.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    P = build_P(grid, V, E)
    M = grid.size
    k = min(max_modes, M - 2)
    dense = M <= ORACLE_CAP
    if dense:
        A = dense_pseudospectral(grid, V, E)
        if M <= 512:
            w, Q = sla.eigh(A)
        else:
            v0 = SeededRng(seed).stream(0).standard_normal(M)
            w, Q = spla.eigsh(A, k=k, sigma=0.0, which="LM", v0=v0)
    else:
        def mv(v):
            f = FourierField(grid, v.reshape(grid.shape))
            return P.apply(P.apply(f)).coeffs.ravel()

        op = spla.LinearOperator((M, M), matvec=mv, dtype=complex)
        v0 = SeededRng(seed).stream(0).standard_normal(M).astype(complex)
        w2, Q = spla.eigsh(op, k=k, which="SA", v0=v0)
        w = np.array([np.real(l2_inner(FourierField(grid, q.reshape(grid.shape)),
                                        P.apply(FourierField(grid, q.reshape(grid.shape)))))
                      / np.real(l2_inner(FourierField(grid, q.reshape(grid.shape)),
                                         FourierField(grid, q.reshape(grid.shape))))
                      for q in Q.T])
    sel = np.where(np.abs(w) <= window)[0]
    if sel.size == 0:
        raise ValueError(f"no eigenvalues within {window} of E={E}")
    sel = sel[np.argsort(w[sel])]
    out = []
    for cluster in _clusters(w[sel], 1e-8 * max(1.0, float(np.max(np.abs(w[sel]))))):
        vecs = [Q[:, sel[j]].reshape(grid.shape) for j in cluster]
        if dense:
            vecs = [FourierField.from_values(grid, v, real=False).coeffs for v in vecs]
        for u in _real_basis(grid, vecs, len(cluster)):
            Eh = float(np.real(l2_inner(P.apply(u), u)))
            res = (P.apply(u) + u.scale(-Eh)).norm()
            if res <= tol:
                out.append(EigenPair(u, Eh, res))
    out.sort(key=lambda p: abs(p.Eh))
    return out


def _clusters(vals, tol):
    groups, cur = [], [0]
    for j in range(1, len(vals)):
        if vals[j] - vals[j - 1] <= tol:
            cur.append(j)
        else:
            groups.append(cur)
            cur = [j]
    groups.append(cur)
    return groups


def _real_basis(grid, coeff_vecs, dim):
    """Real orthonormal basis of the span of real and imaginary parts (P is real when V is)."""
    cand = []
    for c in coeff_vecs:
        v = FourierField(grid, c).values()
        cand += [np.real(v).ravel(), np.imag(v).ravel()]
    A = np.array(cand).T
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    out = []
    for j in range(min(dim, int(np.sum(s > 1e-8 * s[0])))):
        out.append(FourierField.from_values(grid, U[:, j].reshape(grid.shape), real=True).normalized())
    return out


# ---- binary eigenbasis cache ----------------------------------------------

MAGIC = b"QFLX"
VERSION = 1


def cache_key(n, N, period, h, V_expr, window) -> str:
    s = repr((int(n), int(N), float(period).hex(), float(h).hex(), str(V_expr or ""), float(window or 0).hex()))
    return hashlib.sha256(s.encode()).hexdigest()[:32]


def encode_pairs(grid: TorusGrid, pairs) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<HBIddI", VERSION, grid.n, grid.N, grid.period, grid.h, len(pairs)))
    for p in pairs:
        buf.write(struct.pack("<dd", p.Eh, p.residual_norm))
        c = np.ascontiguousarray(p.u.coeffs.ravel(), dtype="<c16")
        buf.write(c.view("<f8").tobytes())
    body = buf.getvalue()
    return body + hashlib.sha256(body).digest()


def decode_pairs(data: bytes):
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise ValueError("checksum mismatch")
    if body[:4] != MAGIC:
        raise ValueError("bad magic")
    hdr = struct.calcsize("<HBIddI")
    ver, n, N, period, h, count = struct.unpack("<HBIddI", body[4:4 + hdr])
    if ver != VERSION:
        raise ValueError(f"unsupported cache version {ver}")
    grid = TorusGrid(n, N, h, period)
    pos = 4 + hdr
    pairs = []
    for _ in range(count):
        Eh, res = struct.unpack("<dd", body[pos:pos + 16])
        pos += 16
        nb = 16 * grid.size
        c = np.frombuffer(body[pos:pos + nb], dtype="<f8").view("<c16").reshape(grid.shape)
        pos += nb
        pairs.append(EigenPair(FourierField(grid, c.copy(), real=True), Eh, res))
    return grid, pairs


@dataclass
class EigenCache:
    root: Optional[Path]
    hits: int = 0
    misses: int = 0
    warnings: list = field(default_factory=list)

    def get_or_compute(self, key: str, compute):
        if self.root is None:
            self.misses += 1
            return compute()
        path = Path(self.root) / f"{key}.qflx"
        if path.exists():
            try:
                _, pairs = decode_pairs(path.read_bytes())
                self.hits += 1
                return pairs
            except ValueError as exc:
                self.warnings.append(f"{path.name}: {exc}; recomputing")
        self.misses += 1
        pairs = compute()
        Path(self.root).mkdir(parents=True, exist_ok=True)
        if pairs:
            path.write_bytes(encode_pairs(pairs[0].u.grid, pairs))
        return pairs

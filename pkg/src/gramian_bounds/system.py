"""Discrete-time linear systems x(t+1) = A x(t) + B u(t).

Holds the (A, B) pair, its diagonalization, a deterministic generator for
test systems with prescribed eigenvalue regions and conditioning, and the
plain state recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from mpmath import mp

from . import numerics
from .errors import Defective, DimensionMismatch, InfeasibleSpec, Singular
from .numerics import NATIVE_BITS
from .regions import Region

_DEFECT_COND = 1e8
_DEFECT_RECHECK_BITS = 256


@dataclass(frozen=True)
class LinearSystem:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.complex128)
        b = np.asarray(self.b, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"A must be square, got {a.shape}")
        if b.ndim == 1:
            b = b.reshape(-1, 1)
        if b.shape[0] != a.shape[0]:
            raise DimensionMismatch(f"B must have {a.shape[0]} rows, got {b.shape}")
        if not 1 <= b.shape[1] <= a.shape[0]:
            raise DimensionMismatch(f"need 1 <= k <= n, got k={b.shape[1]}, n={a.shape[0]}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def k(self) -> int:
        return self.b.shape[1]

    @property
    def b_fro(self) -> float:
        return float(np.linalg.norm(self.b))

    @property
    def is_hermitian(self) -> bool:
        scale = float(np.max(np.abs(self.a))) if self.a.size else 0.0
        dev = float(np.max(np.abs(self.a - self.a.conj().T)))
        return dev <= 2.0 ** (numerics.TOL.hermitian_check - NATIVE_BITS) * max(scale, 1e-300)

    @property
    def is_diagonal(self) -> bool:
        return not np.any(self.a - np.diag(np.diag(self.a)))

    def to_json_dict(self) -> dict:
        def rows(m):
            return [[[v.real, v.imag] for v in row] for row in m]
        return {"n": self.n, "k": self.k, "A": rows(self.a), "B": rows(self.b)}

    @staticmethod
    def from_json_dict(d: dict) -> "LinearSystem":
        def mat(rows):
            return np.array([[complex(re, im) for re, im in row] for row in rows],
                            dtype=np.complex128)
        sys = LinearSystem(mat(d["A"]), mat(d["B"]))
        if sys.n != d.get("n", sys.n) or sys.k != d.get("k", sys.k):
            raise DimensionMismatch("declared (n, k) do not match matrix shapes")
        return sys


def t_min(n: int, k: int) -> int:
    """ceil(n/k) - 1: earliest time the Gramian can be nonsingular."""
    if not 1 <= k <= n:
        raise DimensionMismatch(f"need 1 <= k <= n, got n={n}, k={k}")
    return -(-n // k) - 1


def simulate(sys: LinearSystem, x0, inputs: Sequence, bits: int = NATIVE_BITS):
    """Run the recursion from x(0)=x0 through the given input sequence.

    Inputs may be numpy vectors or (at bits > 53) mp column matrices.
    """
    x0 = np.asarray(x0, dtype=np.complex128).reshape(-1)
    if x0.shape[0] != sys.n:
        raise DimensionMismatch(f"x0 must have dimension {sys.n}")

    def dim_of(u):
        return u.rows if hasattr(u, "rows") else np.asarray(u).reshape(-1).shape[0]

    for u in inputs:
        if dim_of(u) != sys.k:
            raise DimensionMismatch(f"inputs must have dimension {sys.k}")
    if bits == NATIVE_BITS:
        x = x0.copy()
        for u in inputs:
            uv = numerics.to_numpy(u).reshape(-1) if hasattr(u, "rows") else \
                np.asarray(u, dtype=np.complex128).reshape(-1)
            x = sys.a @ x + sys.b @ uv
        return x
    with mp.workprec(bits):
        a = numerics.to_mp(sys.a)
        b = numerics.to_mp(sys.b)
        x = numerics.to_mp(x0.reshape(-1, 1))
        for u in inputs:
            um = u if hasattr(u, "rows") else numerics.to_mp(
                np.asarray(u, dtype=np.complex128).reshape(-1, 1))
            x = a * x + b * um
        return x


@dataclass(frozen=True)
class Diagonalization:
    """(V, D) with V A V^{-1} = D, plus the conditioning diagnosis."""

    v: np.ndarray
    eigenvalues: np.ndarray
    cond_v: float
    defect_flag: bool
    bits: int = NATIVE_BITS

    @property
    def d(self) -> np.ndarray:
        return np.diag(self.eigenvalues)


def _canonical_eig(a: np.ndarray):
    """numpy eig with deterministic ordering and column phases."""
    w, p = np.linalg.eig(a)
    order = np.lexsort((w.imag, w.real))
    w, p = w[order], p[:, order]
    norms = np.linalg.norm(p, axis=0)
    p = p / norms
    for j in range(p.shape[1]):
        i = int(np.argmax(np.abs(p[:, j])))
        ph = p[i, j]
        if ph != 0:
            p[:, j] *= np.conj(ph) / abs(ph)
    return w, p


def diagonalize(a, bits: int = NATIVE_BITS) -> Diagonalization:
    """Eigendecomposition of A; Hermitian input yields a unitary V."""
    if isinstance(a, LinearSystem):
        a = a.a
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"A must be square, got {a.shape}")

    scale = float(np.max(np.abs(a))) if a.size else 0.0
    herm_dev = float(np.max(np.abs(a - a.conj().T)))
    if herm_dev <= 2.0 ** (numerics.TOL.hermitian_check - bits) * max(scale, 1e-300):
        w, u = numerics.eig_hermitian(a, bits=bits)
        if bits == NATIVE_BITS:
            v = u.conj().T
            evals = np.asarray(w, dtype=np.complex128)
        else:
            v = numerics.to_numpy(u.H)
            evals = np.array([complex(x) for x in w], dtype=np.complex128)
        return Diagonalization(v, evals, 1.0, False, bits)

    w, p = _canonical_eig(a)
    try:
        cond53 = float(numerics.cond2(p, bits=NATIVE_BITS))
    except Singular:
        cond53 = math.inf
    defect_flag = cond53 > _DEFECT_COND
    if not defect_flag:
        return Diagonalization(np.linalg.inv(p), w, cond53, False, NATIVE_BITS)

    # Re-evaluate at higher precision before declaring the matrix defective.
    with mp.workprec(_DEFECT_RECHECK_BITS):
        am = numerics.to_mp(a)
        try:
            e, er = mp.eig(am)
        except Exception as exc:
            raise Defective(f"eigendecomposition failed at recheck: {exc}") from exc
        try:
            cond_hp = float(numerics.cond2(er, bits=_DEFECT_RECHECK_BITS))
        except Singular:
            cond_hp = math.inf
        if cond_hp > _DEFECT_COND:
            raise Defective(
                f"eigenvector condition number {cond_hp:.3g} persists above "
                f"{_DEFECT_COND:.0e} at {_DEFECT_RECHECK_BITS} bits"
            )
        order = sorted(range(len(e)), key=lambda i: (complex(e[i]).real, complex(e[i]).imag))
        w = np.array([complex(e[i]) for i in order], dtype=np.complex128)
        pm = mp.matrix(am.rows, am.cols)
        for jq, i in enumerate(order):
            col = er[:, i]
            nc = mp.norm(col)
            for r in range(am.rows):
                pm[r, jq] = col[r] / nc
        vm = pm ** -1
        return Diagonalization(numerics.to_numpy(vm), w, cond_hp, True, _DEFECT_RECHECK_BITS)


@dataclass(frozen=True)
class SystemSpec:
    """Input to the random test-system factory."""

    n: int
    k: int
    eigenvalue_region: Region
    target_cond_v: float = 1.0
    hermitian: bool = False
    stable_count: int | None = None
    seed: int = 0
    b_fro: float | None = 1.0

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise InfeasibleSpec(f"need 1 <= k <= n, got n={self.n}, k={self.k}")
        if self.target_cond_v < 1.0:
            raise InfeasibleSpec("target_cond_v must be >= 1")
        if self.hermitian:
            if self.target_cond_v != 1.0:
                raise InfeasibleSpec("hermitian mode requires target_cond_v = 1")
            m = self.n if self.stable_count is None else self.stable_count
            if not 0 <= m <= self.n:
                raise InfeasibleSpec(f"stable_count must lie in [0, n], got {m}")
        elif self.stable_count is not None:
            raise InfeasibleSpec("stable_count only applies to hermitian mode")

    @property
    def m(self) -> int:
        return self.n if self.stable_count is None else self.stable_count


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based (Philox) generator, deterministic in (seed, stream)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed & (2**64 - 1), *stream])))


def _haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))


def generate(spec: SystemSpec) -> LinearSystem:
    """Deterministic random system with eigenvalues in the given region.

    Eigenvalues are sampled uniformly from the region (area for filled
    shapes, arc length for curves); V is a product U1 * diag(geometric
    singular values) * U2^* with cond(V) exactly target_cond_v; B has
    standard complex Gaussian entries scaled to the requested Frobenius
    norm.  In hermitian mode the m stable eigenvalues come from the
    (real-interval) region and the rest are uniform over +/-(1, 2].
    """
    rng = rng_for(spec.seed, 0xA11CE)
    n, k = spec.n, spec.k

    if spec.hermitian:
        bounds = spec.eigenvalue_region.real_interval_bounds()
        cloud_ok = False
        if bounds is None and spec.eigenvalue_region.is_discrete:
            pts = spec.eigenvalue_region.points()
            if np.max(np.abs(pts.imag)) <= 1e-13 and np.max(np.abs(pts.real)) <= 1.0:
                cloud_ok = True
        if bounds is not None:
            lo, hi = bounds
            if lo < -1.0 - 1e-12 or hi > 1.0 + 1e-12:
                raise InfeasibleSpec("hermitian mode needs the region inside [-1, 1]")
        elif not cloud_ok:
            raise InfeasibleSpec("hermitian mode needs a real region inside [-1, 1]")
        m = spec.m
        stable = spec.eigenvalue_region.sample(rng, m).real
        # pull strictly inside [-1, 1] so assembly rounding cannot spill out
        stable = np.clip(stable * (1.0 - 1e-12), -1.0, 1.0)
        mags = 1.0 + rng.random(n - m)  # (1, 2]
        signs = np.where(rng.random(n - m) < 0.5, -1.0, 1.0)
        evals = np.concatenate([stable, mags * signs]).astype(np.complex128)
        u = _haar_unitary(rng, n)
        a = u.conj().T @ np.diag(evals) @ u
        a = (a + a.conj().T) / 2
    else:
        evals = spec.eigenvalue_region.sample(rng, n)
        u1 = _haar_unitary(rng, n)
        u2 = _haar_unitary(rng, n)
        sigma = spec.target_cond_v ** (-np.arange(n) / max(n - 1, 1))
        v = u1 @ np.diag(sigma) @ u2.conj().T
        v_inv = u2 @ np.diag(1.0 / sigma) @ u1.conj().T
        a = v_inv @ np.diag(evals) @ v

    bmat = (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) / math.sqrt(2)
    if spec.b_fro is not None:
        bmat *= spec.b_fro / np.linalg.norm(bmat)
    return LinearSystem(a, bmat)

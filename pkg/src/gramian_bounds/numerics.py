"""Precision-aware dense linear algebra.

Two backends sit behind one set of function contracts:

* ``bits == 53``: native binary64 via numpy/LAPACK.
* ``64 <= bits <= 4096``: software floats via mpmath (gmpy-backed).

All inputs are lifted exactly (binary64 embeds in every mpf precision), so
re-running an operation at higher precision refines the same problem.  The
quantities this package cares about (lambda_min values down to ~1e-37 against
lambda_max ~ 1) are unresolvable at 53 bits, hence the escalation driver
``run_escalated`` that doubles the precision until a smallest eigen/singular
value clears the resolution margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
import mpmath
from mpmath import mp

from .errors import NoConvergence, NotHermitian, Singular

NATIVE_BITS = 53
MIN_MP_BITS = 64
MAX_BITS = 4096


@dataclass(frozen=True)
class Tolerances:
    """Exponents c of the 2**(c - bits) tolerance factors, pinned by tests."""

    hermitian_check: int = 4
    psd_floor: int = 8
    solver_residual: int = 12
    cond_singular: int = 12
    diagonalization_residual: int = 16
    steering_pinv: int = 16
    escalation_margin: int = 20


TOL = Tolerances()


def validate_bits(bits: int) -> int:
    bits = int(bits)
    if bits != NATIVE_BITS and not (MIN_MP_BITS <= bits <= MAX_BITS):
        raise ValueError(
            f"precision_bits must be 53 or in [{MIN_MP_BITS}, {MAX_BITS}], got {bits}"
        )
    return bits


def next_bits(bits: int) -> int:
    """Next rung of the escalation ladder (doubling, capped)."""
    if bits >= MAX_BITS:
        return MAX_BITS
    return min(max(2 * bits, MIN_MP_BITS), MAX_BITS)


def eps_at(bits: int) -> float:
    return 2.0 ** (1 - bits)


def tol_at(exponent: int, bits: int):
    """2**(exponent - bits), exact in either backend."""
    if bits == NATIVE_BITS:
        return 2.0 ** (exponent - bits)
    return mp.mpf(2) ** (exponent - bits)


class _PrecisionRange(Exception):
    """Internal: binary64 cannot represent the requested computation."""


# ---------------------------------------------------------------------------
# Conversions between backends
# ---------------------------------------------------------------------------


def _is_mp_matrix(m: Any) -> bool:
    return isinstance(m, mpmath.matrix)


def to_numpy(m) -> np.ndarray:
    """Matrix/vector of either backend -> complex128 ndarray (may overflow)."""
    if isinstance(m, np.ndarray):
        return np.asarray(m, dtype=np.complex128)
    if _is_mp_matrix(m):
        out = np.empty((m.rows, m.cols), dtype=np.complex128)
        for i in range(m.rows):
            for j in range(m.cols):
                out[i, j] = complex(m[i, j])
        return out
    return np.asarray(m, dtype=np.complex128)


def to_mp(m) -> mpmath.matrix:
    """ndarray (or nested lists) -> mp.matrix, lifting binary64 exactly."""
    if _is_mp_matrix(m):
        return m.copy()
    a = np.asarray(m)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    rows, cols = a.shape
    out = mp.matrix(rows, cols)
    if np.iscomplexobj(a):
        for i in range(rows):
            for j in range(cols):
                v = a[i, j]
                out[i, j] = mp.mpc(float(v.real), float(v.imag))
    else:
        for i in range(rows):
            for j in range(cols):
                out[i, j] = mp.mpf(float(a[i, j]))
    return out


def _mp_is_real(m: mpmath.matrix) -> bool:
    for i in range(m.rows):
        for j in range(m.cols):
            v = m[i, j]
            if isinstance(v, mpmath.mpc) and v.imag != 0:
                return False
    return True


def _as_backend(m, bits: int):
    if bits == NATIVE_BITS:
        a = to_numpy(m)
        if not np.all(np.isfinite(a)):
            raise _PrecisionRange("matrix entries exceed binary64 range")
        return a
    return to_mp(m)


def _max_abs(m, bits: int):
    if bits == NATIVE_BITS:
        return float(np.max(np.abs(m))) if m.size else 0.0
    best = mp.mpf(0)
    for i in range(m.rows):
        for j in range(m.cols):
            a = abs(m[i, j])
            if a > best:
                best = a
    return best


def check_hermitian(m, bits: int = NATIVE_BITS) -> None:
    """Raise NotHermitian unless max|M - M*| <= 2**(4-bits) * max|M|."""
    bits = validate_bits(bits)
    m = _as_backend(m, bits)
    if bits == NATIVE_BITS:
        dev = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
        scale = _max_abs(m, bits)
    else:
        # mp matrix arithmetic rounds through the active context
        with mp.workprec(bits):
            dev = _max_abs(m - m.H, bits)
            scale = _max_abs(m, bits)
    if dev > tol_at(TOL.hermitian_check, bits) * max(scale, 0) and dev > 0:
        raise NotHermitian(f"symmetry deviation {dev} exceeds tolerance for scale {scale}")


# ---------------------------------------------------------------------------
# Core operations
# ---------------------------------------------------------------------------


def eig_hermitian(m, bits: int = NATIVE_BITS, want_vectors: bool = True):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvector matrix U with M = U diag(w) U*),
    or (eigenvalues, None) when want_vectors is False.
    """
    bits = validate_bits(bits)
    a = _as_backend(m, bits)
    if bits == NATIVE_BITS:
        if a.shape[0] != a.shape[1]:
            raise NotHermitian("matrix is not square")
        check_hermitian(a, bits)
        if want_vectors:
            w, u = np.linalg.eigh(a)
            return w, u
        return np.linalg.eigvalsh(a), None
    if a.rows != a.cols:
        raise NotHermitian("matrix is not square")
    check_hermitian(a, bits)
    with mp.workprec(bits):
        try:
            if _mp_is_real(a):
                ar = a.apply(mp.re)
                if want_vectors:
                    w, u = mp.eigsy(ar)
                    return list(w), u
                w = mp.eigsy(ar, eigvals_only=True)
                return list(w), None
            if want_vectors:
                w, u = mp.eighe(a)
                return list(w), u
            w = mp.eighe(a, eigvals_only=True)
            return list(w), None
        except mpmath.libmp.NoConvergence as exc:  # pragma: no cover - defensive
            raise NoConvergence(str(exc)) from exc


def svd(m, bits: int = NATIVE_BITS, want_uv: bool = False):
    """Singular values (descending) and optionally U, V* with M = U diag(s) V*."""
    bits = validate_bits(bits)
    a = _as_backend(m, bits)
    if bits == NATIVE_BITS:
        if want_uv:
            u, s, vh = np.linalg.svd(a, full_matrices=False)
            return s, u, vh
        return np.linalg.svd(a, compute_uv=False)
    with mp.workprec(bits):
        try:
            real = _mp_is_real(a)
            fn = mp.svd_r if real else mp.svd_c
            arg = a.apply(mp.re) if real else a
            if want_uv:
                u, s, vh = fn(arg)
                return list(s), u, vh
            s = fn(arg, compute_uv=False)
            return list(s)
        except mpmath.libmp.NoConvergence as exc:  # pragma: no cover - defensive
            raise NoConvergence(str(exc)) from exc


def least_squares(basis, target, bits: int = NATIVE_BITS):
    """Minimum-norm least squares.

    basis: n x j matrix (j may be 0), target: length-n vector.
    Returns (coefficients, residual_norm) with
    residual_norm = min_a ||target - basis a||_2.
    """
    bits = validate_bits(bits)
    if bits == NATIVE_BITS:
        a = to_numpy(basis) if np.size(basis) else np.zeros((len(np.atleast_1d(target)), 0), dtype=np.complex128)
        t = np.asarray(target, dtype=np.complex128).reshape(-1)
        if a.ndim == 1:
            a = a.reshape(-1, 1)
        if a.shape[1] == 0:
            return np.zeros(0, dtype=np.complex128), float(np.linalg.norm(t))
        coef, _, _, _ = np.linalg.lstsq(a, t, rcond=max(a.shape) * np.finfo(float).eps)
        res = float(np.linalg.norm(t - a @ coef))
        return coef, res
    a = to_mp(basis) if (hasattr(basis, "rows") or np.size(basis)) else None
    if hasattr(target, "rows"):
        t = to_mp(target)
    else:
        t = to_mp(np.asarray(target, dtype=np.complex128).reshape(-1, 1))
    with mp.workprec(bits):
        if a is None or a.cols == 0:
            return [], mp.norm(t)
        s, u, vh = svd(a, bits=bits, want_uv=True)
        cutoff = max(a.rows, a.cols) * tol_at(1, bits) * (s[0] if s else mp.mpf(0))
        ut_t = u.H * t
        v = vh.H
        coef = mp.matrix(a.cols, 1)
        for i in range(len(s)):
            if s[i] > cutoff:
                coef += v[:, i] * (ut_t[i] / s[i])
        res = mp.norm(t - a * coef)
        return [coef[i] for i in range(a.cols)], res


def cond2(m, bits: int = NATIVE_BITS):
    """Spectral condition number sigma_max / sigma_min."""
    bits = validate_bits(bits)
    s = svd(m, bits=bits)
    smax, smin = s[0], s[len(s) - 1]
    if smin <= tol_at(TOL.cond_singular, bits) * smax:
        raise Singular(f"sigma_min {smin} below tolerance relative to sigma_max {smax}")
    return smax / smin


# ---------------------------------------------------------------------------
# Escalation driver
# ---------------------------------------------------------------------------


@dataclass
class Escalated:
    value: Any
    bits_used: int
    resolved: bool


def run_escalated(
    compute: Callable[[int], Any],
    is_resolved: Callable[[Any, int], bool],
    start_bits: int = NATIVE_BITS,
    max_bits: int = MAX_BITS,
) -> Escalated:
    """Re-run ``compute`` doubling the precision until ``is_resolved``.

    ``compute`` may raise the internal precision-range error at 53 bits
    (binary64 overflow); that forces a move to the mpmath backend rather
    than failing.
    """
    bits = validate_bits(start_bits)
    max_bits = validate_bits(max_bits)
    while True:
        try:
            value = compute(bits)
        except _PrecisionRange:
            if bits >= max_bits:
                raise
            bits = next_bits(bits)
            continue
        if is_resolved(value, bits):
            return Escalated(value, bits, True)
        if bits >= max_bits:
            return Escalated(value, bits, False)
        bits = next_bits(bits)


def smallest_resolved(value_min, value_max, bits: int, margin: int | None = None) -> bool:
    """Resolution rule: value_min >= 2**(margin-bits) * value_max."""
    if margin is None:
        margin = TOL.escalation_margin
    if value_max == 0:
        return True
    return value_min >= tol_at(margin, bits) * value_max


# ---------------------------------------------------------------------------
# Serialization of extended-precision reals
# ---------------------------------------------------------------------------


def decimal_digits(bits: int) -> int:
    return max(17, int(math.ceil(bits * math.log10(2))) + 2)


def to_decimal_string(x, bits: int = NATIVE_BITS) -> str:
    """Decimal string carrying the full precision of ``x``."""
    if isinstance(x, (int, float)):
        return repr(float(x))
    with mp.workprec(max(bits, MIN_MP_BITS)):
        return mp.nstr(
            mp.mpf(x), decimal_digits(bits), strip_zeros=True, min_fixed=1, max_fixed=0
        )


def float_or_mpf(x):
    """Narrow an mpf back to float when it is exactly representable."""
    if isinstance(x, (int, float)):
        return float(x)
    f = float(x)
    if math.isfinite(f) and mp.mpf(f) == x:
        return f
    return x

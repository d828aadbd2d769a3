"""Controllability Gramians, minimum eigenvalues, and steering energy.

W(t) = sum_{i=0}^t A^i B B^* (A^*)^i is computed through the controllability
matrix S(t) = [B, AB, ..., A^t B] as W = S S^* (sigma_min(S) is quadratically
better conditioned than lambda_min(W)); exactly diagonal A instead uses the
per-entry geometric closed form, which is what makes t ~ 20 n^2 scans
tractable.  lambda_min is resolved through the precision-escalation ladder:
a report is resolved once lambda_min >= 2**(20-p) * lambda_max, which leaves
it at least ~6 significant digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from mpmath import mp

from . import numerics
from .errors import DimensionMismatch, Overflow, Unreachable
from .numerics import MAX_BITS, NATIVE_BITS, _PrecisionRange, tol_at
from .system import LinearSystem, simulate

_F64_SAFE_LOG2 = 960  # stay clear of the binary64 exponent ceiling


@dataclass
class GramianReport:
    t: int
    w: object  # complex128 ndarray at 53 bits, mp.matrix above
    lambda_min: object  # float or mpf, >= 0
    lambda_max: object
    bits_used: int
    resolved: bool

    def to_json_dict(self) -> dict:
        return {
            "t": self.t,
            "lambda_min": numerics.to_decimal_string(self.lambda_min, self.bits_used),
            "lambda_max": numerics.to_decimal_string(self.lambda_max, self.bits_used),
            "precision_bits_used": self.bits_used,
            "resolved": self.resolved,
        }


@dataclass
class SteeringPlan:
    inputs: list  # u(0..t-1), numpy vectors at 53 bits, mp column matrices above
    energy: object
    target_residual: float
    bits_used: int


def _growth_log2(sys: LinearSystem, t: int) -> float:
    """Upper estimate of log2 max|entry of S(t)|."""
    rho = float(np.linalg.norm(sys.a, 2))
    return t * math.log2(max(rho, 1.0)) + math.log2(max(sys.b_fro, 1e-300)) + 4.0


def suggest_start_bits(sys: LinearSystem, t: int, head_room: int = 84) -> int:
    """Precision rung from which escalation is likely to resolve lambda_min.

    Based on the spectral-radius growth of the dynamic range
    lambda_max/lambda_min ~ rho(A)^(2t); the escalation rule still applies
    from the returned rung.
    """
    try:
        rho = float(np.max(np.abs(np.linalg.eigvals(sys.a))))
    except np.linalg.LinAlgError:  # pragma: no cover - defensive
        rho = float(np.linalg.norm(sys.a, 2))
    if rho <= 1.0:
        return NATIVE_BITS
    need = 2.0 * t * math.log2(rho) + head_room
    bits = NATIVE_BITS
    while bits < need and bits < MAX_BITS:
        bits = numerics.next_bits(bits)
    return bits


def _columns_native(sys: LinearSystem, t: int) -> np.ndarray:
    if _growth_log2(sys, t) > _F64_SAFE_LOG2:
        raise _PrecisionRange("S(t) exceeds binary64 range")
    blocks = [sys.b]
    x = sys.b
    for _ in range(t):
        x = sys.a @ x
        blocks.append(x)
    s = np.hstack(blocks)
    if not np.all(np.isfinite(s)):
        raise _PrecisionRange("S(t) exceeds binary64 range")
    return s


def _w_native(sys: LinearSystem, t: int):
    s = _columns_native(sys, t)
    w = s @ s.conj().T
    return (w + w.conj().T) / 2


def _w_mp(sys: LinearSystem, t: int, bits: int):
    """W = S S^* with mpmath scalars; fdot keeps one rounding per entry."""
    n, k = sys.n, sys.k
    a_rows = [[complex(v) if v.imag else float(v.real) for v in row] for row in sys.a]
    real_only = not (np.iscomplexobj(sys.a) and np.any(sys.a.imag)) and not np.any(sys.b.imag)
    with mp.workprec(bits):
        cols = []
        for j in range(k):
            col = [float(v.real) if real_only else complex(v) for v in sys.b[:, j]]
            cols.append([mp.mpf(v) if real_only else mp.mpc(v) for v in col])
        for step in range(t):
            base = step * k
            for j in range(k):
                prev = cols[base + j]
                cols.append([mp.fdot(zip(a_rows[i], prev)) for i in range(n)])
        rows = [[c[i] for c in cols] for i in range(n)]
        w = mp.matrix(n, n)
        for i in range(n):
            for j in range(i, n):
                v = mp.fdot(zip(rows[i], rows[j]), conjugate=True)
                w[i, j] = v
                if j != i:
                    w[j, i] = mp.conj(v)
            w[i, i] = mp.re(w[i, i])
        return w


def _w_diagonal(sys: LinearSystem, t: int, bits: int):
    """Exact geometric-sum form of W(t) for diagonal A (any t).

    W_ab = (B B^*)_ab * sum_{i=0}^t (d_a conj(d_b))^i; the scalar sums are
    evaluated with enough guard bits that near-cancellation at
    d_a conj(d_b) ~ 1 cannot contaminate the requested precision.
    """
    n = sys.n
    d = np.diag(sys.a)
    guard = max(bits, NATIVE_BITS) + 130 + int(math.log2(t + 2)) + 8
    with mp.workprec(guard):
        dm = [mp.mpc(v) if v.imag else mp.mpf(v.real) for v in d]
        g = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                x = dm[i] * mp.conj(dm[j])
                if x == 1:
                    val = mp.mpf(t + 1)
                else:
                    val = (x ** (t + 1) - 1) / (x - 1)
                g[i][j] = val
                if j != i:
                    g[j][i] = mp.conj(val)
        bmat = [[complex(v) for v in row] for row in sys.b]
        w = mp.matrix(n, n)
        for i in range(n):
            for j in range(i, n):
                bb = mp.fdot(zip(bmat[i], bmat[j]), conjugate=True)
                v = bb * g[i][j]
                w[i, j] = v
                if j != i:
                    w[j, i] = mp.conj(v)
            w[i, i] = mp.re(w[i, i])
    if bits == NATIVE_BITS:
        wn = numerics.to_numpy(w)
        if not np.all(np.isfinite(wn)):
            raise _PrecisionRange("W(t) exceeds binary64 range")
        return wn
    with mp.workprec(bits):
        return w.apply(lambda v: +v)


def _w_at(sys: LinearSystem, t: int, bits: int):
    if sys.is_diagonal:
        return _w_diagonal(sys, t, bits)
    if bits == NATIVE_BITS:
        return _w_native(sys, t)
    return _w_mp(sys, t, bits)


def gramian(
    sys: LinearSystem,
    t: int,
    bits: int | None = None,
    start_bits: int | None = None,
    max_bits: int = MAX_BITS,
) -> GramianReport:
    """t-step controllability Gramian with a resolved smallest eigenvalue.

    ``bits`` pins a single precision (raising Overflow if binary64 cannot
    represent the entries); otherwise the escalation ladder runs from
    ``start_bits`` until lambda_min resolves or the cap is hit.
    """
    if t < 0:
        raise DimensionMismatch("t must be >= 0")
    structural_zero = (t + 1) * sys.k < sys.n

    def compute(b):
        w = _w_at(sys, t, b)
        evals, _ = numerics.eig_hermitian(w, bits=b, want_vectors=False)
        lam_min = evals[0]
        lam_max = evals[len(evals) - 1]
        psd_ok = lam_min >= -tol_at(numerics.TOL.psd_floor, b) * max(lam_max, 0)
        if lam_min < 0:
            lam_min = 0.0 if isinstance(lam_min, float) else mp.mpf(0)
        return w, lam_min, lam_max, psd_ok

    if bits is not None:
        numerics.validate_bits(bits)
        try:
            w, lam_min, lam_max, psd_ok = compute(bits)
        except _PrecisionRange as exc:
            raise Overflow(str(exc)) from exc
        if structural_zero:
            lam_min = 0.0
        resolved = psd_ok and (structural_zero
                               or numerics.smallest_resolved(lam_min, lam_max, bits))
        return GramianReport(t, w, lam_min, lam_max, bits, resolved)

    start = start_bits if start_bits is not None else NATIVE_BITS
    if structural_zero:
        out = numerics.run_escalated(compute, lambda val, b: val[3],
                                     start_bits=start, max_bits=max_bits)
        w, _, lam_max, _ = out.value
        return GramianReport(t, w, 0.0, lam_max, out.bits_used, True)

    out = numerics.run_escalated(
        compute,
        lambda val, b: val[3] and numerics.smallest_resolved(val[1], val[2], b),
        start_bits=start,
        max_bits=max_bits,
    )
    w, lam_min, lam_max, _ = out.value
    return GramianReport(t, w, lam_min, lam_max, out.bits_used, out.resolved)


def control_energy(sys: LinearSystem, t: int, start_bits: int | None = None):
    """Worst-case energy 1/lambda_min(W(t-1)); +inf when W(t-1) is singular."""
    if t < 1:
        raise DimensionMismatch("t must be >= 1")
    rep = gramian(sys, t - 1, start_bits=start_bits)
    if rep.lambda_min == 0 or not rep.resolved:
        return math.inf
    val = 1 / rep.lambda_min
    f = float(val)
    return f if math.isfinite(f) else val


def _power_apply(a, x, t: int, bits: int):
    """A^t x at the given precision."""
    if bits == NATIVE_BITS:
        y = np.asarray(x, dtype=np.complex128).reshape(-1)
        for _ in range(t):
            y = a @ y
        return y
    with mp.workprec(bits):
        am = numerics.to_mp(a)
        y = numerics.to_mp(np.asarray(x).reshape(-1, 1))
        for _ in range(t):
            y = am * y
        return y


def steer(sys: LinearSystem, x0, xf, t: int, start_bits: int | None = None) -> SteeringPlan:
    """Minimum-energy open-loop input driving x0 to xf in t steps.

    u(i) = B^*(A^*)^{t-1-i} W(t-1)^- (xf - A^t x0); raises Unreachable when
    the target has a component outside the range of W(t-1) (pseudoinverse
    cutoff 2**(16-p) * lambda_max).
    """
    if t < 1:
        raise DimensionMismatch("t must be >= 1")
    x0 = np.asarray(x0, dtype=np.complex128).reshape(-1)
    xf = np.asarray(xf, dtype=np.complex128).reshape(-1)
    if x0.shape[0] != sys.n or xf.shape[0] != sys.n:
        raise DimensionMismatch(f"states must have dimension {sys.n}")

    rep = gramian(sys, t - 1, start_bits=start_bits)
    p = rep.bits_used
    evals, u = numerics.eig_hermitian(rep.w, bits=p, want_vectors=True)
    lam_max = evals[len(evals) - 1]
    cutoff = tol_at(numerics.TOL.steering_pinv, p) * lam_max

    if p == NATIVE_BITS:
        delta = xf - _power_apply(sys.a, x0, t, p)
        coef = u.conj().T @ delta
        keep = np.asarray(evals) > cutoff
        norm_delta = float(np.linalg.norm(delta))
        out_of_range = float(np.linalg.norm(coef[~keep]))
        if norm_delta > 0 and out_of_range > 1e-8 * norm_delta:
            raise Unreachable(
                f"target component {out_of_range:.3g} outside range(W) "
                f"(|delta|={norm_delta:.3g})"
            )
        winv = np.where(keep, coef / np.where(keep, np.asarray(evals), 1.0), 0.0)
        wvec = u @ winv
        energy = float(np.real(np.vdot(delta, wvec)))
        us = []
        z = wvec
        for _ in range(t):
            us.append(sys.b.conj().T @ z)
            z = sys.a.conj().T @ z
        us.reverse()
        xt = simulate(sys, x0, us, bits=p)
        resid = float(np.linalg.norm(xt - xf))
        return SteeringPlan(us, max(energy, 0.0), resid, p)

    with mp.workprec(p):
        delta = _power_apply(sys.a, x0, t, p)
        xfm = numerics.to_mp(xf.reshape(-1, 1))
        delta = xfm - delta
        coef = u.H * delta
        norm_delta = mp.norm(delta)
        out_sq = mp.mpf(0)
        winv = mp.matrix(sys.n, 1)
        for i in range(sys.n):
            if evals[i] > cutoff:
                winv[i] = coef[i] / evals[i]
            else:
                out_sq += abs(coef[i]) ** 2
        if norm_delta > 0 and mp.sqrt(out_sq) > mp.mpf("1e-8") * norm_delta:
            raise Unreachable(
                f"target component {mp.nstr(mp.sqrt(out_sq), 5)} outside range(W)"
            )
        wvec = u * winv
        energy = mp.re((delta.H * wvec)[0])
        if energy < 0:
            energy = mp.mpf(0)
        am_h = numerics.to_mp(sys.a).H
        bm_h = numerics.to_mp(sys.b).H
        us = []
        z = wvec
        for _ in range(t):
            us.append(bm_h * z)
            z = am_h * z
        us.reverse()
        xt = simulate(sys, x0, us, bits=p)
        resid = float(mp.norm(xt - xfm))
        return SteeringPlan(us, energy, resid, p)


def worst_direction(sys: LinearSystem, t: int, start_bits: int | None = None):
    """Hardest-to-reach unit state and the energy to reach it in t steps."""
    if t < 1:
        raise DimensionMismatch("t must be >= 1")
    rep = gramian(sys, t - 1, start_bits=start_bits)
    evals, u = numerics.eig_hermitian(rep.w, bits=rep.bits_used, want_vectors=True)
    if rep.bits_used == NATIVE_BITS:
        y = u[:, 0]
    else:
        y = numerics.to_numpy(u[:, 0]).reshape(-1)
    y = y / np.linalg.norm(y)
    plan = steer(sys, np.zeros(sys.n), y, t, start_bits=rep.bits_used)
    return y, plan.energy

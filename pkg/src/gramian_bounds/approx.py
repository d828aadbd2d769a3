"""Best polynomial approximation.

Three related quantities drive the energy bounds:

* ``phi_exact(n, m)``: minimax error of degree-m real approximation to x^n on
  [-1, 1], by Remez exchange.  The exchange runs on the Chebyshev *tail* of
  x^n (the part of the expansion above degree m), which keeps the whole
  solve in float64 even when the answer is ~1e-36: the tail coefficients are
  tiny but exactly representable, so no cancellation against x^n ever
  happens.
* ``err_region(l, X)``: minimax error of approximating z^l on a complex
  region by degree l-1 polynomials with complex coefficients, by Lawson's
  iteratively reweighted least squares on a boundary grid.  Same
  cancellation-free trick: the target is the leading basis component of z^l.
* ``monic_residual``: min over monic polynomials p of ||p(D) z||, the
  least-squares residual that appears in both theorem proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from mpmath import mp

from . import numerics
from .errors import NoConvergence
from .numerics import NATIVE_BITS
from .regions import Region, principal_ellipse


# ---------------------------------------------------------------------------
# Chebyshev expansion of x^n
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChebyshevExpansion:
    """Sparse Chebyshev representation sum_k coeff_k T_degree_k(x)."""

    n: int
    terms: tuple[tuple[int, float], ...]

    def coefficient_vector(self) -> np.ndarray:
        out = np.zeros(self.n + 1)
        for deg, c in self.terms:
            out[deg] += c
        return out

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.polynomial.chebyshev.chebval(x, self.coefficient_vector())

    @property
    def degree(self) -> int:
        return max((deg for deg, _ in self.terms), default=0)


def power_expansion(n: int) -> ChebyshevExpansion:
    """x^n = 2^(1-n) sum_{i=0}^{floor(n/2)} C(n,i) T_{n-2i}(x) delta_{i,n}/2."""
    if n < 0:
        raise ValueError("n must be >= 0")
    terms = []
    for i in range(n // 2 + 1):
        deg = n - 2 * i
        delta = 1.0 if 2 * i == n else 2.0
        coeff = float(math.comb(n, i)) * 2.0 ** (1 - n) * (delta / 2.0)
        terms.append((deg, coeff))
    return ChebyshevExpansion(n, tuple(terms))


def cheb_truncation(n: int, m: int) -> tuple[ChebyshevExpansion, float]:
    """Degree-m truncation of the x^n expansion and its binomial tail bound.

    Keeps the terms T_{n-2i} with i >= i' = ceil((n-m)/2); the dropped head
    sums to tail_bound = 2^(1-n) sum_{i<i'} C(n,i), an upper bound on
    sup_[-1,1] |x^n - poly(x)|.
    """
    if not (n >= m >= 0) or n < 1:
        raise ValueError(f"need n >= m >= 0 and n >= 1, got n={n}, m={m}")
    i_prime = (n - m + 1) // 2
    full = power_expansion(n)
    kept = tuple((deg, c) for deg, c in full.terms if deg <= m)
    head = sum(math.comb(n, i) for i in range(i_prime))
    tail_bound = float(head) * 2.0 ** (1 - n)
    return ChebyshevExpansion(n, kept), tail_bound


def phi_hoeffding(n: int, m: int) -> float:
    """Hoeffding-form decay estimate 2 exp(-m^2 / (2n))."""
    if not (n >= m >= 1):
        raise ValueError(f"need n >= m >= 1, got n={n}, m={m}")
    return 2.0 * math.exp(-(m * m) / (2.0 * n))


# ---------------------------------------------------------------------------
# Minimax results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MinimaxResult:
    degree_target: int
    degree_approx: int
    error: float
    coefficients: np.ndarray
    certified_gap: float
    grid_size: int
    basis: dict
    discretization_allowance: float = 0.0
    error_solve: float = float("nan")  # max residual on the solve grid

    def upper_estimate(self) -> float:
        """Sound upper value for the true minimax error (gap + grid bias)."""
        return (self.error + self.certified_gap) * (1.0 + self.discretization_allowance)

    def to_json_dict(self) -> dict:
        return {
            "l": self.degree_target,
            "m": self.degree_approx,
            "error": numerics.to_decimal_string(float(self.error)),
            "certified_gap": float(self.certified_gap),
            "grid_size": self.grid_size,
            "coefficients": [[float(np.real(c)), float(np.imag(c))] for c in self.coefficients],
            "basis": {k: (v if isinstance(v, (str, int)) else float(v) if np.isscalar(v) else list(map(float, v)))
                      for k, v in self.basis.items()},
        }


# ---------------------------------------------------------------------------
# phi_exact: Remez exchange for x^n on [-1, 1]
# ---------------------------------------------------------------------------


def _cheb_matrix(x: np.ndarray, degree: int) -> np.ndarray:
    """Columns T_0(x) .. T_degree(x)."""
    t = np.empty((len(x), degree + 1))
    t[:, 0] = 1.0
    if degree >= 1:
        t[:, 1] = x
    for k in range(2, degree + 1):
        t[:, k] = 2.0 * x * t[:, k - 1] - t[:, k - 2]
    return t


def phi_exact(n: int, m: int, max_iter: int = 200, rel_gap: float = 1e-3) -> MinimaxResult:
    """Minimax error of approximating x^n on [-1,1] by real degree-m polys.

    Remez single exchange with the m+2 Chebyshev extrema as the initial
    reference; converged when the de la Vallee Poussin gap drops below
    rel_gap * error, with equioscillation on >= m+2 alternating points.
    """
    if not (n >= m >= 0) or n < 1:
        raise ValueError(f"need n >= m >= 0 and n >= 1, got n={n}, m={m}")
    basis_info = {"type": "chebyshev", "center": 0.0, "half_width": 1.0}
    if m >= n:
        coeffs = power_expansion(n).coefficient_vector()
        return MinimaxResult(n, m, 0.0, coeffs, 0.0, 0, basis_info)

    kept, _ = cheb_truncation(n, m)
    kept_vec = np.zeros(m + 1)
    for deg, c in kept.terms:
        kept_vec[deg] += c
    tail_terms = [(deg, c) for deg, c in power_expansion(n).terms if deg > m]
    tail_degs = np.array([d for d, _ in tail_terms])
    tail_cofs = np.array([c for _, c in tail_terms])

    grid_size = max(2048, 16 * (n + 2))
    theta = np.linspace(0.0, math.pi, grid_size)
    x = np.cos(theta)[::-1].copy()  # ascending
    tmat = _cheb_matrix(x, n)
    f_vals = tmat[:, tail_degs] @ tail_cofs  # tail of x^n: what p must absorb

    # initial reference: extrema of the dominant (lowest-degree) tail term;
    # when that leaves m1+1 = m+3 points, drop an endpoint so the remaining
    # consecutive extrema still alternate
    m1 = int(tail_degs.min())
    refs = np.cos(np.arange(m1 + 1) * math.pi / m1)[::-1].copy()
    if len(refs) > m + 2:
        refs = refs[len(refs) - (m + 2):]

    def local_maxima(vals: np.ndarray) -> np.ndarray:
        interior = np.nonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:]))[0] + 1
        return np.concatenate([[0], interior, [len(vals) - 1]])

    best = None
    for _ in range(max_iter):
        tref = _cheb_matrix(refs, n)
        rows = np.column_stack([tref[:, : m + 1], (-1.0) ** np.arange(m + 2)])
        rhs = tref[:, tail_degs] @ tail_cofs
        sol, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
        b = sol[: m + 1]
        e_grid = f_vals - tmat[:, : m + 1] @ b
        abs_e = np.abs(e_grid)
        emax = float(abs_e.max())
        e_ref = rhs - tref[:, : m + 1] @ b
        signs = np.sign(e_ref)
        alternating = bool(np.all(signs[1:] * signs[:-1] < 0))
        lower = float(np.min(np.abs(e_ref))) if alternating else 0.0
        if best is None or emax < best[0]:
            best = (emax, b.copy(), lower)
        elif lower > best[2] and emax <= best[0] * (1 + 1e-12):
            best = (emax, b.copy(), lower)
        if alternating and emax - lower <= rel_gap * emax:
            best = (emax, b.copy(), lower)
            break
        # single-point exchange: the worst new extremum that actually moves
        # a reference point, inserted so sign alternation is preserved
        cands = local_maxima(abs_e)
        cands = cands[np.argsort(abs_e[cands])[::-1]]
        for idx in cands:
            x_star = x[idx]
            s_star = math.copysign(1.0, e_grid[idx]) if e_grid[idx] != 0 else 1.0
            new_refs = refs.copy()
            j = int(np.searchsorted(refs, x_star))
            if j == 0:
                if signs[0] == s_star:
                    new_refs[0] = x_star
                else:
                    new_refs = np.concatenate([[x_star], refs[:-1]])
            elif j == len(refs):
                if signs[-1] == s_star:
                    new_refs[-1] = x_star
                else:
                    new_refs = np.concatenate([refs[1:], [x_star]])
            else:
                if signs[j - 1] == s_star:
                    new_refs[j - 1] = x_star
                else:
                    new_refs[j] = x_star
            if np.any(new_refs != refs):
                refs = new_refs
                break
        else:
            raise NoConvergence(f"Remez exchange stalled for (n={n}, m={m})")
    else:
        raise NoConvergence(f"Remez exchange did not converge for (n={n}, m={m})")

    emax, b, lower = best
    coeffs = kept_vec + b
    return MinimaxResult(n, m, emax, coeffs, max(emax - lower, 0.0), grid_size,
                         basis_info, error_solve=emax)


# ---------------------------------------------------------------------------
# Region polynomial basis (scaled Chebyshev on the bounding ellipse, with the
# monomial limit for near-circular frames)
# ---------------------------------------------------------------------------


class _RegionBasis:
    """phi_0..phi_K on a region, numerically safe up to degree ~60.

    Chebyshev polynomials of the bounding-ellipse variable, normalized by
    their ellipse maxima via log-space ratios; multiply-by-z acts
    tridiagonally, which is how coefficients of z^l are produced without
    ever forming z^l (the cancellation-free residual form).
    """

    def __init__(self, region: Region, probe: np.ndarray):
        c, th, a, b = principal_ellipse(region)
        self.center = c
        self.rot = complex(math.cos(th), math.sin(th))
        f2 = a * a - b * b
        f = math.sqrt(f2) if f2 > 0 else 0.0
        if a == 0.0:  # single point
            self.kind = "monomial"
            self.scale = 1.0
            self.eta = 0.0
            self.f = 0.0
            return
        if f < 1e-6 * a:
            self.kind = "monomial"
            self.scale = float(np.max(np.abs(probe - c))) or 1.0
            self.eta = 0.0
            self.f = 0.0
        else:
            self.kind = "chebyshev"
            self.f = f
            self.eta = math.acosh(max(a / f, 1.0))
            self.scale = a

    def _log_norm(self, k: int) -> float:
        # log cosh(k eta), stable for large k eta
        ke = k * self.eta
        if ke < 30:
            return math.log(math.cosh(ke))
        return ke + math.log1p(math.exp(-2 * ke)) - math.log(2.0)

    def eval(self, points: np.ndarray, degree: int) -> np.ndarray:
        z = np.asarray(points, dtype=complex)
        out = np.empty((len(z), degree + 1), dtype=complex)
        if self.kind == "monomial":
            w = (z - self.center) / (self.rot * self.scale)
            out[:, 0] = 1.0
            for k in range(1, degree + 1):
                out[:, k] = out[:, k - 1] * w
            return out
        w = (z - self.center) / (self.rot * self.f)
        out[:, 0] = 1.0
        if degree >= 1:
            out[:, 1] = w / math.cosh(self.eta)
        for k in range(1, degree):
            r1 = math.exp(self._log_norm(k) - self._log_norm(k + 1))
            r2 = math.exp(self._log_norm(k - 1) - self._log_norm(k + 1))
            out[:, k + 1] = 2.0 * w * r1 * out[:, k] - r2 * out[:, k - 1]
        return out

    def mulz(self, degree: int):
        """(alpha, beta, gamma): z phi_k = alpha_k phi_{k+1} + beta_k phi_k
        + gamma_k phi_{k-1}, for k = 0..degree-1."""
        alpha = np.empty(degree, dtype=complex)
        beta = np.full(degree, complex(self.center), dtype=complex)
        gamma = np.zeros(degree, dtype=complex)
        if self.kind == "monomial":
            alpha[:] = self.rot * self.scale
            return alpha, beta, gamma
        fr = self.rot * self.f
        for k in range(degree):
            if k == 0:
                alpha[0] = fr * math.cosh(self.eta)
            else:
                alpha[k] = fr / 2.0 * math.exp(self._log_norm(k + 1) - self._log_norm(k))
                gamma[k] = fr / 2.0 * math.exp(self._log_norm(k - 1) - self._log_norm(k))
        return alpha, beta, gamma

    def power_coefficients(self, l: int) -> np.ndarray:
        """Coefficients d_0..d_l of z^l in this basis."""
        alpha, beta, gamma = self.mulz(l) if l else (None, None, None)
        d = np.zeros(l + 1, dtype=complex)
        d[0] = 1.0
        for _ in range(l):
            nd = np.zeros_like(d)
            for k in range(l):
                if d[k] == 0:
                    continue
                nd[k + 1] += alpha[k] * d[k]
                nd[k] += beta[k] * d[k]
                if k >= 1:
                    nd[k - 1] += gamma[k] * d[k]
            d = nd
        return d

    def describe(self) -> dict:
        return {
            "type": self.kind,
            "center": [self.center.real, self.center.imag],
            "rotation": [self.rot.real, self.rot.imag],
            "scale": self.scale,
            "focus": self.f,
        }


# ---------------------------------------------------------------------------
# err_region: complex minimax via Lawson IRLS
# ---------------------------------------------------------------------------


def _lawson(phi: np.ndarray, target: np.ndarray, max_iter: int, damping: float):
    """Iteratively reweighted least squares toward the minimax solution.

    Returns (coef, best_emax_on_grid, best_lower_bound, iterations).
    The lower bound sqrt(sum w |r|^2) with normalized weights is valid for
    the grid minimax and is nondecreasing in exact arithmetic; a stall in it
    triggers one weight restart.  Ties in the weight update are broken by
    lowest point index through numpy's stable elementwise order
    (deterministic).
    """
    npts = phi.shape[0]
    w = np.full(npts, 1.0 / npts)
    best_coef = None
    best_emax = math.inf
    best_lower = 0.0
    stall = 0
    restarted = False
    for it in range(max_iter):
        sw = np.sqrt(w)
        coef, *_ = np.linalg.lstsq(phi * sw[:, None], target * sw, rcond=None)
        r = target - phi @ coef
        absr = np.abs(r)
        emax = float(absr.max())
        lower = float(math.sqrt(float(np.sum(w * absr * absr))))
        improved = lower > best_lower * (1.0 + 1e-10)
        if lower > best_lower:
            best_lower = lower
        if emax < best_emax:
            best_emax = emax
            best_coef = coef
        if best_emax - best_lower <= 1e-6 * best_emax:
            break
        stall = 0 if improved else stall + 1
        if stall >= 60:
            if restarted:
                break
            # restart-on-stall: re-seed the weights from the residual profile
            w = absr * absr
            s = w.sum()
            w = np.full(npts, 1.0 / npts) if s == 0 else w / s
            restarted = True
            stall = 0
            continue
        upd = absr ** damping
        s = float(np.sum(w * upd))
        if s == 0:
            break
        w = w * upd / s
        w = np.maximum(w, 1e-300)
    if best_coef is None:  # pragma: no cover - max_iter >= 1
        best_coef = coef
        best_emax = emax
    return best_coef, best_emax, best_lower, it + 1


def err_region(
    l: int,
    region: Region,
    solve_points: int = 512,
    validation_points: int = 2048,
    max_iter: int = 500,
    damping: float = 0.5,
) -> MinimaxResult:
    """Err(l, X): minimax error of z^l against complex degree-(l-1) polys.

    Boundary-only sampling (maximum-modulus principle); point clouds use the
    full cloud.  The residual is solved in the form
    d_l phi_l + sum_{j<l} c_j phi_j, which never evaluates z^l - p(z) and so
    keeps full relative accuracy for errors far below machine epsilon.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    if region.is_discrete:
        cloud = region.points()
        val_grid = cloud
        solve_grid = cloud
    else:
        solve_grid = region.boundary_points(solve_points)
        # validation grid 4x denser, containing the solve grid
        val_grid = np.concatenate([region.boundary_points(validation_points), solve_grid])
    uniq = np.unique(np.round(val_grid, 15))
    basis = _RegionBasis(region, val_grid)
    info = basis.describe()

    if len(uniq) <= l:
        # interpolation regime: z^l is matched exactly on the grid
        phi = basis.eval(val_grid, max(l - 1, 0))
        vals = val_grid**l
        coef, *_ = np.linalg.lstsq(phi, vals, rcond=None)
        return MinimaxResult(l, l - 1, 0.0, coef, 0.0, len(val_grid), info)

    d = basis.power_coefficients(l)
    phi_solve = basis.eval(solve_grid, l)
    phi_val = basis.eval(val_grid, l)
    target_solve = d[l] * phi_solve[:, l]
    target_val = d[l] * phi_val[:, l]

    coef, emax_solve, lower, iters = _lawson(phi_solve[:, :l], target_solve, max_iter, damping)
    noise_floor = 64 * np.finfo(float).eps * float(np.max(np.abs(target_solve)))
    if emax_solve - lower > 0.5 * emax_solve and emax_solve > 100 * noise_floor:
        raise NoConvergence(
            f"Lawson stalled for l={l} on {region.label()}: "
            f"error {emax_solve:.3g}, lower bound {lower:.3g} after {iters} iterations"
        )
    r_val = target_val - phi_val[:, :l] @ coef
    error = float(np.max(np.abs(r_val)))
    # r = z^l - p = d_l phi_l - sum_j coef_j phi_j, so p = sum_{j<l} (d_j + coef_j) phi_j
    p_coef = d[:l] + coef
    allowance = 0.5 * ((l + 1) * math.pi / max(len(solve_grid), 1)) ** 2
    gap = max(error - lower, 0.0)
    return MinimaxResult(l, l - 1, error, p_coef, gap, len(val_grid), info, allowance,
                         error_solve=emax_solve)


@lru_cache(maxsize=128)
def cached_err_region(l: int, region: Region) -> MinimaxResult:
    """err_region with memoization; verification batches share regions."""
    return err_region(l, region)


def err_capacity_trend(region: Region, l_max: int,
                       solve_points: int = 512, validation_points: int = 2048):
    """[(l, Err(l, X)^(1/l)) for l = 1..l_max] for capacity-trend studies."""
    if l_max > 60:
        raise ValueError("l_max beyond 60 is outside the conditioning envelope")
    out = []
    for l in range(1, l_max + 1):
        res = err_region(l, region, solve_points, validation_points)
        out.append((l, float(res.error) ** (1.0 / l) if res.error > 0 else 0.0))
    return out


# ---------------------------------------------------------------------------
# Monic residual min ||p(D) z|| over monic degree-d polynomials
# ---------------------------------------------------------------------------


def monic_residual(diag_entries, z, degree: int, bits: int = NATIVE_BITS):
    """Least-squares distance of D^degree z from span{z, Dz, ..., D^(degree-1) z}."""
    if degree < 1:
        raise ValueError("degree must be >= 1")
    d = np.asarray(diag_entries, dtype=np.complex128).reshape(-1)
    z0 = np.asarray(z, dtype=np.complex128).reshape(-1)
    if d.shape != z0.shape:
        raise ValueError("diagonal and vector must have matching length")
    if bits == NATIVE_BITS:
        cols = [z0]
        for _ in range(degree):
            cols.append(d * cols[-1])
        basis = np.column_stack(cols[:-1])
        _, resid = numerics.least_squares(basis, cols[-1], bits=bits)
        return resid
    with mp.workprec(bits):
        dm = [mp.mpc(v) if v.imag else mp.mpf(v.real) for v in d]
        cur = [mp.mpc(v) if v.imag else mp.mpf(v.real) for v in z0]
        cols = [list(cur)]
        for _ in range(degree):
            cur = [dm[i] * cur[i] for i in range(len(dm))]
            cols.append(list(cur))
        basis = mp.matrix(len(dm), degree)
        for j in range(degree):
            for i in range(len(dm)):
                basis[i, j] = cols[j][i]
        target = mp.matrix(len(dm), 1)
        for i in range(len(dm)):
            target[i] = cols[degree][i]
        _, resid = numerics.least_squares(basis, target, bits=bits)
        return resid

"""Compact regions of the complex plane.

A Region is a catalog shape (interval, disk, ellipse, half disk, regular
n-gon, two symmetric intervals, polygon, polyline, point cloud) together with
a complex affine placement ``w = scale_rot * z + shift``.  Regions feed three
consumers: eigenvalue sampling for generated systems (uniform over area for
filled shapes, over arc length for curves), boundary discretizations for the
minimax solver, and Fekete-point optimization for capacity estimates.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import InfeasibleSpec

_FILLED = {"disk", "ellipse", "halfdisk", "square", "ngon", "triangle", "polygon"}
_CURVES = {"interval", "twointervals", "segments"}


@dataclass(frozen=True)
class Region:
    kind: str
    params: tuple
    scale_rot: complex = 1.0 + 0.0j
    shift: complex = 0.0 + 0.0j

    # -- constructors -------------------------------------------------------

    @staticmethod
    def interval(a: float, b: float) -> "Region":
        if not b > a:
            raise InfeasibleSpec(f"interval needs a < b, got [{a}, {b}]")
        return Region("interval", (float(a), float(b)))

    @staticmethod
    def two_intervals(a: float, b: float) -> "Region":
        if not (0 <= a < b):
            raise InfeasibleSpec(f"two_intervals needs 0 <= a < b, got a={a}, b={b}")
        return Region("twointervals", (float(a), float(b)))

    @staticmethod
    def ellipse(a: float, b: float) -> "Region":
        if a <= 0 or b <= 0:
            raise InfeasibleSpec("ellipse semi-axes must be positive")
        return Region("ellipse", (float(a), float(b)))

    @staticmethod
    def disk(center: complex, r: float) -> "Region":
        if r <= 0:
            raise InfeasibleSpec("disk radius must be positive")
        return Region("disk", (float(r),), shift=complex(center))

    @staticmethod
    def half_disk(r: float) -> "Region":
        if r <= 0:
            raise InfeasibleSpec("half disk radius must be positive")
        return Region("halfdisk", (float(r),))

    @staticmethod
    def square(side: float) -> "Region":
        if side <= 0:
            raise InfeasibleSpec("square side must be positive")
        return Region("square", (float(side),))

    @staticmethod
    def regular_ngon(n: int, side: float) -> "Region":
        if n < 3 or side <= 0:
            raise InfeasibleSpec("regular n-gon needs n >= 3 and positive side")
        return Region("ngon", (int(n), float(side)))

    @staticmethod
    def equilateral_triangle(side: float) -> "Region":
        if side <= 0:
            raise InfeasibleSpec("triangle side must be positive")
        return Region("triangle", (float(side),))

    @staticmethod
    def polygon(vertices: Sequence[complex]) -> "Region":
        vs = tuple(complex(v) for v in vertices)
        if len(vs) < 3:
            raise InfeasibleSpec("polygon needs at least 3 vertices")
        if _self_intersects(vs):
            raise InfeasibleSpec("polygon must be simple (non-self-intersecting)")
        return Region("polygon", vs)

    @staticmethod
    def segments(points: Sequence[complex]) -> "Region":
        ps = tuple(complex(p) for p in points)
        if len(ps) < 2:
            raise InfeasibleSpec("polyline needs at least 2 points")
        return Region("segments", ps)

    @staticmethod
    def point_cloud(points: Sequence[complex]) -> "Region":
        ps = tuple(complex(p) for p in points)
        if not ps:
            raise InfeasibleSpec("point cloud must be nonempty")
        return Region("points", ps)

    # -- placement ----------------------------------------------------------

    def transformed(self, scale: float = 1.0, rotate: float = 0.0,
                    translate: complex = 0.0) -> "Region":
        a = complex(scale) * cmath.exp(1j * rotate)
        return replace(self, scale_rot=a * self.scale_rot,
                       shift=a * self.shift + complex(translate))

    def to_world(self, z):
        return self.scale_rot * np.asarray(z) + self.shift

    @property
    def is_discrete(self) -> bool:
        return self.kind == "points"

    @property
    def is_curve(self) -> bool:
        return self.kind in _CURVES

    @property
    def is_filled(self) -> bool:
        return self.kind in _FILLED

    # -- geometry -----------------------------------------------------------

    def points(self) -> np.ndarray:
        """Point-cloud members in world coordinates."""
        if not self.is_discrete:
            raise InfeasibleSpec(f"{self.kind} region is not a point cloud")
        return self.to_world(np.array(self.params, dtype=complex))

    def boundary_length(self) -> float:
        return abs(self.scale_rot) * _table(_canon(self)).total

    def boundary_points(self, n: int) -> np.ndarray:
        """n points on the (world) boundary, uniform in arc length.

        Open curves (intervals, polylines) get endpoint-inclusive spacing per
        piece, since their approximation extrema sit at the endpoints; closed
        boundaries use midpoint spacing.  Point clouds return the cloud.
        """
        if self.is_discrete:
            return self.points()
        tab = _table(_canon(self))
        if self.is_curve:
            s = _open_curve_params(tab, n)
        else:
            s = (np.arange(n) + 0.5) / n * tab.total
        return self.to_world(tab.at(s))

    def point_at(self, s) -> np.ndarray:
        """World boundary point(s) at world arc-length parameter(s) s.

        Closed boundaries wrap the parameter; open curves clamp it.
        """
        tab = _table(_canon(self))
        sc = np.atleast_1d(np.asarray(s, dtype=float)) / abs(self.scale_rot)
        if self.is_curve:
            sc = np.clip(sc, 0.0, tab.total)
        else:
            sc = np.mod(sc, tab.total)
        out = self.to_world(tab.at(sc))
        return complex(out[0]) if np.isscalar(s) or np.ndim(s) == 0 else out

    def diameter(self) -> float:
        pts = self.points() if self.is_discrete else self.boundary_points(512)
        d = 0.0
        for i in range(len(pts)):
            d = max(d, float(np.max(np.abs(pts - pts[i]))))
        return d

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Uniform eigenvalue sampling: area for filled shapes, arc length
        for curves, uniform choice with replacement for clouds."""
        if self.is_discrete:
            pts = np.array(self.params, dtype=complex)
            return self.to_world(pts[rng.integers(0, len(pts), size=count)])
        if self.is_curve:
            tab = _table(_canon(self))
            return self.to_world(tab.at(rng.random(count) * tab.total))
        return self.to_world(_area_sample(_canon(self), rng, count))

    def real_interval_bounds(self):
        """(lo, hi) if this region is a real-axis interval, else None."""
        if self.kind != "interval":
            return None
        a, b = self.params
        lo = self.scale_rot * a + self.shift
        hi = self.scale_rot * b + self.shift
        tol = 1e-13 * max(abs(lo), abs(hi), 1.0)
        if abs(lo.imag) > tol or abs(hi.imag) > tol:
            return None
        lo, hi = lo.real, hi.real
        return (min(lo, hi), max(lo, hi))

    # -- serialization ------------------------------------------------------

    def label(self) -> str:
        ps = ",".join(f"{p:g}" if isinstance(p, (int, float)) else f"{p.real:g}{p.imag:+g}j"
                      for p in self.params)
        return f"{self.kind}({ps})"

    def to_json_dict(self) -> dict:
        params: list = []
        for p in self.params:
            if isinstance(p, complex):
                params.append([p.real, p.imag])
            else:
                params.append(p)
        d = {"kind": self.kind, "params": params}
        if self.scale_rot != 1.0 or self.shift != 0.0:
            d["transform"] = {
                "scale_rot": [self.scale_rot.real, self.scale_rot.imag],
                "shift": [self.shift.real, self.shift.imag],
            }
        return d

    @staticmethod
    def from_json_dict(d: dict) -> "Region":
        raw = d["params"]
        params = tuple(complex(p[0], p[1]) if isinstance(p, list) else p for p in raw)
        kind = d["kind"]
        if kind == "ngon":
            params = (int(params[0]), float(params[1]))
        region = Region(kind, params)
        tr = d.get("transform")
        if tr:
            sr = tr.get("scale_rot", [1.0, 0.0])
            sh = tr.get("shift", [0.0, 0.0])
            region = replace(region, scale_rot=complex(sr[0], sr[1]),
                             shift=complex(sh[0], sh[1]))
        return region


# ---------------------------------------------------------------------------
# CLI mini-grammar:  interval:a,b  disk:cx,cy,r  ngon:n,h  twointervals:a,b
#                    halfdisk:r  ellipse:a,b  square:l  triangle:l
#                    polygon:x1,y1;x2,y2;...  points:x1,y1;x2,y2;...
# ---------------------------------------------------------------------------


def parse_region(text: str) -> Region:
    text = text.strip()
    if text.startswith("{"):
        return Region.from_json_dict(json.loads(text))
    if ":" not in text:
        raise InfeasibleSpec(f"cannot parse region {text!r}")
    kind, _, body = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "interval":
            a, b = _floats(body, 2)
            return Region.interval(a, b)
        if kind == "twointervals":
            a, b = _floats(body, 2)
            return Region.two_intervals(a, b)
        if kind == "ellipse":
            a, b = _floats(body, 2)
            return Region.ellipse(a, b)
        if kind == "disk":
            cx, cy, r = _floats(body, 3)
            return Region.disk(complex(cx, cy), r)
        if kind == "halfdisk":
            (r,) = _floats(body, 1)
            return Region.half_disk(r)
        if kind == "square":
            (l,) = _floats(body, 1)
            return Region.square(l)
        if kind == "triangle":
            (l,) = _floats(body, 1)
            return Region.equilateral_triangle(l)
        if kind == "ngon":
            n, h = _floats(body, 2)
            return Region.regular_ngon(int(n), h)
        if kind == "polygon":
            return Region.polygon(_pairs(body))
        if kind == "points":
            return Region.point_cloud(_pairs(body))
    except (ValueError, TypeError) as exc:
        raise InfeasibleSpec(f"cannot parse region {text!r}: {exc}") from exc
    raise InfeasibleSpec(f"unknown region kind {kind!r}")


def _floats(body: str, n: int) -> list[float]:
    vals = [float(v) for v in body.split(",") if v.strip() != ""]
    if len(vals) != n:
        raise ValueError(f"expected {n} numbers, got {len(vals)}")
    return vals


def _pairs(body: str) -> list[complex]:
    out = []
    for chunk in body.split(";"):
        if not chunk.strip():
            continue
        x, y = _floats(chunk, 2)
        out.append(complex(x, y))
    return out


# ---------------------------------------------------------------------------
# Canonical geometry (local coordinates, placement stripped)
# ---------------------------------------------------------------------------


def _canon(region: Region) -> Region:
    return Region(region.kind, region.params)


def _ngon_vertices(n: int, side: float, phase: float = 0.0) -> tuple[complex, ...]:
    r = side / (2.0 * math.sin(math.pi / n))
    return tuple(r * cmath.exp(1j * (2 * math.pi * j / n + phase)) for j in range(n))


def _canonical_vertices(region: Region):
    """Closed-polygon vertices for polygonal kinds, else None."""
    kind, params = region.kind, region.params
    if kind == "polygon":
        return params
    if kind == "square":
        (side,) = params
        return _ngon_vertices(4, side, math.pi / 4)
    if kind == "triangle":
        (side,) = params
        return _ngon_vertices(3, side)
    if kind == "ngon":
        n, side = params
        return _ngon_vertices(n, side)
    return None


class _Seg:
    """Line segment with analytic arc-length parameterization."""

    def __init__(self, p, q):
        self.p = complex(p)
        self.v = complex(q) - self.p
        self.length = abs(self.v)

    def at_arc(self, u):
        return self.p + self.v * (u / self.length)


class _Arc:
    """Circular arc: center c, radius r, start angle th0, signed span."""

    def __init__(self, c, r, th0, span):
        self.c, self.r = complex(c), float(r)
        self.th0, self.span = float(th0), float(span)
        self.length = abs(span) * r

    def at_arc(self, u):
        th = self.th0 + math.copysign(1.0, self.span) * u / self.r
        return self.c + self.r * np.exp(1j * th)


class _Param:
    """Generic parametric piece with a dense arc-length inverse table."""

    def __init__(self, fn, dense: int = 2048):
        ts = np.linspace(0.0, 1.0, dense + 1)
        zs = fn(ts)
        self.ss = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(zs)))])
        self.fn, self.ts = fn, ts
        self.length = float(self.ss[-1])

    def at_arc(self, u):
        return self.fn(np.interp(u, self.ss, self.ts))


class _ArcTable:
    """Arc-length parameterization of a union of boundary pieces.

    Unions of line segments take a fully vectorized path (one searchsorted
    plus complex arithmetic); mixed unions dispatch per piece.
    """

    def __init__(self, parts):
        self.parts = parts
        self.lengths = np.array([p.length for p in parts])
        self.offsets = np.concatenate([[0.0], np.cumsum(self.lengths)])
        self.total = float(self.offsets[-1])
        if all(isinstance(p, _Seg) for p in parts):
            self._seg_p = np.array([p.p for p in parts], dtype=complex)
            self._seg_v = np.array([p.v for p in parts], dtype=complex)
        else:
            self._seg_p = None

    def at(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        s = np.clip(s, 0.0, np.nextafter(self.total, 0.0))
        idx = np.searchsorted(self.offsets, s, side="right") - 1
        idx = np.clip(idx, 0, len(self.parts) - 1)
        local = s - self.offsets[idx]
        if self._seg_p is not None:
            return self._seg_p[idx] + self._seg_v[idx] * (local / self.lengths[idx])
        out = np.empty(s.shape, dtype=complex)
        for k, part in enumerate(self.parts):
            m = idx == k
            if np.any(m):
                out[m] = part.at_arc(local[m])
        return out


def _open_curve_params(tab: "_ArcTable", n: int) -> np.ndarray:
    """Arc parameters distributing n points over pieces, endpoints included."""
    weights = tab.lengths / tab.total
    counts = np.maximum(2, np.round(weights * n).astype(int))
    while counts.sum() > n and np.any(counts > 2):
        counts[int(np.argmax(counts))] -= 1
    params = []
    for k, c in enumerate(counts):
        local = np.linspace(0.0, tab.lengths[k], c)
        params.append(tab.offsets[k] + local)
    return np.concatenate(params)


@lru_cache(maxsize=256)
def _table(region: Region) -> _ArcTable:
    kind, params = region.kind, region.params
    parts: list = []
    if kind == "interval":
        a, b = params
        parts.append(_Seg(a, b))
    elif kind == "twointervals":
        a, b = params
        parts.append(_Seg(-b, -a))
        parts.append(_Seg(a, b))
    elif kind == "segments":
        pts = params
        for p, q in zip(pts[:-1], pts[1:]):
            parts.append(_Seg(p, q))
    elif kind == "disk":
        (r,) = params
        parts.append(_Arc(0.0, r, 0.0, 2 * math.pi))
    elif kind == "ellipse":
        a, b = params
        parts.append(_Param(lambda t, a=a, b=b: a * np.cos(2 * math.pi * t)
                            + 1j * b * np.sin(2 * math.pi * t)))
    elif kind == "halfdisk":
        (r,) = params
        parts.append(_Seg(-r, r))
        parts.append(_Arc(0.0, r, 0.0, math.pi))
    else:
        verts = _canonical_vertices(region)
        if verts is None:
            raise InfeasibleSpec(f"no boundary for region kind {kind!r}")
        closed = list(verts) + [verts[0]]
        for p, q in zip(closed[:-1], closed[1:]):
            parts.append(_Seg(p, q))
    return _ArcTable(parts)


def _self_intersects(vs: tuple[complex, ...]) -> bool:
    n = len(vs)
    segs = [(vs[i], vs[(i + 1) % n]) for i in range(n)]

    def orient(a, b, c):
        v = (b - a).conjugate() * (c - a)
        return np.sign(v.imag)

    for i in range(n):
        for j in range(i + 1, n):
            if abs(i - j) in (0, 1) or (i == 0 and j == n - 1):
                continue
            a, b = segs[i]
            c, d = segs[j]
            if (orient(a, b, c) * orient(a, b, d) < 0
                    and orient(c, d, a) * orient(c, d, b) < 0):
                return True
    return False


def _area_sample(region: Region, rng: np.random.Generator, count: int) -> np.ndarray:
    kind, params = region.kind, region.params
    if kind == "disk":
        (r,) = params
        return r * np.sqrt(rng.random(count)) * np.exp(2j * math.pi * rng.random(count))
    if kind == "ellipse":
        a, b = params
        u = np.sqrt(rng.random(count))
        th = 2 * math.pi * rng.random(count)
        return a * u * np.cos(th) + 1j * b * u * np.sin(th)
    if kind == "halfdisk":
        (r,) = params
        return r * np.sqrt(rng.random(count)) * np.exp(1j * math.pi * rng.random(count))
    verts = _canonical_vertices(region)
    if verts is None:
        raise InfeasibleSpec(f"cannot area-sample region kind {kind!r}")
    from matplotlib.path import Path

    arr = np.array(verts, dtype=complex)
    path = Path(np.column_stack([arr.real, arr.imag]))
    lo_x, hi_x = arr.real.min(), arr.real.max()
    lo_y, hi_y = arr.imag.min(), arr.imag.max()
    out = np.empty(count, dtype=complex)
    filled = 0
    for _ in range(10000):
        need = count - filled
        if need <= 0:
            break
        xs = lo_x + (hi_x - lo_x) * rng.random(2 * need + 8)
        ys = lo_y + (hi_y - lo_y) * rng.random(2 * need + 8)
        ok = path.contains_points(np.column_stack([xs, ys]))
        hits = xs[ok] + 1j * ys[ok]
        take = min(len(hits), need)
        out[filled:filled + take] = hits[:take]
        filled += take
    if filled < count:
        raise InfeasibleSpec("polygon area sampling failed to converge")
    return out


def principal_ellipse(region: Region, samples: int = 512):
    """(center, axis angle, semi-extent a >= b) of the boundary point set.

    The bounding frame for the minimax solver's polynomial basis: PCA axes
    of the boundary discretization, half-width extents along them.
    """
    pts = region.boundary_points(samples)
    c = complex(np.mean(pts))
    d = pts - c
    xy = np.column_stack([d.real, d.imag])
    cov = xy.T @ xy
    w, v = np.linalg.eigh(cov)
    major = v[:, int(np.argmax(w))]
    theta = math.atan2(major[1], major[0])
    rot = d * cmath.exp(-1j * theta)
    a = float(np.max(np.abs(rot.real)))
    b = float(np.max(np.abs(rot.imag)))
    if b > a:
        a, b = b, a
        theta += math.pi / 2
    return c, theta, a, b

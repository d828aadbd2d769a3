import math

import numpy as np
import pytest

from gramian_bounds import Region
from gramian_bounds.approx import err_region
from gramian_bounds.capacity import (
    SQUARE_CONSTANT_QUOTED,
    TRIANGLE_CONSTANT_QUOTED,
    cap_closed_form,
    cap_estimate,
    fekete_points,
    ngon_capacity_factor,
)
from gramian_bounds.errors import InfeasibleSpec


# ---------------------------------------------------------------------------
# Closed-form catalog
# ---------------------------------------------------------------------------


def test_interval_quarter_length():
    assert cap_closed_form(Region.interval(-1, 1)) == 0.5
    assert cap_closed_form(Region.interval(0, 1)) == 0.25


def test_square_via_ngon():
    cap = cap_closed_form(Region.square(1.0))
    assert abs(cap - 0.59017) < 1e-4
    # the separately quoted square constant disagrees with the n-gon formula
    assert abs(SQUARE_CONSTANT_QUOTED - 0.33297) < 1e-4
    assert abs(TRIANGLE_CONSTANT_QUOTED - 0.18179) < 1e-4
    assert abs(ngon_capacity_factor(3) - 0.42175) < 1e-4


def test_two_intervals_degenerate_union():
    # a = 0 collapses to the full interval [-b, b]
    b = 0.8
    assert abs(cap_closed_form(Region.two_intervals(0, b))
               - cap_closed_form(Region.interval(-b, b))) < 1e-15


def test_catalog_values():
    assert cap_closed_form(Region.disk(2 + 1j, 0.7)) == 0.7
    assert cap_closed_form(Region.ellipse(2, 1)) == 1.5
    assert abs(cap_closed_form(Region.half_disk(1.0)) - 4 / 3**1.5) < 1e-15
    assert cap_closed_form(Region.polygon([0, 1, 1j])) is None
    assert cap_closed_form(Region.point_cloud([0, 1])) is None


def test_closed_form_transform_rules():
    base = cap_closed_form(Region.interval(-1, 1))
    moved = cap_closed_form(Region.interval(-1, 1).transformed(rotate=0.9, translate=5j))
    scaled = cap_closed_form(Region.interval(-1, 1).transformed(scale=3.0))
    assert moved == base
    assert abs(scaled - 3 * base) < 1e-12


def test_inclusion_monotonicity_catalog():
    a, b = -0.4, 1.0
    mid = (a + b) / 2
    assert cap_closed_form(Region.interval(a, b)) <= \
        cap_closed_form(Region.disk(mid, (b - a) / 2)) + 1e-15


def test_curve_and_diameter_inequalities():
    # connected rectifiable curve: cap <= length/4 (equality for a segment);
    # any compact set: cap <= diameter/2
    seg = Region.interval(-1, 1)
    assert cap_closed_form(seg) <= seg.boundary_length() / 4 + 1e-12
    poly_curve = Region.segments([0, 1, 1 + 1j])
    assert poly_curve.boundary_length() / 4 >= 0.25  # bound applies; no closed form
    for region in (Region.interval(-1, 1), Region.two_intervals(0.3, 1.0),
                   Region.disk(0, 1), Region.ellipse(2, 1), Region.square(1.0)):
        assert cap_closed_form(region) <= region.diameter() / 2 + 1e-9


# ---------------------------------------------------------------------------
# Fekete points
# ---------------------------------------------------------------------------


def test_fekete_interval_two_points():
    res = fekete_points(Region.interval(-1, 1), 2, restarts=2)
    assert abs(res.d_n - 2.0) < 1e-6
    assert np.max(np.abs(np.sort(res.points.real) - [-1, 1])) < 1e-6


def test_fekete_interval_three_points():
    res = fekete_points(Region.interval(-1, 1), 3, restarts=2)
    # independent 1-D oracle: middle point maximizes |(-1-s)(1-s)| * 2
    ss = np.linspace(-1, 1, 200001)
    best = np.max(np.abs((ss + 1) * (ss - 1)) * 2)
    assert abs(res.d_n - best ** (1 / 3)) < 5e-4
    assert abs(res.d_n - 2 ** (1 / 3)) < 5e-4


def test_fekete_disk_matches_equispaced_oracle():
    # optimal circle configuration is equispaced: product = n^(n/2) r^(n(n-1)/2)
    n, r = 12, 1.0
    res = fekete_points(Region.disk(0, r), n, restarts=4)
    z = r * np.exp(2j * math.pi * np.arange(n) / n)
    logp = sum(float(np.sum(np.log(np.abs(z[:i] - z[i])))) for i in range(1, n))
    oracle = math.exp(2 * logp / (n * (n - 1)))
    assert res.d_n <= oracle * (1 + 1e-9)  # oracle is optimal
    assert abs(res.d_n - oracle) < 2e-3 * oracle


def test_fekete_point_cloud():
    pts = [0, 1, 2 + 0j, 5]
    res = fekete_points(Region.point_cloud(pts), 2)
    assert abs(res.d_n - 5.0) < 1e-12
    with pytest.raises(InfeasibleSpec):
        fekete_points(Region.point_cloud([1.0, 1.0]), 2)


def test_cap_estimate_two_point_cloud():
    est = cap_estimate(Region.point_cloud([0, 3.0]), 8)
    assert abs(est.value - 3.0) < 1e-12  # d_2 = distance


def test_cap_estimate_disk():
    est = cap_estimate(Region.disk(0, 1), 40)
    assert 0.95 <= est.value <= 1.05
    ds = [d for _, d in est.d_sequence]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(ds, ds[1:]))  # nonincreasing
    assert est.energy == pytest.approx(math.log(ds[-1]))


def test_cap_estimate_interval_window():
    est = cap_estimate(Region.interval(0, 1), 40)
    assert 0.2375 <= est.value <= 0.2625


def test_cap_estimate_scaling_invariance():
    base = cap_estimate(Region.interval(-1, 1), 16, restarts=3)
    scaled = cap_estimate(Region.interval(-1, 1).transformed(scale=2.5), 16, restarts=3)
    moved = cap_estimate(Region.interval(-1, 1).transformed(rotate=1.0, translate=3), 16, restarts=3)
    assert abs(scaled.value - 2.5 * base.value) <= 0.01 * 2.5 * base.value
    assert abs(moved.value - base.value) <= 0.01 * base.value


def test_cap_estimate_json_schema():
    est = cap_estimate(Region.interval(-1, 1), 8, restarts=2)
    d = est.to_json_dict()
    assert {"value", "method", "n_points", "d_sequence", "fit_residual"} <= set(d)
    assert d["method"] == "fekete"


def test_cap_estimate_fit_residual_gate():
    # the 1/n model should fit the tail to well under a percent of the value
    est = cap_estimate(Region.disk(0, 1), 32, restarts=4)
    assert est.fit_residual <= 0.01 * est.value


def test_trend_last_term_matches_capacity():
    # cross-module: Err(40, X)^(1/40) within 10% of the closed form
    for region in (Region.interval(-1, 1), Region.disk(0, 1), Region.ellipse(2, 1),
                   Region.two_intervals(0.5, 1), Region.half_disk(1),
                   Region.regular_ngon(4, 1)):
        root = err_region(40, region).error ** (1 / 40)
        cap = cap_closed_form(region)
        assert abs(root - cap) <= 0.10 * cap, region.kind

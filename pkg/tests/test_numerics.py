import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gramian_bounds import numerics
from gramian_bounds.errors import NotHermitian, Singular


def test_eig_identity():
    w, u = numerics.eig_hermitian(np.eye(3))
    assert np.allclose(w, [1, 1, 1])


def test_eig_diagonal():
    w, _ = numerics.eig_hermitian(np.diag([0.5, 2.0]))
    assert np.allclose(w, [0.5, 2.0])


def test_eig_2x2_hand():
    # [[2,1],[1,2]]: characteristic poly (2-x)^2 - 1 -> roots 1, 3
    w, u = numerics.eig_hermitian(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(w, [1.0, 3.0])
    m = u @ np.diag(w) @ u.conj().T
    assert np.max(np.abs(m - [[2, 1], [1, 2]])) < 2.0 ** (12 - 53) * 3


def test_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        numerics.eig_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eig_mp_matches_native():
    rng = np.random.default_rng(3)
    g = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    m = (g + g.conj().T) / 2
    w53, _ = numerics.eig_hermitian(m)
    w212, _ = numerics.eig_hermitian(m, bits=212)
    scale = float(np.max(np.abs(w53)))
    # re-running at higher precision moves results less than the coarse bound
    for a, b in zip(w53, w212):
        assert abs(a - float(b)) <= 2.0 ** (12 - 53) * scale


def test_svd_diagonal_descending():
    s = numerics.svd(np.diag([3.0, 4.0]))
    assert np.allclose(s, [4.0, 3.0])


def test_svd_zero_matrix():
    s = numerics.svd(np.zeros((3, 2)))
    assert np.allclose(s, 0.0)


def test_svd_column_vector_norm():
    s = numerics.svd(np.array([[3.0], [4.0]]))
    assert np.allclose(s, [5.0])


def test_svd_reconstruction():
    rng = np.random.default_rng(5)
    m = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
    s, u, vh = numerics.svd(m, want_uv=True)
    rec = u @ np.diag(s) @ vh
    assert np.max(np.abs(rec - m)) <= 2.0 ** (12 - 53) * s[0]


def test_svd_mp_descending_and_close():
    m = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    s53 = numerics.svd(m)
    s106 = numerics.svd(m, bits=106)
    assert float(s106[0]) >= float(s106[1])
    assert abs(s53[0] - float(s106[0])) <= 2.0 ** (12 - 53) * s53[0]


def test_least_squares_orthogonal():
    basis = np.array([[1.0], [0.0]])
    _, resid = numerics.least_squares(basis, np.array([0.0, 1.0]))
    assert abs(resid - 1.0) < 1e-14


def test_least_squares_exact_fit():
    basis = np.array([[1.0], [0.0]])
    _, resid = numerics.least_squares(basis, np.array([1.0, 0.0]))
    assert resid < 1e-14


def test_least_squares_projection():
    # project (1,-1) off span{(1,1)}: residual sqrt(2)
    basis = np.array([[1.0], [1.0]])
    _, resid = numerics.least_squares(basis, np.array([1.0, -1.0]))
    assert abs(resid - np.sqrt(2)) < 1e-14


def test_least_squares_empty_basis():
    _, resid = numerics.least_squares(np.zeros((3, 0)), np.array([3.0, 0.0, 4.0]))
    assert abs(resid - 5.0) < 1e-14


def test_least_squares_rank_deficient_min_norm():
    basis = np.array([[1.0, 1.0], [1.0, 1.0]])
    coef, resid = numerics.least_squares(basis, np.array([2.0, 2.0]))
    assert resid < 1e-12
    assert np.allclose(coef, [1.0, 1.0])  # minimum-norm split


def test_least_squares_mp_matches():
    basis = np.array([[1.0, 0.2], [0.5, 1.0], [0.1, -0.3]])
    target = np.array([1.0, 2.0, 3.0])
    _, r53 = numerics.least_squares(basis, target)
    _, r106 = numerics.least_squares(basis, target, bits=106)
    assert abs(r53 - float(r106)) <= 2.0 ** (12 - 53) * np.linalg.norm(target) * 10


def test_cond2_unitary_is_one():
    th = 0.3
    q = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    assert abs(numerics.cond2(q) - 1.0) < 1e-12


def test_cond2_values():
    assert abs(numerics.cond2(np.diag([1.0, 10.0])) - 10.0) < 1e-12
    assert abs(numerics.cond2(np.diag([2.0, 0.5, 1.0])) - 4.0) < 1e-12


def test_cond2_singular_raises():
    with pytest.raises(Singular):
        numerics.cond2(np.array([[1.0, 1.0], [1.0, 1.0]]))


@settings(max_examples=20, deadline=None, derandomize=True)
@given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=2**31))
def test_trace_identity(n, seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    m = (g + g.conj().T) / 2
    w, _ = numerics.eig_hermitian(m)
    tr = float(np.real(np.trace(m)))
    scale = max(float(np.sum(np.abs(w))), 1e-300)
    assert abs(np.sum(w) - tr) <= 2.0 ** (12 - 53) * scale * 4


@settings(max_examples=15, deadline=None, derandomize=True)
@given(st.integers(min_value=2, max_value=20), st.integers(min_value=0, max_value=2**31))
def test_gram_eig_vs_svd(n, seed):
    rng = np.random.default_rng(seed)
    s = rng.standard_normal((n, n + 3)) + 1j * rng.standard_normal((n, n + 3))
    w, _ = numerics.eig_hermitian(s @ s.conj().T)
    sig = numerics.svd(s)
    lam = max(w[0], 0.0)
    smin2 = sig[-1] ** 2
    denom = max(lam, smin2)
    if denom > 2.0 ** (10 - 53) * sig[0] ** 2:
        assert abs(lam - smin2) <= 2.0 ** (10 - 53) * denom * (n + 4)


def test_escalation_ladder():
    assert numerics.next_bits(53) == 106
    assert numerics.next_bits(2048) == 4096
    assert numerics.next_bits(4096) == 4096
    with pytest.raises(ValueError):
        numerics.validate_bits(60)
    with pytest.raises(ValueError):
        numerics.validate_bits(8192)


def test_run_escalated_resolves():
    calls = []

    def compute(bits):
        calls.append(bits)
        return bits

    out = numerics.run_escalated(compute, lambda v, b: b >= 212, start_bits=53)
    assert out.bits_used == 212 and out.resolved
    assert calls == [53, 106, 212]


def test_run_escalated_unresolved_at_cap():
    out = numerics.run_escalated(lambda b: b, lambda v, b: False,
                                 start_bits=2048, max_bits=4096)
    assert out.bits_used == 4096 and not out.resolved


def test_smallest_resolved_margin():
    assert numerics.smallest_resolved(1.0, 1.0, 53)
    assert not numerics.smallest_resolved(1e-12, 1.0, 53)
    assert numerics.smallest_resolved(1e-12, 1.0, 212)


def test_tolerance_constants_pinned():
    t = numerics.TOL
    assert (t.hermitian_check, t.psd_floor, t.solver_residual, t.cond_singular,
            t.diagonalization_residual, t.steering_pinv, t.escalation_margin) == \
        (4, 8, 12, 12, 16, 16, 20)


def test_decimal_string_roundtrip_tiny():
    from mpmath import mp

    with mp.workprec(212):
        x = mp.mpf("1.03e-37")
        s = numerics.to_decimal_string(x, 212)
        assert abs(mp.mpf(s) - x) <= mp.mpf("1e-90")

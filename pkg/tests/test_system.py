import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gramian_bounds import (
    Defective,
    DimensionMismatch,
    InfeasibleSpec,
    LinearSystem,
    Region,
    SystemSpec,
    diagonalize,
    generate,
    simulate,
    t_min,
)


def shift_system(n):
    return LinearSystem(np.eye(n, k=-1, dtype=complex), np.eye(n, 1, dtype=complex))


def test_t_min_values():
    assert t_min(4, 1) == 3
    assert t_min(10000, 1) == 9999
    assert t_min(5, 2) == 2
    with pytest.raises(DimensionMismatch):
        t_min(2, 3)


def test_linear_system_validation():
    with pytest.raises(DimensionMismatch):
        LinearSystem(np.zeros((2, 3)), np.zeros((2, 1)))
    with pytest.raises(DimensionMismatch):
        LinearSystem(np.zeros((2, 2)), np.zeros((3, 1)))
    with pytest.raises(DimensionMismatch):
        LinearSystem(np.zeros((2, 2)), np.zeros((2, 3)))  # k > n


def test_diagonalize_diagonal():
    d = diagonalize(np.diag([1.0, 2.0, 3.0]))
    assert np.allclose(d.eigenvalues, [1, 2, 3])
    assert abs(d.cond_v - 1.0) < 1e-9
    assert not d.defect_flag


def test_diagonalize_hermitian_hand():
    # [[0,1],[1,0]]: eigenvalues -1, 1 with unitary eigenvectors
    d = diagonalize(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(np.sort(d.eigenvalues.real), [-1, 1])
    assert abs(d.cond_v - 1.0) < 1e-12


def test_diagonalize_jordan_block_defective():
    with pytest.raises(Defective):
        diagonalize(np.array([[0.0, 0.0], [1.0, 0.0]]))


def test_diagonalize_reassembly():
    spec = SystemSpec(n=8, k=1, eigenvalue_region=Region.disk(0, 0.9),
                      target_cond_v=10.0, seed=11)
    sys = generate(spec)
    d = diagonalize(sys.a)
    resid = np.linalg.norm(d.v @ sys.a @ np.linalg.inv(d.v) - d.d, 2)
    assert resid <= 2.0 ** (16 - 53) * np.linalg.norm(sys.a, 2) * d.cond_v


def test_generate_point_region_trivial():
    spec = SystemSpec(n=3, k=1, eigenvalue_region=Region.point_cloud([0.5]),
                      hermitian=True, seed=1)
    sys = generate(spec)
    ev = np.linalg.eigvalsh(sys.a)
    assert np.max(np.abs(ev - 0.5)) < 1e-10


def test_generate_cond_and_radius():
    spec = SystemSpec(n=8, k=1, eigenvalue_region=Region.disk(0, 0.9),
                      target_cond_v=10.0, seed=5)
    sys = generate(spec)
    d = diagonalize(sys.a)
    assert np.max(np.abs(d.eigenvalues)) <= 0.9 + 1e-9
    assert 5.0 <= d.cond_v <= 20.0  # within factor 2 of target


def test_generate_deterministic():
    spec = SystemSpec(n=6, k=2, eigenvalue_region=Region.interval(-0.5, 0.5), seed=9)
    a = generate(spec)
    b = generate(spec)
    assert a.a.tobytes() == b.a.tobytes()
    assert a.b.tobytes() == b.b.tobytes()


def test_generate_hermitian_structure():
    spec = SystemSpec(n=10, k=1, eigenvalue_region=Region.interval(-1, 1),
                      hermitian=True, stable_count=6, seed=13)
    sys = generate(spec)
    assert np.max(np.abs(sys.a - sys.a.conj().T)) <= 2.0 ** (4 - 53) * np.max(np.abs(sys.a))
    ev = np.sort(np.linalg.eigvalsh(sys.a))
    stable = ev[np.abs(ev) <= 1.0 + 1e-10]
    unstable = ev[np.abs(ev) > 1.0 + 1e-10]
    assert len(stable) == 6
    assert np.all((np.abs(unstable) > 1.0) & (np.abs(unstable) <= 2.0 + 1e-10))
    assert abs(sys.b_fro - 1.0) < 1e-12


def test_generate_infeasible_specs():
    with pytest.raises(InfeasibleSpec):
        generate(SystemSpec(n=4, k=1, eigenvalue_region=Region.disk(0, 0.5),
                            hermitian=True, seed=0))  # complex region in hermitian mode
    with pytest.raises(InfeasibleSpec):
        SystemSpec(n=4, k=1, eigenvalue_region=Region.interval(-1, 1),
                   hermitian=True, target_cond_v=3.0, seed=0)
    with pytest.raises(InfeasibleSpec):
        generate(SystemSpec(n=4, k=1, eigenvalue_region=Region.interval(-2, 1),
                            hermitian=True, seed=0))  # region beyond [-1,1]
    with pytest.raises(InfeasibleSpec):
        SystemSpec(n=4, k=1, eigenvalue_region=Region.interval(-1, 1),
                   stable_count=2, seed=0)  # stable_count without hermitian


def test_simulate_scalar():
    sys = LinearSystem(np.array([[0.0]]), np.array([[1.0]]))
    x = simulate(sys, [0.0], [[1.0]])
    assert np.allclose(x, [1.0])


def test_simulate_zero_inputs():
    spec = SystemSpec(n=4, k=2, eigenvalue_region=Region.disk(0, 0.5), seed=3)
    sys = generate(spec)
    x = simulate(sys, np.zeros(4), [np.zeros(2)] * 7)
    assert np.allclose(x, 0.0)


def test_simulate_shift_dynamics():
    sys = shift_system(3)
    x = simulate(sys, np.zeros(3), [[1.0], [0.0], [0.0]])
    assert np.allclose(x, [0, 0, 1])  # the impulse marches down to e3


def test_simulate_dimension_checks():
    sys = shift_system(3)
    with pytest.raises(DimensionMismatch):
        simulate(sys, np.zeros(2), [])
    with pytest.raises(DimensionMismatch):
        simulate(sys, np.zeros(3), [np.zeros(2)])


@settings(max_examples=15, deadline=None, derandomize=True)
@given(st.integers(min_value=0, max_value=2**31))
def test_simulate_superposition(seed):
    rng = np.random.default_rng(seed)
    spec = SystemSpec(n=4, k=2, eigenvalue_region=Region.disk(0, 0.8),
                      target_cond_v=3.0, seed=17)
    sys = generate(spec)
    x0, y0 = rng.standard_normal(4), rng.standard_normal(4)
    us = [rng.standard_normal(2) for _ in range(5)]
    vs = [rng.standard_normal(2) for _ in range(5)]
    a, b = 0.7, -1.3
    lhs = simulate(sys, a * x0 + b * y0, [a * u + b * v for u, v in zip(us, vs)])
    rhs = a * simulate(sys, x0, us) + b * simulate(sys, y0, vs)
    scale = max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), 1e-3)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale * 10


def test_json_roundtrip():
    spec = SystemSpec(n=3, k=2, eigenvalue_region=Region.disk(0, 0.5), seed=21)
    sys = generate(spec)
    d = sys.to_json_dict()
    assert set(d) == {"n", "k", "A", "B"}
    assert d["n"] == 3 and d["k"] == 2
    assert len(d["A"]) == 3 and len(d["A"][0]) == 3 and len(d["A"][0][0]) == 2
    back = LinearSystem.from_json_dict(json.loads(json.dumps(d)))
    assert np.array_equal(back.a, sys.a)
    assert np.array_equal(back.b, sys.b)

import numpy as np
import pytest

from airbeam.numerics import (
    ConvexQP,
    QpStatus,
    embed_complex,
    embedding_objective_matrix,
    extract_complex,
    least_norm_equality,
    solve_convex_qp,
)


def test_embed_identity_example():
    z = embed_complex([1 + 1j], [2 + 0j])
    assert np.array_equal(z, [1.0, 1.0, 2.0, 0.0])
    Q = embedding_objective_matrix(1, 1)
    assert z @ Q @ z == 2.0


def test_embed_zero():
    z = embed_complex(np.zeros(2, dtype=complex), np.zeros(3, dtype=complex))
    assert not z.any()
    assert embedding_objective_matrix(2, 3) @ z @ z == 0.0


def test_embed_round_trip_random():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n, k = rng.integers(1, 6, size=2)
        m = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x = rng.standard_normal(k) + 1j * rng.standard_normal(k)
        m2, x2 = extract_complex(embed_complex(m, x), n, k)
        assert np.array_equal(m, m2) and np.array_equal(x, x2)


def test_qp_least_norm_onto_hyperplane():
    sol = solve_convex_qp(ConvexQP(np.eye(3), A=[[1.0, 0, 0]], b=[1.0]))
    assert sol.status is QpStatus.OPTIMAL
    assert sol.z == pytest.approx([1.0, 0.0, 0.0])
    assert sol.objective == pytest.approx(1.0)


def test_qp_active_inequality():
    qp = ConvexQP(np.eye(2), A=[[1.0, 0]], b=[1.0], G=[[0.0, -1.0]], g=[-2.0])
    sol = solve_convex_qp(qp)
    assert sol.status is QpStatus.OPTIMAL
    assert sol.z == pytest.approx([1.0, 2.0], abs=1e-7)
    assert sol.objective == pytest.approx(5.0, rel=1e-8)


def test_qp_empty_polyhedron():
    qp = ConvexQP(np.eye(2), G=[[-1.0, 0], [1.0, 0]], g=[-1.0, 0.0])
    sol = solve_convex_qp(qp)
    assert sol.status is QpStatus.INFEASIBLE


def test_qp_no_constraints():
    sol = solve_convex_qp(ConvexQP(np.eye(4)))
    assert sol.status is QpStatus.OPTIMAL
    assert sol.objective == 0.0


def test_qp_weak_duality_on_random_instances():
    # reported optimum never exceeds any verified-feasible objective
    rng = np.random.default_rng(42)
    for _ in range(30):
        n = int(rng.integers(2, 7))
        q = int(rng.integers(1, 2 * n))
        center = rng.standard_normal(n)
        G = rng.standard_normal((q, n))
        g = G @ center + rng.uniform(0.1, 2.0, size=q)  # center strictly inside
        qp = ConvexQP(np.eye(n), G=G, g=g)
        sol = solve_convex_qp(qp)
        assert sol.status is QpStatus.OPTIMAL
        for _ in range(20):
            cand = center + rng.standard_normal(n) * rng.uniform(0, 2)
            if np.all(G @ cand <= g):
                assert sol.objective <= cand @ cand + 1e-7


def test_qp_deterministic_bitwise():
    rng = np.random.default_rng(3)
    G = rng.standard_normal((5, 4))
    g = rng.standard_normal(5) + 2.0
    a = solve_convex_qp(ConvexQP(np.eye(4), G=G, g=g))
    b = solve_convex_qp(ConvexQP(np.eye(4), G=G.copy(), g=g.copy()))
    assert np.array_equal(a.z, b.z)
    assert a.objective == b.objective


def test_qp_rejects_bad_shapes():
    with pytest.raises(ValueError):
        ConvexQP(np.eye(2), A=[[1.0, 0, 0]], b=[1.0])
    with pytest.raises(ValueError):
        ConvexQP(np.array([[0.0, 1.0], [0.0, 0.0]]))  # not symmetric


def test_least_norm_simple():
    assert least_norm_equality([[1.0, 0.0]], [1.0]) == pytest.approx([1.0, 0.0])
    b = np.array([0.3, -1.2, 4.0])
    assert least_norm_equality(np.eye(3), b) == pytest.approx(b)


def test_least_norm_beats_random_feasible_points():
    rng = np.random.default_rng(8)
    for _ in range(25):
        p, n = 3, 6
        A = rng.standard_normal((p, n))
        b = rng.standard_normal(p)
        z = least_norm_equality(A, b)
        assert np.allclose(A @ z, b, atol=1e-10)
        for _ in range(10):
            w = rng.standard_normal(n)
            z_other = z + w - A.T @ np.linalg.solve(A @ A.T, A @ w)
            assert np.allclose(A @ z_other, b, atol=1e-8)
            assert np.linalg.norm(z) <= np.linalg.norm(z_other) + 1e-12


def test_least_norm_rank_deficient_reports_rank():
    A = np.array([[1.0, 0.0], [2.0, 0.0]])
    with pytest.raises(ValueError, match="rank 1"):
        least_norm_equality(A, [1.0, 2.0])


def test_least_norm_scaling_covariance():
    rng = np.random.default_rng(12)
    A = rng.standard_normal((2, 5))
    b = rng.standard_normal(2)
    z = least_norm_equality(A, b)
    # powers of two scale exactly in floating point
    for c in (2.0, 0.5, 4.0):
        assert np.array_equal(least_norm_equality(A, c * b), c * z)
    assert least_norm_equality(A, 3.0 * b) == pytest.approx(3.0 * z, rel=1e-13)


def test_least_norm_complex_channel_form():
    rng = np.random.default_rng(4)
    H = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    # m^H h_k = x_k  <=>  H^H m = conj(x)
    m = least_norm_equality(H.conj().T, x.conj())
    assert np.allclose(m.conj() @ H, x, atol=1e-10)

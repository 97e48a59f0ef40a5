import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ringfold.errors import DomainError
from ringfold.flow import delta, tangent_field
from ringfold.quadratic_forms import (
    complementary_jacobian,
    embed_state,
    h_inverse,
    h_map,
    matrix_A,
    matrix_B,
    matrix_C,
    pencil,
    pinv_Bt,
)
from ringfold.ring_core import complementary_products, edge_differences, reduced_determinant

from conftest import GAMMA3, GAMMA5, THETA3, THETA5, random_state


def explicit_A3(theta):
    """The explicit n=3 matrix, transcribed entry by entry (no factor n)."""
    s1, s2, s3 = np.sin(edge_differences(theta))
    c1, c2, c3 = np.cos(edge_differences(theta))
    return np.array(
        [
            [-c2 * s3, c3 * s2, c2 * s3 - c3 * s2],
            [c3 * s1 - c1 * s3, -c3 * s1, c1 * s3],
            [c2 * s1, c1 * s2 - c2 * s1, -c1 * s2],
        ]
    )


def explicit_C3(theta):
    s1, s2, s3 = np.sin(edge_differences(theta))
    c1, c2, c3 = np.cos(edge_differences(theta))
    return np.array(
        [
            [3 * c3 * s2 + 3 * c2 * s3, -3 * c3 * s1, -3 * c2 * s1],
            [-3 * c3 * s2, 3 * c3 * s1 + 3 * c1 * s3, -3 * c1 * s2],
            [-3 * c2 * s3, -3 * c1 * s3, 3 * c2 * s1 + 3 * c1 * s2],
        ]
    )


def tan_C(theta):
    """Entrywise tan formula, valid where every cos(eta) != 0."""
    eta = edge_differences(theta)
    n = eta.size
    t = np.tan(eta)
    hc = complementary_products(np.cos(eta))
    C = -n * np.outer(t, hc)
    for i in range(n):
        C[i, i] = n * (t.sum() - t[i]) * hc[i]
    return C


def test_h_map_examples():
    np.testing.assert_allclose(h_map([1, 2, 4]), [8, 4, 2])
    np.testing.assert_allclose(h_inverse([1, 2, 4]), [2 * np.sqrt(2), np.sqrt(2), np.sqrt(2) / 2])
    np.testing.assert_allclose(h_inverse(np.ones(5)), np.ones(5))
    with pytest.raises(DomainError):
        h_map([1.0, 0.0, 2.0])
    with pytest.raises(DomainError):
        h_inverse([1.0, -1.0, 2.0])


@given(st.lists(st.floats(1e-3, 1e3), min_size=2, max_size=10))
@settings(max_examples=1000)
def test_h_round_trip(y):
    y = np.array(y)
    np.testing.assert_allclose(h_map(h_inverse(y)), y, rtol=1e-12)
    np.testing.assert_allclose(h_inverse(h_map(y)), y, rtol=1e-12)


def test_complementary_jacobian_fd(rng):
    for n in range(2, 8):
        c = rng.uniform(-1, 1, n)
        H = complementary_jacobian(c)
        fd = np.column_stack(
            [(complementary_products(c + 1e-6 * e) - complementary_products(c - 1e-6 * e)) / 2e-6 for e in np.eye(n)]
        )
        np.testing.assert_allclose(H, fd, atol=1e-8)


def test_matrix_B_explicit():
    np.testing.assert_array_equal(matrix_B(3), [[-1, 0, 1], [1, -1, 0], [0, 1, -1]])


def test_n3_explicit_forms(rng):
    for _ in range(100):
        th = rng.uniform(-np.pi, np.pi, 3)
        # the explicit n = 3 form of A omits the overall factor n
        np.testing.assert_allclose(matrix_A(th), 3 * explicit_A3(th), atol=1e-13)
        np.testing.assert_allclose(matrix_C(th), explicit_C3(th), atol=1e-13)


def test_A_is_scaled_gradient(rng):
    for _ in range(50):
        th, _ = random_state(rng)
        n = th.size
        f = lambda t: complementary_products(np.cos(edge_differences(t)))
        fd = np.column_stack([(f(th + 1e-6 * e) - f(th - 1e-6 * e)) / 2e-6 for e in np.eye(n)])
        np.testing.assert_allclose(matrix_A(th), n * fd, atol=1e-7)


def test_A_factorization(rng):
    for _ in range(100):
        th, _ = random_state(rng)
        n = th.size
        eta = edge_differences(th)
        H = complementary_jacobian(np.cos(eta))
        # d cos(eta)/d theta = -D_sin B^T fixes the sign
        np.testing.assert_allclose(matrix_A(th), -n * H @ np.diag(np.sin(eta)) @ matrix_B(n).T, atol=1e-13)


def test_C_tan_formula(rng):
    for _ in range(100):
        th, _ = random_state(rng)
        np.testing.assert_allclose(matrix_C(th), tan_C(th), atol=1e-9, rtol=1e-9)


def test_zero_state():
    for n in (3, 6):
        assert np.all(matrix_A(np.zeros(n)) == 0)
        assert np.all(matrix_C(np.zeros(n)) == 0)
        pen = pencil(np.zeros(n))
        assert np.all(pen.T == 0)
        np.testing.assert_allclose(pen.S, n**2 * np.ones((n, n)))


def test_pinv_Bt(rng):
    for n in range(3, 9):
        M = pinv_Bt(n)
        Bt = matrix_B(n).T
        np.testing.assert_allclose(Bt @ M @ Bt, Bt, atol=1e-12)
        np.testing.assert_allclose(M @ Bt @ M, M, atol=1e-12)
        np.testing.assert_allclose(np.ones(n) @ M, 0, atol=1e-12)


def test_quadratic_identities(rng):
    for _ in range(1000):
        th, ga = random_state(rng)
        pen = pencil(th)
        x = h_map(ga)
        det = reduced_determinant(th, ga)
        d = delta(th, ga)
        scale_S = (np.abs(x) @ np.abs(pen.S) @ np.abs(x))
        scale_T = (np.abs(x) @ np.abs(pen.T) @ np.abs(x))
        assert x @ pen.S @ x == pytest.approx(det**2, rel=1e-9, abs=1e-12 * scale_S)
        assert x @ pen.T @ x == pytest.approx(d, rel=1e-9, abs=1e-12 * scale_T)
        assert x @ pen.T_sym @ x == pytest.approx(d, rel=1e-9, abs=1e-12 * scale_T)
        tau = rng.uniform(0, 10)
        assert x @ pen.at(tau) @ x == pytest.approx(tau * det**2 + d, rel=1e-9, abs=1e-11 * (tau * scale_S + scale_T))


def test_btv_identity(rng):
    for _ in range(1000):
        th, ga = random_state(rng)
        n = th.size
        lhs = matrix_B(n).T @ tangent_field(th, ga)
        rhs = matrix_C(th) @ h_map(ga)
        scale = np.max(np.abs(matrix_C(th))) * np.max(h_map(ga))
        np.testing.assert_allclose(lhs, rhs, rtol=1e-8, atol=1e-10 * scale)


def test_delta_fixtures():
    x3 = h_map(GAMMA3)
    assert x3 @ pencil(THETA3).T_sym @ x3 == pytest.approx(-0.37347, abs=1e-3)
    x5 = h_map(GAMMA5)
    assert x5 @ pencil(THETA5).T_sym @ x5 == pytest.approx(-0.70959, abs=1e-3)


def test_embed_state():
    np.testing.assert_array_equal(embed_state(THETA3, 3), THETA3)
    with pytest.raises(DomainError):
        embed_state(THETA3, 2)
    big = pencil(embed_state(THETA3, 6))
    np.testing.assert_allclose(big.S[:3, :3], 4 * pencil(THETA3).S, atol=1e-9)
    big5 = pencil(embed_state(THETA5, 7))
    np.testing.assert_allclose(big5.T_sym[:5, :5], (7 / 5) ** 2 * pencil(THETA5).T_sym, atol=1e-9)


def test_block_scaling_all_sizes(rng):
    for n in range(3, 10):
        th = rng.uniform(-np.pi, np.pi, n)
        pen = pencil(th)
        for nt in range(n + 1, 11):
            big = pencil(embed_state(th, nt))
            k = (nt / n) ** 2
            np.testing.assert_allclose(big.S[:n, :n], k * pen.S, rtol=1e-9, atol=1e-12)
            np.testing.assert_allclose(big.T[:n, :n], k * pen.T, rtol=1e-9, atol=1e-11)

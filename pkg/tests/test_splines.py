import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from shapespline import (
    ConditioningError,
    DesignPoints,
    DomainError,
    KnotSequence,
    MeshError,
    basis_matrix,
    build_design_system,
    eval_basis,
    eval_basis_derivative,
    l1_norm,
)
from shapespline.splines import greville, inner_products, l1_norms

# knots with gaps .18 .23 .19 .19 .21
KNOTS5 = KnotSequence([0.0, 0.18, 0.41, 0.60, 0.79, 1.0])


@st.composite
def knot_sequences(draw, max_k=30):
    K = draw(st.integers(1, max_k))
    gaps = np.array(draw(st.lists(st.floats(1.0, 2.0), min_size=K, max_size=K)))
    kappa = np.concatenate(([0.0], np.cumsum(gaps / gaps.sum())))
    kappa[-1] = 1.0
    return KnotSequence(kappa)


# --- knots and design points -------------------------------------------------


def test_uniform_knots_and_extension():
    kn = KnotSequence.uniform(4)
    assert kn.K == 4
    np.testing.assert_array_equal(kn.interior, [0, 0.25, 0.5, 0.75, 1])
    np.testing.assert_array_equal(kn.kappa(np.array([-3, -1, 0, 2, 4, 5, 9])), [0, 0, 0, 0.5, 1, 1, 1])


def test_knot_validation():
    with pytest.raises(ValueError):
        KnotSequence([0.0, 0.6, 0.5, 1.0])
    with pytest.raises(ValueError):
        KnotSequence([0.1, 0.5, 1.0])
    with pytest.raises(MeshError):
        KnotSequence([0.0, 0.05, 1.0], c_kappa_1=0.5, c_kappa_2=1.5)


def test_tight_mesh_constants():
    kn = KnotSequence([0.0, 0.25, 1.0])
    assert kn.c_kappa_1 == pytest.approx(0.5)
    assert kn.c_kappa_2 == pytest.approx(1.5)


def test_design_weights_keep_literal_zero_at_the_end():
    d = DesignPoints.uniform(4)
    np.testing.assert_allclose(d.weights, [0.25, 0.25, 0.25, 0.25, 0.0])
    assert d.weights.sum() == pytest.approx(1.0)


def test_design_mesh_violation():
    with pytest.raises(MeshError):
        DesignPoints([0.0, 0.9, 1.0], c_omega=1.2)


# --- basis evaluation ---------------------------------------------------------


def test_order_one_is_interval_indicator():
    np.testing.assert_array_equal(eval_basis(1, KnotSequence.uniform(4), 0.3), [0, 1, 0, 0])


def test_order_one_last_interval_is_closed():
    np.testing.assert_array_equal(eval_basis(1, KnotSequence.uniform(4), 1.0), [0, 0, 0, 1])


@pytest.mark.parametrize("p", [1, 2, 3, 4, 5])
def test_left_endpoint_is_first_basis(p):
    v = eval_basis(p, KNOTS5, 0.0)
    assert v[0] == 1.0 and not v[1:].any()


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_right_endpoint_is_last_basis(p):
    v = eval_basis(p, KNOTS5, 1.0)
    assert v[-1] == 1.0 and not v[:-1].any()


def test_order_three_matches_exact_rational_recursion():
    # textbook recursion on the explicit clamped vector, evaluated in exact rationals
    expected = [0, 16 / 943, 24133 / 39606, 361 / 966, 0, 0, 0]
    np.testing.assert_allclose(eval_basis(3, KNOTS5, 0.37), expected, atol=1e-15)


def test_domain_and_order_errors():
    with pytest.raises(DomainError):
        eval_basis(2, KNOTS5, 1.5)
    with pytest.raises(DomainError):
        basis_matrix(2, KNOTS5, [-0.1, 0.5])
    with pytest.raises(ValueError):
        eval_basis(0, KNOTS5, 0.5)
    with pytest.raises(ValueError):
        eval_basis_derivative(1, KNOTS5, 0.5)


@settings(max_examples=200, deadline=None)
@given(knot_sequences(), st.integers(1, 5), st.floats(0.0, 1.0))
def test_partition_of_unity_and_range(knots, p, x):
    v = eval_basis(p, knots, x)
    assert v.shape == (knots.K + p - 1,)
    assert abs(v.sum() - 1.0) <= 1e-12
    assert v.min() >= 0.0 and v.max() <= 1.0 + 1e-15


@settings(max_examples=100, deadline=None)
@given(knot_sequences(max_k=12), st.integers(1, 5), st.floats(0.0, 1.0, exclude_max=True))
def test_support(knots, p, x):
    v = eval_basis(p, knots, x)
    k = np.arange(1, knots.K + p)
    outside = (x < knots.kappa(k - p)) | (x >= knots.kappa(k))
    assert not v[outside].any()


# --- derivatives --------------------------------------------------------------


def test_hat_slopes():
    np.testing.assert_allclose(eval_basis_derivative(2, KnotSequence.uniform(4), 0.3), [0, -4, 4, 0, 0])


def test_derivative_matches_finite_difference():
    kn = KnotSequence([0.0, 0.14, 0.3, 0.47, 0.66, 0.83, 1.0])
    h = 1e-6
    fd = (eval_basis(4, kn, 0.61 + h) - eval_basis(4, kn, 0.61 - h)) / (2 * h)
    np.testing.assert_allclose(eval_basis_derivative(4, kn, 0.61), fd, atol=1e-5)


@settings(max_examples=100, deadline=None)
@given(knot_sequences(max_k=10), st.integers(2, 5), st.floats(0.01, 0.99))
def test_derivative_sums_to_zero_and_matches_fd(knots, p, x):
    if np.min(np.abs(knots.interior - x)) < 1e-4:
        return
    d = eval_basis_derivative(p, knots, x)
    assert abs(d.sum()) <= 1e-8 * (1 + np.abs(d).max())
    h = 1e-7
    fd = (eval_basis(p, knots, x + h) - eval_basis(p, knots, x - h)) / (2 * h)
    np.testing.assert_allclose(d, fd, atol=1e-5 * (1 + np.abs(d).max()))


# --- L1 norms -----------------------------------------------------------------


def test_l1_norm_uniform_hat():
    assert l1_norm(2, KnotSequence.uniform(4), 3) == pytest.approx(0.25)


def test_l1_norm_boundary_uses_extension():
    assert l1_norm(2, KNOTS5, 1) == pytest.approx(0.18 / 2)


def test_l1_norm_index_range():
    with pytest.raises(ValueError):
        l1_norm(2, KNOTS5, 0)
    with pytest.raises(ValueError):
        l1_norm(2, KNOTS5, 7)


@pytest.mark.parametrize("k", range(1, 8))
def test_l1_norm_matches_quadrature(k):
    f = lambda x: eval_basis(3, KNOTS5, x)[k - 1]
    value, _ = quad(f, 0.0, 1.0, points=list(KNOTS5.interior[1:-1]), epsabs=1e-13, epsrel=1e-13)
    assert l1_norm(3, KNOTS5, k) == pytest.approx(value, abs=1e-10)


def test_inner_products_row_sums_are_l1_norms():
    G = inner_products(3, KNOTS5)
    np.testing.assert_allclose(G.sum(axis=1), l1_norms(3, KNOTS5), atol=1e-14)
    np.testing.assert_allclose(G, G.T)


# --- design system ------------------------------------------------------------


def test_zero_samples_give_zero_ybar():
    s = build_design_system(2, KnotSequence.uniform(3), DesignPoints.uniform(8), np.zeros(9))
    assert not s.ybar.any()


def test_lambda_matches_exact_naive_summation():
    # K * sum_i w_i B_j(x_i) B_k(x_i) summed in exact rationals
    expected = np.array(
        [
            [279, 81, 0, 0],
            [81, 333, 90, 0],
            [0, 90, 333, 81],
            [0, 0, 81, 87],
        ]
    ) / 512
    s = build_design_system(2, KnotSequence.uniform(3), DesignPoints.uniform(8), np.zeros(9))
    np.testing.assert_allclose(s.Lambda, expected, atol=1e-15)
    np.testing.assert_allclose(s.Lambda.sum(axis=1), [45 / 64, 63 / 64, 63 / 64, 21 / 64], atol=1e-15)


def test_lambda_against_triple_loop():
    kn, d = KNOTS5, DesignPoints(np.sort(np.r_[0.0, np.linspace(0.013, 0.987, 40), 1.0]))
    m = 3
    s = build_design_system(m, kn, d, np.arange(d.n + 1.0))
    B = [[eval_basis(m, kn, x)[j] for j in range(kn.K + m - 1)] for x in d.points]
    T = kn.K + m - 1
    naive = np.zeros((T, T))
    for j in range(T):
        for k in range(T):
            naive[j, k] = kn.K * sum(d.weights[i] * B[i][j] * B[i][k] for i in range(d.n + 1))
    np.testing.assert_allclose(s.Lambda, naive, atol=1e-14)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_lambda_structure(m):
    kn, d = KNOTS5, DesignPoints.uniform(60)
    s = build_design_system(m, kn, d, np.zeros(61))
    np.testing.assert_array_equal(s.Lambda, s.Lambda.T)
    i, j = np.indices(s.Lambda.shape)
    assert not s.Lambda[np.abs(i - j) >= m].any()
    np.linalg.cholesky(s.Lambda)
    np.testing.assert_allclose(s.Xhat.sum(axis=1), 1.0, atol=1e-14)


def test_design_system_errors():
    with pytest.raises(ValueError):
        build_design_system(2, KNOTS5, DesignPoints.uniform(8), np.zeros(8))
    # two design points inside an eight-interval knot grid leave most bases unseen
    with pytest.raises(ConditioningError):
        build_design_system(2, KnotSequence.uniform(8), DesignPoints.uniform(2), np.zeros(3))


def test_greville_abscissae_reproduce_linear_functions():
    kn = KNOTS5
    for m in (2, 3, 4):
        x = np.linspace(0, 1, 17)
        np.testing.assert_allclose(basis_matrix(m, kn, x) @ greville(m, kn), x, atol=1e-14)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from levimax.expr import DomainError
from levimax.fields import (
    ExpressionField,
    FunctionField,
    HermitianMetric,
    Tier,
    derivative,
    hermitian_form,
    hermitian_form_matrix,
    hermitian_hessian_jst,
)
from levimax.coords import to_complex, to_real

from oracles import central_gradient, central_hessian

FIELDS = [
    "x1^2 + x2^2",
    "x1*x2^3 - cos(x1)",
    "exp(x1/2)*sin(x2) + x1^4",
    "x1*x3 + x2*x4^2 + log(2 + x3^2)",
    "sqrt(1 + x1^2 + x4^2) * x2",
]


def test_derivative_examples():
    f = ExpressionField("x1^2", 1)
    assert derivative(f, np.array([3.0, -1.0]), (0, 0)) == 2.0
    g = ExpressionField("x1*x2", 1)
    assert derivative(g, np.zeros(2), (0, 1)) == 1.0


def test_numeric_tier_matches_exact_for_exp():
    f = ExpressionField("exp(x1)", 1)
    numeric = FunctionField(lambda x: np.exp(x[..., 0]), 1)
    assert f.tier is Tier.EXACT and numeric.tier is Tier.NUMERIC
    p = np.array([1.0, 0.0])
    assert derivative(f, p, (0,)) == pytest.approx(math.e, abs=1e-15)
    assert abs(derivative(numeric, p, (0,)) - math.e) <= 1e-8


def test_derivative_order_limit():
    with pytest.raises(ValueError):
        derivative(ExpressionField("x1", 1), np.zeros(2), (0, 0, 0))


def test_domain_error_propagates():
    f = ExpressionField("log(x1)", 1)
    with pytest.raises(DomainError):
        f(np.array([-1.0, 0.0]))


@pytest.mark.parametrize("text", FIELDS)
def test_exact_derivatives_against_oracle(text, rng):
    f = ExpressionField(text, 2)
    for p in rng.uniform(-1, 1, size=(5, 4)):
        g_ref = central_gradient(f, p)
        H_ref = central_hessian(f, p)
        np.testing.assert_allclose(f.gradient(p), g_ref, rtol=1e-6, atol=1e-6)
        np.testing.assert_allclose(f.hessian(p), H_ref, rtol=1e-6, atol=1e-5)


@pytest.mark.parametrize("text", FIELDS)
def test_numeric_tier_matches_exact(text, rng):
    f = ExpressionField(text, 2)
    g = FunctionField(f, 2)
    pts = rng.uniform(-1, 1, size=(6, 4))
    scale = np.maximum(1.0, np.abs(f.hessian(pts)))
    assert np.all(np.abs(g.hessian(pts) - f.hessian(pts)) <= 1e-6 * scale)
    scale = np.maximum(1.0, np.abs(f.gradient(pts)))
    assert np.all(np.abs(g.gradient(pts) - f.gradient(pts)) <= 1e-6 * scale)


def test_hermitian_hessian_examples():
    L = hermitian_hessian_jst(ExpressionField("x1^2 + x2^2", 1), np.zeros(2))
    np.testing.assert_allclose(L, [[1.0]], atol=1e-15)
    L = hermitian_hessian_jst(ExpressionField("x1", 1), np.array([0.3, 0.4]))
    np.testing.assert_allclose(L, 0, atol=1e-15)
    L = hermitian_hessian_jst(ExpressionField("x1^2 + x2^2 + x3^2 + x4^2", 2), np.zeros(4))
    np.testing.assert_allclose(L, np.eye(2), atol=1e-15)


def test_hermitian_hessian_of_product():
    # u = |z1 z2|^2 + Re(z1 conj(z2)), so d^2u/dz1 dzbar2 = conj(z1) z2 + 1/2
    u = ExpressionField("(x1^2 + x2^2)*(x3^2 + x4^2) + x1*x3 + x2*x4", 2)
    p = np.array([0.3, -0.2, 0.5, 0.1])
    z = to_complex(p)
    L = hermitian_hessian_jst(u, p)
    expected = np.array(
        [[abs(z[1]) ** 2, z[0].conj() * z[1] + 0.5], [z[0] * z[1].conj() + 0.5, abs(z[0]) ** 2]]
    )
    np.testing.assert_allclose(L, expected, atol=1e-14)


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
def test_hermitian_hessian_is_hermitian(point):
    u = ExpressionField("x1^3*x4 + sin(x2*x3) + x1*x2*x3", 2)
    L = hermitian_hessian_jst(u, np.array(point))
    np.testing.assert_array_equal(L, L.conj().T)


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.lists(st.floats(-1, 1), min_size=4, max_size=4))
def test_real_linear_fields_have_zero_hermitian_hessian(coef, point):
    text = " + ".join(f"({c!r})*x{i + 1}" for i, c in enumerate(coef))
    L = hermitian_hessian_jst(ExpressionField(text, 2), np.array(point))
    assert np.all(L == 0)


def test_hermitian_form_matrix_matches_form(rng):
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    L = A @ A.conj().T
    for _ in range(5):
        V = rng.normal(size=3) + 1j * rng.normal(size=3)
        x = to_real(V)
        assert x @ hermitian_form_matrix(L) @ x == pytest.approx(hermitian_form(L, V))


class TestHermitianMetric:
    def test_positive_and_homogeneous(self, rng):
        B = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        h = HermitianMetric(B @ B.conj().T + np.eye(2))
        for _ in range(10):
            V = rng.normal(size=2) + 1j * rng.normal(size=2)
            lam = complex(*rng.normal(size=2))
            value = h(np.zeros(4), V)
            assert value > 0 and isinstance(value, float)
            assert h(np.zeros(4), lam * V) == pytest.approx(abs(lam) ** 2 * value)

    def test_real_form_consistent(self, rng):
        h = HermitianMetric(np.array([[2.0, 0.5j], [-0.5j, 1.0]]))
        V = np.array([0.3 + 0.1j, -0.2 + 0.7j])
        x = to_real(V)
        assert x @ h.real_form(np.zeros(4)) @ x == pytest.approx(h(np.zeros(4), V))

    def test_rejects_bad_matrices(self):
        with pytest.raises(ValueError):
            HermitianMetric(np.array([[1.0, 1.0], [0.0, 1.0]]))
        with pytest.raises(ValueError):
            HermitianMetric(np.array([[1.0, 0.0], [0.0, -1.0]]))

    def test_field_valued(self):
        h = HermitianMetric(lambda p: (1 + p[..., :1, None] ** 2) * np.eye(1), n=1)
        assert h(np.array([1.0, 0.0]), np.array([1.0])) == pytest.approx(2.0)

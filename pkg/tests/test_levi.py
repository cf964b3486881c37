import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from levimax.almost_complex import AlmostComplexStructure, ExpressionMatrixField, scale_structure
from levimax.charts import AffineChange, ExpressionChange, IdentityChange
from levimax.coords import box_grid, real_matrix, to_real
from levimax.fields import ExpressionField, HermitianMetric, hermitian_form_matrix, hermitian_hessian_jst
from levimax.levi import (
    LEVI_FACTOR,
    HolomorphyError,
    hessian_invariance_check,
    is_strictly_psh,
    levi_matrix,
    levi_value,
    levi_value_extension,
    min_levi_eigen,
    one_form,
)

from oracles import levi_nested_fd, sphere_min_ratio
from structures import random_small_structure, vanishing_structure

STD1 = AlmostComplexStructure.standard(1)
STD2 = AlmostComplexStructure.standard(2)
NORM2 = ExpressionField("x1^2 + x2^2 + x3^2 + x4^2", 2)
VANISHING_U = ExpressionField("x1 + x1^2 + x2^2", 1)


def test_laplacian_identity():
    u = ExpressionField("x1^2 + x2^2", 1)
    assert levi_value(STD1, u, np.zeros(2), [1.0, 0.0]) == pytest.approx(4.0, abs=1e-12)
    w = ExpressionField("x1^3 + exp(x2)*x1 + x2^4", 1)
    p = np.array([0.3, -0.4])
    lap = 6 * p[0] + np.exp(p[1]) * p[0] + 12 * p[1] ** 2
    assert levi_value(STD1, w, p, [1.0, 0.0]) == pytest.approx(lap, rel=1e-10)


def test_pluriharmonic_zero(rng):
    u = ExpressionField("x1", 2)
    for p, V in zip(rng.normal(size=(5, 4)), rng.normal(size=(5, 4))):
        assert abs(levi_value(STD2, u, p, V)) <= 1e-12


def test_vanishing_structure(rng):
    S = vanishing_structure()
    for p in rng.uniform(-0.2, 0.2, size=(10, 2)):
        V = rng.normal(size=2)
        assert abs(levi_value(S, VANISHING_U, p, V)) <= 1e-5


def test_against_nested_difference_oracle(rng):
    S = random_small_structure(rng, 2, 0.1)
    u = ExpressionField("x1^2 + 2*x2^2 + x3*x4 + sin(x1)*x3 + x4^3", 2)
    for _ in range(4):
        p = rng.uniform(-0.3, 0.3, size=4)
        V = rng.normal(size=4)
        ref = levi_nested_fd(lambda x: S.J(x), u, p, V)
        assert levi_value(S, u, p, V) == pytest.approx(ref, rel=1e-6, abs=1e-7)


def test_one_form_definition(rng):
    S = random_small_structure(rng, 2)
    u = ExpressionField("x1*x2 + x3^2 - x4", 2)
    beta = one_form(S, u)
    p = rng.normal(size=4) * 0.3
    X = rng.normal(size=4)
    assert beta(p) @ X == pytest.approx(u.gradient(p) @ (S.J(p) @ X), abs=1e-8)


@given(st.floats(-3, 3).filter(lambda t: abs(t) > 1e-3), st.integers(0, 1000))
def test_homogeneity(t, seed):
    rng = np.random.default_rng(seed)
    S = random_small_structure(rng, 1, 0.1)
    u = ExpressionField("x1^2 + x1*x2^2 + cos(x2)", 1)
    p = rng.uniform(-0.3, 0.3, size=2)
    V = rng.normal(size=2)
    base = levi_value(S, u, p, V)
    assert levi_value(S, u, p, t * V) == pytest.approx(t * t * base, rel=1e-8, abs=1e-12)


def test_extension_independence(rng):
    S = random_small_structure(rng, 2, 0.1)
    u = ExpressionField("x1^2 + x2^2 + x3^2 + x4^2 + x1*x3 + x2^3", 2)
    p = rng.uniform(-0.2, 0.2, size=4)
    V = rng.normal(size=4)
    M = rng.normal(size=(4, 4))
    const = levi_value_extension(S, u, p, lambda x: np.broadcast_to(V, np.shape(x)))
    linear = levi_value_extension(S, u, p, lambda x: V + (np.asarray(x) - p) @ M.T)
    assert const == pytest.approx(linear, abs=1e-6)
    assert const == pytest.approx(levi_value(S, u, p, V), abs=1e-6)


@pytest.mark.parametrize(
    "text",
    ["x1^2 + x2^2 + x3^2 + x4^2", "x1*x4 + x2*x3^2 + x1^2", "exp(x1)*cos(x4) + x2*x3", "(x1^2 + x2^2)*(x3^2 + x4^2)"],
)
def test_standard_structure_matches_hermitian_form(text, rng):
    u = ExpressionField(text, 2)
    for p in rng.uniform(-0.5, 0.5, size=(3, 4)):
        S = levi_matrix(STD2, u, p).matrix
        ref = LEVI_FACTOR * hermitian_form_matrix(hermitian_hessian_jst(u, p))
        assert np.max(np.abs(S - ref)) <= 1e-6 * max(1.0, np.max(np.abs(ref)))


class TestLeviMatrix:
    def test_standard_paraboloid(self):
        S = levi_matrix(STD1, ExpressionField("x1^2 + x2^2", 1), np.zeros(2)).matrix
        np.testing.assert_allclose(S, 4 * np.eye(2), atol=1e-12)

    def test_polarization(self, rng):
        S = random_small_structure(rng, 2, 0.1)
        u = ExpressionField("x1^2*x3 + x2*x4 + x3^2 + sin(x4)", 2)
        p = rng.uniform(-0.3, 0.3, size=4)
        form = levi_matrix(S, u, p)
        np.testing.assert_array_equal(form.matrix, form.matrix.T)
        for V in rng.normal(size=(50, 4)):
            assert form(V) == pytest.approx(levi_value(S, u, p, V), rel=1e-7, abs=1e-9)

    def test_linear_zero(self):
        S = levi_matrix(STD2, ExpressionField("x1 - 2*x3 + x4", 2), np.ones(4) * 0.1).matrix
        np.testing.assert_allclose(S, 0, atol=1e-12)


class TestMinEigen:
    def test_standard_norm(self):
        assert min_levi_eigen(STD2, NORM2, np.zeros(4)) == pytest.approx(1.0, abs=1e-12)

    def test_against_sphere_sampling(self, rng):
        S = random_small_structure(rng, 2, 0.1)
        u = ExpressionField("x1^2 + 2*x2^2 + x3^2 + 3*x4^2 + x1*x3", 2)
        B = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        h = HermitianMetric(B @ B.conj().T + np.eye(2))
        p = rng.uniform(-0.2, 0.2, size=4)
        lam = min_levi_eigen(S, u, p, h)
        brute = sphere_min_ratio(levi_matrix(S, u, p).matrix, LEVI_FACTOR * h.real_form(p))
        assert lam <= brute + 1e-12
        assert lam == pytest.approx(brute, rel=1e-2)

    def test_pluriharmonic_zero(self):
        assert abs(min_levi_eigen(STD1, ExpressionField("x1", 1), np.zeros(2))) <= 1e-12

    def test_vanishing_zero(self):
        assert abs(min_levi_eigen(vanishing_structure(), VANISHING_U, np.array([0.1, 0.05]))) <= 1e-5

    def test_bad_metric(self):
        bad = HermitianMetric(lambda p: -np.eye(1) * np.ones(np.shape(p)[:-1] + (1, 1)), n=1)
        with pytest.raises(ValueError):
            min_levi_eigen(STD1, ExpressionField("x1^2", 1), np.zeros(2), bad)


class TestPsh:
    grid = box_grid(1, 7, -0.5, 0.5)

    def test_negative_fails_everywhere(self):
        rep = is_strictly_psh(STD1, ExpressionField("-x1^2 - x2^2", 1), self.grid)
        assert not rep.passed
        assert not any(r["pass"] for r in rep.records)

    def test_linear_fails_strict(self):
        rep = is_strictly_psh(STD1, ExpressionField("x1", 1), self.grid, margin=0.0)
        assert not rep.passed

    def test_scaled_structure_passes(self):
        S = AlmostComplexStructure.from_a(ExpressionMatrixField([[("0.9*(x1^2 - x2^2)", "1.8*x1*x2")]], 1, True))
        u = ExpressionField("x1^2 + x2^2", 1)
        assert is_strictly_psh(scale_structure(S, 0.05), u, self.grid, margin=0.5).passed
        assert not is_strictly_psh(S, u, box_grid(1, 9, -0.6, 0.6), margin=0.5).passed

    def test_report_fields(self):
        rep = is_strictly_psh(STD1, ExpressionField("x1^2 + x2^2", 1), self.grid, margin=0.5)
        assert rep.passed and rep.min_eigen == pytest.approx(1.0)
        assert set(rep.records[0]) == {"point", "min_eigen", "pass"}


class TestInvariance:
    def test_identity(self, rng):
        u = ExpressionField("x1^2 + x1*x2", 1)
        S = vanishing_structure()
        lhs, rhs = hessian_invariance_check(IdentityChange(1), S, S, u, [0.1, 0.0], [1.0, 0.5])
        assert lhs == rhs

    def test_complex_linear(self, rng):
        M = np.array([[1 + 1j, 0.5], [0.2j, 2 - 1j]])
        F = AffineChange(real_matrix(M, np.zeros((2, 2))))
        p = np.array([0.1, -0.2, 0.3, 0.0])
        V = rng.normal(size=4)
        lhs, rhs = hessian_invariance_check(F, STD2, STD2, NORM2, p, V)
        expected = LEVI_FACTOR * np.sum(np.abs(M @ (V[0::2] + 1j * V[1::2])) ** 2)
        assert lhs == pytest.approx(expected, rel=1e-8)
        assert rhs == pytest.approx(expected, rel=1e-8)

    def test_straightening_map(self):
        F = ExpressionChange(["x1 + x1^2 + x2^2", "x2"], 1)
        lhs, rhs = hessian_invariance_check(F, vanishing_structure(), STD1, ExpressionField("x1", 1), [0.05, 0.1], [1.0, -0.3])
        assert abs(lhs) <= 1e-5 and abs(rhs) <= 1e-5

    def test_nonholomorphic_rejected(self):
        F = ExpressionChange(["x1 + x1^2", "x2"], 1)
        with pytest.raises(HolomorphyError):
            hessian_invariance_check(F, STD1, STD1, ExpressionField("x1^2", 1), [0.1, 0.1], [1.0, 0.0])


def test_complex_to_tangent_round_trip():
    from levimax.levi import complex_to_tangent, tangent_to_complex

    V = np.array([1 + 2j, -0.5j])
    np.testing.assert_array_equal(tangent_to_complex(complex_to_tangent(V)), V)
    np.testing.assert_array_equal(complex_to_tangent(V), to_real(V))

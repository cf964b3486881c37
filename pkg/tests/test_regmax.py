import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from levimax.fields import ExpressionField
from levimax.regmax import (
    K_MAX,
    ThetaVector,
    bump,
    default_mollifier,
    mollifier_constant,
    regmax_eval,
    regmax_eval_tensor,
    regmax_field,
    regmax_grad,
)

from oracles import FIRST_MOMENT, MOLLIFIER_C, RAW_BUMP_INTEGRAL, central_gradient, regmax_2d

mol = default_mollifier()


class TestMollifier:
    def test_constant_matches_reference(self):
        C = mollifier_constant()
        assert abs(C - MOLLIFIER_C) <= 1e-12 * MOLLIFIER_C
        assert abs(C * RAW_BUMP_INTEGRAL - 1) <= 1e-12

    def test_boundary_and_midpoint(self):
        assert mol(0.0) == 0.0 and mol(1.0) == 0.0
        assert mol(0.5) == pytest.approx(mol.constant * np.exp(-4.0), rel=1e-15)

    def test_support_and_sign(self):
        s = np.linspace(-1, 2, 3001)
        w = mol(s)
        assert np.all(w >= 0)
        assert np.all(w[(s <= 0) | (s >= 1)] == 0)

    def test_cdf_against_direct_quadrature(self):
        y = np.linspace(0, 1, 97)
        direct = np.array([mol._cdf_direct(v) for v in y])
        np.testing.assert_allclose(mol.cdf(y), direct, atol=1e-14)
        assert mol.cdf(-0.1) == 0.0 and mol.cdf(1.5) == 1.0
        assert mol.cdf(1.0) == pytest.approx(1.0, abs=1e-12)

    def test_first_moment(self):
        assert mol.first_moment == pytest.approx(FIRST_MOMENT, abs=1e-13)

    def test_bump_unnormalized(self):
        assert bump(0.5) == np.exp(-4.0)


class TestThetaVector:
    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            ThetaVector((1.0, 0.0))
        with pytest.raises(ValueError):
            ThetaVector(())

    def test_k(self):
        assert ThetaVector((0.1, 0.2, 0.3)).k == 3


class TestEval:
    @pytest.mark.parametrize("t,theta", [(1.3, 0.7), (-4.0, 2.0), (0.0, 1e-3)])
    def test_k1_is_shift_by_first_moment(self, t, theta):
        assert regmax_eval([t], [theta]) == pytest.approx(t + theta * FIRST_MOMENT, abs=1e-13)

    def test_separated_arguments(self):
        assert regmax_eval([0.0, 5.0], [1.0, 1.0]) == pytest.approx(5 + FIRST_MOMENT, abs=1e-13)
        np.testing.assert_allclose(regmax_grad([0.0, 5.0], [1.0, 1.0]), [0.0, 1.0], atol=1e-9)

    @pytest.mark.parametrize(
        "t,theta", [((0.0, 0.0), (1.0, 1.0)), ((0.3, 0.1), (0.5, 0.7)), ((0.2, -0.4), (0.3, 2.0)), ((1, 1.05), (0.1, 0.1))]
    )
    def test_two_dimensional_oracle(self, t, theta):
        assert regmax_eval(t, theta) == pytest.approx(regmax_2d(t, theta), abs=1e-10)

    def test_tensor_rule_cross_check(self):
        t = np.array([0.1, 0.3, 0.2])
        theta = np.array([0.5, 0.4, 0.6])
        # the tensor rule only converges algebraically across the kink (about 1e-6 at 64 nodes)
        assert regmax_eval_tensor(t, theta, nodes=64) == pytest.approx(regmax_eval(t, theta), abs=1e-5)

    def test_tensor_rule_converges_to_oracle(self):
        t, theta = (0.1, 0.3), (0.5, 0.4)
        ref = regmax_2d(t, theta)
        errs = [abs(regmax_eval_tensor(t, theta, nodes=n) - ref) for n in (32, 128)]
        assert errs[1] < errs[0] / 4
        assert abs(regmax_eval(t, theta) - ref) <= 1e-12

    def test_k_cap(self):
        with pytest.raises(ValueError, match="exceeds"):
            regmax_eval(np.zeros(K_MAX + 1), np.ones(K_MAX + 1))
        assert np.isfinite(regmax_eval(np.zeros(6), np.ones(6), k_max=6))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            regmax_eval([0.0, 1.0], [1.0])

    def test_batched(self, rng):
        t = rng.normal(size=(5, 3))
        theta = rng.uniform(0.1, 1, size=(5, 3))
        single = [regmax_eval(a, b) for a, b in zip(t, theta)]
        np.testing.assert_allclose(regmax_eval(t, theta), single, rtol=0, atol=1e-15)


def cases(k_min=1, k_max=4):
    return st.integers(k_min, k_max).flatmap(
        lambda k: st.tuples(
            st.lists(st.floats(-3, 3), min_size=k, max_size=k),
            st.lists(st.floats(0.01, 2), min_size=k, max_size=k),
        )
    )


@given(cases())
def test_bounds(case):
    t, theta = map(np.array, case)
    m = regmax_eval(t, theta)
    assert t.max() - 1e-9 <= m <= (t + theta).max() + 1e-9


@given(cases(), st.floats(-5, 5))
def test_translation_equivariance(case, a):
    t, theta = map(np.array, case)
    assert abs(regmax_eval(t + a, theta) - regmax_eval(t, theta) - a) <= 1e-9


@given(cases(2, 4), st.randoms(use_true_random=False))
def test_permutation_symmetry(case, r):
    t, theta = map(np.array, case)
    perm = list(range(len(t)))
    r.shuffle(perm)
    assert abs(regmax_eval(t[perm], theta[perm]) - regmax_eval(t, theta)) <= 1e-10


@given(cases(), st.lists(st.floats(0, 1), min_size=4, max_size=4))
def test_monotone(case, bumps):
    t, theta = map(np.array, case)
    t2 = t + np.array(bumps[: len(t)])
    assert regmax_eval(t, theta) <= regmax_eval(t2, theta) + 1e-10


@given(cases(), st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_midpoint_convexity(case, other):
    t, theta = map(np.array, case)
    s = np.array(other[: len(t)])
    assert regmax_eval(0.5 * (t + s), theta) <= 0.5 * (regmax_eval(t, theta) + regmax_eval(s, theta)) + 1e-9


@given(cases())
def test_gradient_against_finite_differences(case):
    t, theta = map(np.array, case)
    g = regmax_grad(t, theta)
    # truncation error scales like (h / theta)^2, so the step follows theta
    ref = central_gradient(lambda x: regmax_eval(x, theta), t, 1e-4 * theta.min())
    assert np.max(np.abs(g - ref)) <= 1e-6
    assert abs(g.sum() - 1) <= 1e-8
    assert np.all(g >= -1e-10)


def test_gradient_k1():
    np.testing.assert_allclose(regmax_grad([0.7], [0.2]), [1.0], atol=1e-12)


def test_second_differences_continuous_across_diagonal():
    theta = np.array([0.3, 0.3])
    h = 1e-3
    s = np.arange(-0.05, 0.05 + h / 2, h)
    vals = np.array([regmax_eval([v, 0.0], theta) for v in s])
    second = vals[2:] - 2 * vals[1:-1] + vals[:-2]
    assert np.max(np.abs(np.diff(second))) <= 1e-4
    # normalized second derivative varies smoothly: its jumps near t1 = t2 are no larger than elsewhere
    d2 = np.abs(np.diff(second / h**2))
    centre = len(d2) // 2
    assert d2[centre - 3:centre + 3].max() <= 2 * d2.max(initial=0, where=np.abs(np.arange(len(d2)) - centre) > 20)


class TestField:
    def test_identical_fields_shift_by_constant(self, rng):
        f = ExpressionField("x1^2 - x2 + sin(x1)", 1)
        u = regmax_field([f, f], (0.2, 0.2))
        pts = rng.uniform(-1, 1, size=(50, 2))
        diff = u(pts) - f(pts)
        expected = 0.2 * regmax_2d((0.0, 0.0), (1.0, 1.0))
        np.testing.assert_allclose(diff, expected, atol=1e-10)

    def test_separated_fields_within_eps(self, rng):
        zero = ExpressionField("0", 1)
        low = ExpressionField("-10", 1)
        u = regmax_field([zero, low], (0.05, 0.05))
        vals = u(rng.uniform(-1, 1, size=(20, 2)))
        assert np.all((vals >= 0) & (vals <= 0.05))

    def test_k1_reduction(self, rng):
        f = ExpressionField("x1*x2", 1)
        u = regmax_field([f], (0.3,))
        pts = rng.uniform(-1, 1, size=(10, 2))
        np.testing.assert_allclose(u(pts), f(pts) + 0.3 * FIRST_MOMENT, atol=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            regmax_field([ExpressionField("x1", 1), ExpressionField("x3", 2)], (0.1, 0.1))

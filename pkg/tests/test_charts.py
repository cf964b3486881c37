import numpy as np
import pytest

from levimax.charts import (
    AffineChange,
    ChartError,
    ComposedChange,
    ExpressionChange,
    IdentityChange,
    InverseChange,
    QuadraticChange,
    change_from_json,
)
from levimax.coords import to_complex


def test_quadratic_change_formula(rng):
    c = rng.normal(size=(2, 2, 2)) + 1j * rng.normal(size=(2, 2, 2))
    chart = QuadraticChange(0.1 * c)
    x = rng.normal(size=4)
    z = to_complex(x)
    expected = z + 0.1 * np.einsum("jkl,k,l->j", c, z, z.conj())
    np.testing.assert_allclose(to_complex(chart(x)), expected, atol=1e-15)


def test_quadratic_identity_linear_part():
    chart = QuadraticChange(np.ones((2, 2, 2)))
    np.testing.assert_allclose(chart.jacobian(np.zeros(4)), np.eye(4))


def test_jacobians_match_fd(rng):
    from levimax import fd

    charts = [
        QuadraticChange(0.2 * (rng.normal(size=(2, 2, 2)) + 1j * rng.normal(size=(2, 2, 2)))),
        ExpressionChange(["x1 + x2^2", "x2 + sin(x1)*x3", "x3 - x4*x1", "x4 + x1^2"], 2),
        AffineChange(np.eye(4) + 0.3 * rng.normal(size=(4, 4)), rng.normal(size=4)),
    ]
    for chart in charts:
        x = rng.uniform(-0.5, 0.5, size=(3, 4))
        np.testing.assert_allclose(chart.jacobian(x), np.swapaxes(fd.jacobian(chart, x, value_ndim=1), -1, -2), atol=1e-8)


def test_newton_inverse(rng):
    chart = ExpressionChange(["x1 + x1^2 + x2^2", "x2"], 1)
    x = rng.uniform(-0.3, 0.3, size=(20, 2))
    np.testing.assert_allclose(chart.inverse(chart(x)), x, atol=1e-12)


def test_explicit_inverse_used():
    inv = ExpressionChange(["x1 - 1", "x2"], 1)
    chart = ExpressionChange(["x1 + 1", "x2"], 1, inverse=inv)
    x = np.array([0.3, 0.2])
    np.testing.assert_allclose(chart(chart.inverse(x)), x, atol=1e-8)


def test_composition_and_inverse(rng):
    a = AffineChange(np.eye(2) * 2, [0.1, 0.0])
    q = QuadraticChange(np.array([[[0.3 + 0.1j]]]))
    comp = q.compose(a)
    assert isinstance(comp, ComposedChange)
    x = rng.uniform(-0.2, 0.2, size=(5, 2))
    np.testing.assert_allclose(comp(x), q(a(x)))
    np.testing.assert_allclose(comp.inverse(comp(x)), x, atol=1e-12)
    inv = InverseChange(comp)
    np.testing.assert_allclose(inv(comp(x)), x, atol=1e-12)
    np.testing.assert_allclose(inv.jacobian(comp(x)) @ comp.jacobian(x), np.broadcast_to(np.eye(2), (5, 2, 2)), atol=1e-10)


def test_singular_affine_rejected():
    with pytest.raises(ChartError):
        AffineChange(np.zeros((2, 2)))


def test_json_round_trip(rng):
    charts = [
        IdentityChange(1),
        AffineChange(np.eye(2) + 0.1, [0.2, -0.1]),
        QuadraticChange(np.array([[[0.1 + 0.2j]]])),
        ExpressionChange(["x1 + x2^2", "x2"], 1),
    ]
    charts.append(ComposedChange(charts[2], charts[1]))
    charts.append(InverseChange(charts[3]))
    x = rng.uniform(-0.2, 0.2, size=(4, 2))
    for chart in charts:
        back = change_from_json(chart.to_json())
        np.testing.assert_allclose(back(x), chart(x), atol=1e-15)


def test_unknown_json_type():
    with pytest.raises(ChartError):
        change_from_json({"type": "spline"})

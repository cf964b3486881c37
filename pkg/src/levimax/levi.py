"""Complex Hessian (Levi form) for an arbitrary chart-local structure.

For a real ``C^2`` function ``u`` let ``beta = J^* du``, ``beta_i = sum_k u_k J_ki``.
The Levi form at ``p`` on a tangent vector ``V`` is

    H_J(u)(p, V) = -(d beta)_p(V, J(p) V),   (d beta)_ij = d_i beta_j - d_j beta_i.

Normalization: for ``J = J_st`` on C this gives ``H(p, d/dxi) = Laplacian(u)(p)``,
which is four times ``d^2 u / dz dzbar``.  Every comparison with the hermitian
form ``sum u_{z_k zbar_j} V_k conj(V_j)`` (and with hermitian metrics) uses the
factor :data:`LEVI_FACTOR`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fd
from .almost_complex import AlmostComplexStructure, _structure
from .coords import to_complex, to_real
from .fields import HermitianMetric, ScalarField, pullback

LEVI_FACTOR = 4.0


def one_form(S, u: ScalarField):
    """Coefficients of ``J^* du`` as a function of points ``(..., 2n) -> (..., 2n)``."""
    S = _structure(S)

    def beta(x):
        return np.einsum("...k,...ki->...i", u.gradient(x), S.J(x))

    return beta


def _dbeta(S: AlmostComplexStructure, u: ScalarField, p):
    """Antisymmetric matrix ``d_i beta_j - d_j beta_i`` at ``p`` (product rule)."""
    g = u.gradient(p)
    H = u.hessian(p)
    J = S.J(p)
    dJ = S.J_jacobian(p)  # (..., i, k, j) = d_i J_kj
    B = H @ J + np.einsum("...k,...ikj->...ij", g, dJ)
    return B - np.swapaxes(B, -1, -2), J


def levi_value(S, u: ScalarField, p, V) -> float:
    """``H_J(u)(p, V)`` for a real tangent vector ``V`` (length ``2n``)."""
    S = _structure(S)
    D, J = _dbeta(S, u, np.asarray(p, dtype=float))
    V = np.asarray(V, dtype=float)
    JV = np.einsum("...ab,...b->...a", J, V)
    return -np.einsum("...i,...ij,...j->...", V, D, JV)


def levi_value_extension(S, u: ScalarField, p, X) -> float:
    """Levi form through vector fields: ``-(X beta(Y) - Y beta(X) - beta([X, Y]))`` with ``Y = J X``.

    ``X`` maps points ``(..., 2n)`` to vectors ``(..., 2n)``; the value must not
    depend on how ``X(p)`` is extended.  Everything is differentiated numerically.
    """
    S = _structure(S)
    p = np.asarray(p, dtype=float)
    beta = one_form(S, u)

    def Y(x):
        return np.einsum("...ab,...b->...a", S.J(x), X(x))

    def beta_x(x):
        return np.einsum("...i,...i->...", beta(x), X(x))

    def beta_y(x):
        return np.einsum("...i,...i->...", beta(x), Y(x))

    xp, yp = X(p), Y(p)
    term1 = fd.gradient(beta_y, p) @ xp
    term2 = fd.gradient(beta_x, p) @ yp
    dX = fd.jacobian(X, p, value_ndim=1)  # (i, a) = d_i X_a
    dY = fd.jacobian(Y, p, value_ndim=1)
    bracket = xp @ dY - yp @ dX
    return float(-(term1 - term2 - beta(p) @ bracket))


@dataclass
class LeviQuadraticForm:
    """Symmetric ``S`` with ``H_J(u)(p, V) = V^T S V`` for real ``V``."""

    point: np.ndarray
    matrix: np.ndarray

    def __call__(self, V):
        V = np.asarray(V, dtype=float)
        return np.einsum("...i,ij,...j->...", V, self.matrix, V)


def levi_matrix(S, u: ScalarField, p) -> LeviQuadraticForm:
    """Quadratic-form matrix of the Levi form at ``p`` (equal to its polarization)."""
    S = _structure(S)
    p = np.asarray(p, dtype=float)
    D, J = _dbeta(S, u, p)
    M = -(D @ J)
    return LeviQuadraticForm(p, 0.5 * (M + np.swapaxes(M, -1, -2)))


def _levi_matrices(S, u, points):
    D, J = _dbeta(S, u, points)
    M = -(D @ J)
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def _metric(h, n):
    if h is None:
        return HermitianMetric.euclidean(n)
    if isinstance(h, HermitianMetric):
        return h
    return HermitianMetric(h)


def _min_generalized_eig(A, B):
    try:
        L = np.linalg.cholesky(B)
    except np.linalg.LinAlgError:
        raise ValueError("hermitian metric is not positive definite") from None
    Linv = np.linalg.inv(L)
    C = Linv @ A @ np.swapaxes(Linv, -1, -2)
    return np.linalg.eigvalsh(0.5 * (C + np.swapaxes(C, -1, -2)))[..., 0]


def min_levi_eigen(S, u: ScalarField, p, h=None):
    """``min_V H_J(u)(p, V) / (LEVI_FACTOR * h_p(V))`` (smallest generalized eigenvalue)."""
    S = _structure(S)
    p = np.asarray(p, dtype=float)
    metric = _metric(h, S.n)
    return _min_generalized_eig(_levi_matrices(S, u, p), LEVI_FACTOR * metric.real_form(p))


@dataclass
class PshReport:
    passed: bool
    margin: float
    min_eigen: float
    worst_point: list
    records: list = field(default_factory=list)  # {"point", "min_eigen", "pass"}


def is_strictly_psh(S, u: ScalarField, grid, h=None, margin: float = 0.0) -> PshReport:
    """Pass iff ``min_levi_eigen >= margin`` at every grid node (``> 0`` when ``margin == 0``)."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    eig = np.asarray(min_levi_eigen(S, u, grid, h))
    ok = eig > 0 if margin == 0 else eig >= margin
    worst = int(np.argmin(eig))
    records = [
        {"point": pt.tolist(), "min_eigen": float(e), "pass": bool(o)} for pt, e, o in zip(grid, eig, ok)
    ]
    return PshReport(bool(np.all(ok)), float(margin), float(eig[worst]), grid[worst].tolist(), records)


class HolomorphyError(ValueError):
    pass


def holomorphy_residual(F, S_source, S_target, points) -> float:
    """``max |dF J' - J(F) dF|`` over sample points."""
    S_source = _structure(S_source)
    S_target = _structure(S_target)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    dF = F.jacobian(points)
    return float(np.max(np.abs(dF @ S_source.J(points) - S_target.J(F(points)) @ dF)))


def hessian_invariance_check(F, S_source, S_target, u: ScalarField, p_source, V_source, samples=None, tol: float = 1e-8):
    """Both sides of ``H_{J'}(u o F)(p', V') = H_J(u)(F(p'), dF(p') V')``.

    ``F`` is a coordinate change from the source chart (structure ``S_source``)
    into the target chart (``S_target``); it must be holomorphic on the
    sample set (default: a small cloud around ``p_source``).
    """
    p = np.asarray(p_source, dtype=float)
    if samples is None:
        rng = np.random.default_rng(0)
        samples = p + 0.05 * rng.uniform(-1, 1, size=(20, p.size))
    res = holomorphy_residual(F, S_source, S_target, samples)
    if res > tol:
        raise HolomorphyError(f"map is not holomorphic on the samples (residual {res:.2e})")
    V = np.asarray(V_source, dtype=float)
    lhs = levi_value(S_source, pullback(u, F), p, V)
    rhs = levi_value(S_target, u, F(p), F.jacobian(p) @ V)
    return float(lhs), float(rhs)


def complex_to_tangent(V) -> np.ndarray:
    """Real tangent vector of a complex vector ``V`` in C^n."""
    return to_real(np.asarray(V, dtype=complex))


def tangent_to_complex(V) -> np.ndarray:
    return to_complex(np.asarray(V, dtype=float))

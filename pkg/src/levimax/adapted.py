"""Adapted coordinates at a point.

Two steps: an affine change putting ``p`` at the origin with ``J(0) = J_st``
(hence ``A(0) = 0``), then ``z -> z + q(z, zbar)`` with
``q_j = sum c_jkl z_k conj(z_l)`` chosen so that ``dA/dz(0) = 0``.  To first
order the second step changes ``A`` into ``A - dq/dzbar``, and
``d/dz_k (dq_j/dzbar_l) = c_jkl``, so ``c_jkl = dA_jl/dz_k(0)``.  The result is
always verified numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .almost_complex import StructureError, _structure, pushforward, transformed_structure
from .charts import AffineChange, CoordinateChange, QuadraticChange
from .coords import j_standard
from .fields import FunctionField, ScalarField, hermitian_form_matrix, hermitian_hessian_jst
from .levi import LEVI_FACTOR, levi_matrix

INDEPENDENCE_TOL = 1e-6


class NormalizationError(RuntimeError):
    pass


def _adapted_basis(J0):
    """Columns ``v1, J v1, ..., vn, J vn`` with each ``v`` the first standard vector outside the span."""
    d = J0.shape[0]
    cols = []
    ortho = []  # orthonormal basis of the span so far
    for e in np.eye(d):
        if len(cols) == d:
            break
        r = e - sum((e @ q) * q for q in ortho)
        if np.linalg.norm(r) < INDEPENDENCE_TOL:
            continue
        Je = J0 @ e
        rj = Je - sum((Je @ q) * q for q in ortho)
        rj = rj - (rj @ r) / (r @ r) * r
        if np.linalg.norm(rj) < INDEPENDENCE_TOL:
            continue
        cols.extend([e, Je])
        ortho.append(r / np.linalg.norm(r))
        ortho.append(rj / np.linalg.norm(rj))
    return np.array(cols).T


def linear_normalize(S, p) -> AffineChange:
    """Affine ``x -> L (x - p)`` with ``L J(p) L^-1 = J_st``."""
    S = _structure(S)
    p = np.asarray(p, dtype=float)
    J0 = S.J(p)
    d = 2 * S.n
    if np.max(np.abs(J0 @ J0 + np.eye(d))) > 1e-8:
        raise NormalizationError("J(p)^2 != -I; cannot normalize a degenerate structure")
    B = _adapted_basis(J0)
    if B.shape != (d, d):
        raise NormalizationError("could not complete a J-adapted basis")
    L = np.linalg.inv(B)
    return AffineChange(L, p)


def wirtinger_dA(S, x) -> tuple:
    """``(dA/dz_k, dA/dzbar_k)`` at ``x``, arrays indexed ``[k, i, j]``."""
    return _structure(S).A_wirtinger(np.asarray(x, dtype=float))


def quadratic_normalize(S, verify: bool = True, tol: float = 1e-8) -> QuadraticChange:
    """Degree-two change with identity linear part making ``dA/dz(0) = 0``.

    ``S`` must already satisfy ``A(0) = 0``.
    """
    S = _structure(S)
    origin = np.zeros(2 * S.n)
    a0 = S.A(origin)
    if np.max(np.abs(a0)) > 1e-8:
        raise NormalizationError(f"A(0) = 0 required, got |A(0)| = {np.max(np.abs(a0)):.2e}")
    dz, _ = wirtinger_dA(S, origin)  # [k, j, l] = dA_jl / dz_k
    coef = np.transpose(dz, (1, 0, 2))  # c[j, k, l]
    chart = QuadraticChange(coef)
    if verify:
        new = transformed_structure(S, chart)
        residual = float(np.max(np.abs(wirtinger_dA(new, origin)[0])))
        if residual > tol:
            raise NormalizationError(f"dA/dz(0) residual {residual:.2e} after normalization")
    return chart


def adapted_chart(S, p):
    """Return ``(chart, structure)``: the composed normalization at ``p`` and ``S`` in those coordinates."""
    S = _structure(S)
    lin = linear_normalize(S, p)
    S1 = transformed_structure(S, lin)
    quad = quadratic_normalize(S1)
    total = quad.compose(lin)
    return total, transformed_structure(S, total)


@dataclass
class AdaptedReport:
    a0_residual: float  # |A(0)|
    dza_residual: float  # |dA/dz(0)|
    levi_identity_residual: float  # |Levi matrix - 4 * real form of the hermitian Hessian|
    levi_matrix: list
    hermitian_form: list

    def passed(self, tol_structure: float = 1e-8, tol_levi: float = 1e-5) -> bool:
        return (
            self.a0_residual <= tol_structure
            and self.dza_residual <= tol_structure
            and self.levi_identity_residual <= tol_levi
        )


def verify_adapted(S, chart: CoordinateChange, u: ScalarField) -> AdaptedReport:
    """Residuals of ``A(0) = 0``, ``dA/dz(0) = 0`` and of the Levi identity at the new origin.

    The Levi form of ``u o chart^-1`` is computed with the pushed-forward
    structure and compared with ``LEVI_FACTOR`` times the standard hermitian
    Hessian of the same function.
    """
    S = _structure(S)
    origin = np.zeros(2 * S.n)
    S_new = transformed_structure(S, chart)
    a0 = float(np.max(np.abs(S_new.A(origin))))
    dza = float(np.max(np.abs(wirtinger_dA(S_new, origin)[0])))
    u_new = FunctionField(lambda y: u(chart.inverse(y)), S.n, name="u in adapted coordinates")
    J_new = pushforward(S, chart)
    levi = levi_matrix(J_new, u_new, origin).matrix
    herm = LEVI_FACTOR * hermitian_form_matrix(hermitian_hessian_jst(u_new, origin))
    scale = max(1.0, float(np.max(np.abs(herm))))
    return AdaptedReport(a0, dza, float(np.max(np.abs(levi - herm))) / scale, levi.tolist(), herm.tolist())


def standard_check(S, p, tol: float = 1e-10) -> float:
    """``|L J(p) L^-1 - J_st|`` for the linear normalization at ``p``."""
    S = _structure(S)
    chart = linear_normalize(S, p)
    L = chart.matrix
    res = float(np.max(np.abs(L @ S.J(np.asarray(p, dtype=float)) @ np.linalg.inv(L) - j_standard(S.n))))
    if res > tol:
        raise StructureError(f"linear normalization residual {res:.2e}")
    return res


"""Chart-local almost complex structures.

A structure on a chart of C^n is stored either as the real operator field
``J(x)`` (``2n x 2n``, ``J^2 = -I``) or as the complex matrix field ``A(z)``
(``n x n``) of the quasilinear Cauchy-Riemann system

    d f / d zetabar + A(f) conj(d f / d zeta) = 0

for discs ``f``.  The two are linked pointwise by the identity

    (w + i J w) + A conj(w - i J w) = 0      for every w in C^n,

which is the contract checked by :func:`defining_residual`.  Writing
``J w = P w + Q conj(w)`` the identity gives ``A = -i Q (I + i conj(P))^-1``
and, conversely, ``J w = i (I - A conj(A))^-1 [(I + A conj(A)) w + 2 A conj(w)]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fd
from .coords import box_grid, complex_parts, j_standard, real_matrix, to_complex, to_real
from .expr import Expression, parse_expression


class StructureError(ValueError):
    pass


# Matrix fields


class MatrixField:
    """Field of ``m x m`` matrices over a chart of C^n; batch axes lead."""

    exact = False

    def __init__(self, n: int, m: int, is_complex: bool):
        self.n = int(n)
        self.m = int(m)
        self.is_complex = bool(is_complex)

    def __call__(self, x):
        raise NotImplementedError

    def jacobian(self, x):
        """``d/dx_i`` of the field, shape ``(..., 2n, m, m)``."""
        return fd.jacobian(self, np.asarray(x, dtype=float), value_ndim=2)


class ConstantMatrixField(MatrixField):
    exact = True

    def __init__(self, value, n: int):
        value = np.asarray(value)
        super().__init__(n, value.shape[0], np.iscomplexobj(value))
        self.value = value

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.value, x.shape[:-1] + self.value.shape).copy()

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (2 * self.n,) + self.value.shape, dtype=self.value.dtype)


class ExpressionMatrixField(MatrixField):
    """Matrix field with closed-form entries.

    Real fields take a nested list of expressions; complex fields a nested
    list of ``(real part, imaginary part)`` expression pairs.
    """

    exact = True

    def __init__(self, entries, n: int, is_complex: bool = False):
        m = len(entries)
        super().__init__(n, m, is_complex)

        def parse(e):
            return parse_expression(e, n) if isinstance(e, str) else _as_expr(e)

        if is_complex:
            self.re = [[parse(pair[0]) for pair in row] for row in entries]
            self.im = [[parse(pair[1]) for pair in row] for row in entries]
        else:
            self.re = [[parse(e) for e in row] for row in entries]
            self.im = None
        for row in self.re:
            if len(row) != m:
                raise StructureError("matrix field entries must form a square array")
        d = 2 * n
        self._dre = [[[e.diff(i) for e in row] for row in self.re] for i in range(d)]
        self._dim = None if self.im is None else [[[e.diff(i) for e in row] for row in self.im] for i in range(d)]

    @staticmethod
    def _eval(table, x):
        return np.stack(
            [np.stack([np.broadcast_to(e.evaluate(x), x.shape[:-1]) for e in row], axis=-1) for row in table],
            axis=-2,
        ).astype(float)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self._eval(self.re, x)
        if self.im is not None:
            out = out + 1j * self._eval(self.im, x)
        return out

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        parts = [self._eval(t, x) for t in self._dre]
        out = np.stack(parts, axis=-3)
        if self._dim is not None:
            out = out + 1j * np.stack([self._eval(t, x) for t in self._dim], axis=-3)
        return out


def _as_expr(e):
    if isinstance(e, Expression):
        return e
    raise StructureError(f"cannot interpret {e!r} as an expression")


class FunctionMatrixField(MatrixField):
    """Matrix field backed by a vectorized callable (finite-difference derivatives)."""

    def __init__(self, func, n: int, m: int, is_complex: bool):
        super().__init__(n, m, is_complex)
        self.func = func

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))


# Pointwise conversions


def complex_matrix_from_j(J):
    """``A`` from the real operator ``J`` (batched)."""
    P, Q = complex_parts(J)
    n = P.shape[-1]
    factor = np.eye(n) + 1j * P.conj()
    try:
        inv = np.linalg.inv(factor)
    except np.linalg.LinAlgError:
        raise StructureError("I + i conj(P) is singular: structure too far from J_st in this chart") from None
    if not np.all(np.isfinite(inv)) or np.max(np.linalg.cond(factor)) > 1e12:
        raise StructureError("I + i conj(P) is singular: structure too far from J_st in this chart")
    return -1j * Q @ inv


def j_from_complex_matrix(A):
    """Real operator ``J`` from ``A`` (batched); requires ``||A|| < 1``."""
    A = np.asarray(A, dtype=complex)
    if np.max(np.linalg.norm(A, ord=2, axis=(-2, -1))) >= 1.0:
        raise StructureError("complex matrix must have operator norm < 1")
    n = A.shape[-1]
    AA = A @ A.conj()
    inv = np.linalg.inv(np.eye(n) - AA)
    P = 1j * inv @ (np.eye(n) + AA)
    Q = 2j * inv @ A
    return real_matrix(P, Q)


def defining_residual(J, A, w) -> np.ndarray:
    """``|(w + iJw) + A conj(w - iJw)|`` for complex vectors ``w``."""
    w = np.asarray(w, dtype=complex)
    Jw = to_complex(np.einsum("...ab,...b->...a", J, to_real(w)))
    lhs = (w + 1j * Jw) + np.einsum("...kl,...l->...k", A, np.conj(w - 1j * Jw))
    return np.linalg.norm(lhs, axis=-1)


# Structures


class AlmostComplexStructure:
    """Almost complex structure on a chart, in ``J`` or ``A`` representation."""

    def __init__(self, n: int, J: MatrixField | None = None, A: MatrixField | None = None):
        if (J is None) == (A is None):
            raise StructureError("give exactly one of J or A")
        self.n = int(n)
        self._J = J
        self._A = A
        field = J if J is not None else A
        expected = 2 * n if J is not None else n
        if field.m != expected or field.n != n:
            raise StructureError(f"matrix field has size {field.m}, expected {expected} for n={n}")

    @classmethod
    def standard(cls, n: int) -> "AlmostComplexStructure":
        return cls(n, J=ConstantMatrixField(j_standard(n), n))

    @classmethod
    def from_j(cls, field: MatrixField) -> "AlmostComplexStructure":
        return cls(field.n, J=field)

    @classmethod
    def from_a(cls, field: MatrixField) -> "AlmostComplexStructure":
        return cls(field.n, A=field)

    @property
    def representation(self) -> str:
        return "J" if self._J is not None else "A"

    @property
    def field(self) -> MatrixField:
        return self._J if self._J is not None else self._A

    def J(self, x):
        if self._J is not None:
            return self._J(x)
        return j_from_complex_matrix(self._A(x))

    def A(self, x):
        if self._A is not None:
            return np.asarray(self._A(x), dtype=complex)
        return complex_matrix_from_j(self._J(x))

    def J_jacobian(self, x):
        if self._J is not None:
            return self._J.jacobian(x)
        return fd.jacobian(self.J, np.asarray(x, dtype=float), value_ndim=2)

    def A_jacobian(self, x):
        if self._A is not None:
            return self._A.jacobian(x)
        return fd.jacobian(self.A, np.asarray(x, dtype=float), value_ndim=2)

    def A_wirtinger(self, x):
        """``(dA/dz_k, dA/dzbar_k)`` at ``x``, each of shape ``(..., n, n, n)`` indexed ``[k, i, j]``."""
        jac = self.A_jacobian(x)
        dx = jac[..., 0::2, :, :]
        dy = jac[..., 1::2, :, :]
        return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy)

    def as_j_field(self) -> MatrixField:
        if self._J is not None:
            return self._J
        return FunctionMatrixField(self.J, self.n, 2 * self.n, False)

    def as_a_field(self) -> MatrixField:
        if self._A is not None:
            return self._A
        return FunctionMatrixField(self.A, self.n, self.n, True)


def _structure(S) -> AlmostComplexStructure:
    if isinstance(S, AlmostComplexStructure):
        return S
    if isinstance(S, MatrixField):
        return AlmostComplexStructure.from_a(S) if S.is_complex else AlmostComplexStructure.from_j(S)
    raise TypeError(f"expected a structure or matrix field, got {type(S).__name__}")


@dataclass
class StructureReport:
    representation: str
    max_residual: float  # J^2 + I (J form) or max ||A|| (A form)
    margin: float  # tol - residual (J form) or 1 - max ||A|| (A form)
    passed: bool
    worst_point: list


def default_validation_grid(n: int, points: int = 9, extent: float = 0.9) -> np.ndarray:
    return box_grid(n, points, -extent, extent)


def validate_structure(S, grid=None, tol: float = 1e-8) -> StructureReport:
    """Check ``J^2 = -I`` (J form) or ``||A|| < 1`` (A form) on a sample grid."""
    S = _structure(S)
    grid = default_validation_grid(S.n) if grid is None else np.asarray(grid, dtype=float)
    if S.representation == "J":
        J = S.J(grid)
        res = np.max(np.abs(J @ J + np.eye(2 * S.n)), axis=(-2, -1))
        worst = int(np.argmax(res))
        worst_val = float(res[worst])
        return StructureReport("J", worst_val, tol - worst_val, worst_val <= tol, grid[worst].tolist())
    norms = np.linalg.norm(S.A(grid), ord=2, axis=(-2, -1))
    worst = int(np.argmax(norms))
    worst_val = float(norms[worst])
    return StructureReport("A", worst_val, 1.0 - worst_val, worst_val < 1.0, grid[worst].tolist())


@dataclass
class LinearComplexDecomposition:
    """``L v = P v + Q conj(v)``."""

    P: np.ndarray
    Q: np.ndarray

    def apply(self, v):
        v = np.asarray(v, dtype=complex)
        return v @ self.P.T + np.conj(v) @ self.Q.T

    def real_matrix(self) -> np.ndarray:
        return real_matrix(self.P, self.Q)


def decompose_linear(L) -> LinearComplexDecomposition:
    """Split a real-linear operator on C^n into complex-linear and antilinear parts.

    ``L`` is a real ``2n x 2n`` matrix or a callable acting on complex vectors.
    """
    if callable(L):
        probe = np.asarray(L(np.zeros(1, dtype=complex)))
        n = probe.shape[-1]
        eye = np.eye(n, dtype=complex)
        img_re = np.array([L(e) for e in eye])  # row j: L(e_j)
        img_im = np.array([L(1j * e) for e in eye])
        P = 0.5 * (img_re - 1j * img_im).T
        Q = 0.5 * (img_re + 1j * img_im).T
        return LinearComplexDecomposition(P, Q)
    P, Q = complex_parts(L)
    return LinearComplexDecomposition(P, Q)


def complex_matrix(S, p) -> np.ndarray:
    """``A_J(p)``."""
    return _structure(S).A(p)


def structure_from_complex_matrix(A) -> AlmostComplexStructure:
    """Structure in ``J`` form whose complex matrix is the given ``A`` field."""
    field = A.as_a_field() if isinstance(A, AlmostComplexStructure) else A
    return AlmostComplexStructure.from_j(FunctionMatrixField(lambda x: j_from_complex_matrix(field(x)), field.n, 2 * field.n, False))


def transform_complex_matrix(A, chart, p) -> np.ndarray:
    """Complex matrix in the coordinates ``z' = chart(z)``, at the point ``chart(p)``.

    ``A' = (dz'/dz A - dz'/dzbar) (conj(dz'/dz) - conj(dz'/dzbar) A)^-1``.
    """
    S = _structure(A)
    a = S.A(p)
    dz, dzbar = chart.wirtinger(p)
    first = dz @ a - dzbar
    second = dz.conj() - dzbar.conj() @ a
    if np.min(np.abs(np.linalg.det(second))) < 1e-14:
        raise StructureError("chart change is not admissible at this point")
    return first @ np.linalg.inv(second)


def transformed_structure(S, chart) -> AlmostComplexStructure:
    """The structure in the new coordinates, in ``A`` form (evaluated through ``chart.inverse``)."""
    S = _structure(S)
    return AlmostComplexStructure.from_a(
        FunctionMatrixField(lambda y: transform_complex_matrix(S, chart, chart.inverse(y)), S.n, S.n, True)
    )


def pushforward(S, chart) -> AlmostComplexStructure:
    """Direct image ``J'(chart(x)) = dchart(x) J(x) dchart(x)^-1``, in ``J`` form."""
    S = _structure(S)

    def j_new(y):
        x = chart.inverse(y)
        d = chart.jacobian(x)
        return d @ S.J(x) @ np.linalg.inv(d)

    return AlmostComplexStructure.from_j(FunctionMatrixField(j_new, S.n, 2 * S.n, False))


def scale_structure(S, lam: float) -> AlmostComplexStructure:
    """Structure after the isotropic dilation ``z = lam * w``: ``A_lam(w) = A(lam w)``."""
    S = _structure(S)
    lam = float(lam)
    if lam <= 0:
        raise ValueError("dilation factor must be positive")
    if S.representation == "A":
        field = S.field
        return AlmostComplexStructure.from_a(FunctionMatrixField(lambda w: field(lam * np.asarray(w)), S.n, S.n, True))
    field = S.field
    return AlmostComplexStructure.from_j(FunctionMatrixField(lambda w: field(lam * np.asarray(w)), S.n, 2 * S.n, False))


def ball_samples(n: int, count: int = 2000, radius: float = 1.0, seed: int = 0) -> np.ndarray:
    """Deterministic sample of the closed ball (includes the origin and boundary points)."""
    rng = np.random.default_rng(seed)
    d = 2 * n
    dirs = rng.normal(size=(count, d))
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    radii = radius * rng.uniform(size=(count, 1)) ** (1.0 / d)
    radii[: count // 10] = radius
    pts = dirs * radii
    pts[0] = 0.0
    return pts


def sup_norm(S, points) -> float:
    """``max ||A(p)||`` (operator norm) over sample points."""
    return float(np.max(np.linalg.norm(_structure(S).A(points), ord=2, axis=(-2, -1))))


def c1_norm(S, points) -> float:
    """``max(||A||, max_i ||dA/dx_i||)`` over sample points (C^1 seminorm proxy)."""
    S = _structure(S)
    jac = S.A_jacobian(points)
    d1 = np.max(np.linalg.norm(jac, ord=2, axis=(-2, -1)))
    return max(sup_norm(S, points), float(d1))

"""Scalar fields on a chart of C^n with derivatives up to order two."""

from __future__ import annotations

import enum
import logging
from functools import cached_property

import numpy as np

from . import fd
from .coords import hermitian_real_form
from .expr import Expression, parse_expression

log = logging.getLogger(__name__)


class Tier(enum.Enum):
    EXACT = "exact"
    NUMERIC = "numeric"


class ScalarField:
    """A real function of ``2n`` real variables.

    Subclasses provide ``__call__``; the default derivative methods use
    finite differences (``Tier.NUMERIC``).
    """

    tier = Tier.NUMERIC

    def __init__(self, n: int):
        self.n = int(n)

    def __call__(self, x):
        raise NotImplementedError

    def gradient(self, x):
        return fd.gradient(self, np.asarray(x, dtype=float))

    def hessian(self, x):
        return fd.hessian(self, np.asarray(x, dtype=float))

    def derivative(self, x, idx=()):
        """Mixed partial ``d^idx f(x)`` for a tuple of 0-based coordinates, ``len(idx) <= 2``."""
        idx = tuple(int(i) for i in idx)
        if len(idx) > 2:
            raise ValueError("derivatives are available up to order 2")
        if any(not 0 <= i < 2 * self.n for i in idx):
            raise ValueError(f"coordinate index out of range for n={self.n}")
        if not idx:
            return self(x)
        if len(idx) == 1:
            return self.gradient(x)[..., idx[0]]
        return self.hessian(x)[..., idx[0], idx[1]]

    def _check_dim(self, other):
        if other.n != self.n:
            raise ValueError(f"dimension mismatch: n={self.n} vs n={other.n}")


class ExpressionField(ScalarField):
    """Field given by a closed-form expression; derivatives are symbolic."""

    tier = Tier.EXACT

    def __init__(self, expr: Expression | str, n: int):
        super().__init__(n)
        if isinstance(expr, str):
            expr = parse_expression(expr, n)
        if expr.max_index() >= 2 * n:
            raise ValueError(f"expression uses x{expr.max_index() + 1} but n={n}")
        self.expr = expr

    @cached_property
    def _gradient_exprs(self):
        return [self.expr.diff(i) for i in range(2 * self.n)]

    @cached_property
    def _hessian_exprs(self):
        g = self._gradient_exprs
        d = 2 * self.n
        return [[g[i].diff(j) if j >= i else None for j in range(d)] for i in range(d)]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return _broadcast(self.expr.evaluate(x), x)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([_broadcast(e.evaluate(x), x) for e in self._gradient_exprs], axis=-1)

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        d = 2 * self.n
        out = np.empty(x.shape[:-1] + (d, d))
        for i in range(d):
            for j in range(i, d):
                v = _broadcast(self._hessian_exprs[i][j].evaluate(x), x)
                out[..., i, j] = v
                out[..., j, i] = v
        return out

    def __repr__(self):
        return f"ExpressionField({self.expr}, n={self.n})"


class FunctionField(ScalarField):
    """Field backed by a vectorized callable ``(..., 2n) -> (...)``."""

    def __init__(self, func, n: int, name: str | None = None):
        super().__init__(n)
        self.func = func
        self.name = name or getattr(func, "__name__", "function")

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    def __repr__(self):
        return f"FunctionField({self.name}, n={self.n})"


def _broadcast(value, x):
    return np.broadcast_to(value, x.shape[:-1]).astype(float) if x.ndim > 1 else float(value)


def as_field(u, n: int) -> ScalarField:
    if isinstance(u, ScalarField):
        if u.n != n:
            raise ValueError(f"dimension mismatch: n={u.n} vs n={n}")
        return u
    if isinstance(u, (str, Expression)):
        return ExpressionField(u, n)
    if isinstance(u, (int, float)):
        return ExpressionField(str(float(u)), n)
    return FunctionField(u, n)


def pullback(u: ScalarField, chart) -> ScalarField:
    """The field ``x -> u(chart(x))`` (``u`` itself for the identity change)."""
    if getattr(chart, "is_identity", False):
        return u
    return FunctionField(lambda x: u(chart(x)), u.n, name=f"pullback of {u!r}")


def derivative(f: ScalarField, p, idx=()):
    return f.derivative(p, idx)


def hermitian_hessian_jst(f: ScalarField, p) -> np.ndarray:
    """Matrix ``L_kj = d^2 f / dz_k dzbar_j`` at ``p`` from the real Hessian.

    The result is symmetrized to be exactly hermitian; the asymmetry removed
    is logged at debug level.
    """
    H = f.hessian(p)
    hxx = H[..., 0::2, 0::2]
    hyy = H[..., 1::2, 1::2]
    hxy = H[..., 0::2, 1::2]
    hyx = H[..., 1::2, 0::2]
    L = 0.25 * ((hxx + hyy) + 1j * (hxy - hyx))
    Lh = np.swapaxes(L, -1, -2).conj()
    residual = float(np.max(np.abs(L - Lh))) if L.size else 0.0
    if residual:
        log.debug("hermitian Hessian asymmetry %.3e", residual)
    return 0.5 * (L + Lh)


def hermitian_form(L, V):
    """``sum_{k,j} L_kj V_k conj(V_j)`` for complex vectors ``V``."""
    V = np.asarray(V, dtype=complex)
    return np.einsum("...k,...kj,...j->...", V, L, V.conj()).real


def hermitian_form_matrix(L) -> np.ndarray:
    """Real symmetric matrix of :func:`hermitian_form` on real tangent vectors."""
    return hermitian_real_form(np.swapaxes(np.asarray(L), -1, -2))


class HermitianMetric:
    """Positive-definite hermitian form ``h_p(V) = V^* H(p) V`` on C^n.

    ``matrix`` is either a constant ``n x n`` array or a callable mapping
    points ``(..., 2n)`` to ``(..., n, n)``.
    """

    def __init__(self, matrix, n: int | None = None):
        if callable(matrix):
            if n is None:
                raise ValueError("n is required for a field-valued metric")
            self.n = int(n)
            self._func = matrix
            self._const = None
        else:
            m = np.asarray(matrix, dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("metric matrix must be square")
            if not np.allclose(m, m.conj().T, atol=1e-12):
                raise ValueError("metric matrix is not hermitian")
            if np.linalg.eigvalsh(m).min() <= 0:
                raise ValueError("metric matrix is not positive definite")
            self.n = m.shape[0]
            self._const = m
            self._func = None

    @classmethod
    def euclidean(cls, n: int) -> "HermitianMetric":
        return cls(np.eye(n))

    def matrix(self, p):
        p = np.asarray(p, dtype=float)
        if self._const is not None:
            return np.broadcast_to(self._const, p.shape[:-1] + self._const.shape)
        return np.asarray(self._func(p), dtype=complex)

    def __call__(self, p, V):
        """``h_p(V)`` for complex vectors ``V`` of shape ``(..., n)``."""
        V = np.asarray(V, dtype=complex)
        return np.einsum("...k,...kl,...l->...", V.conj(), self.matrix(p), V).real

    def real_form(self, p) -> np.ndarray:
        return hermitian_real_form(self.matrix(p))

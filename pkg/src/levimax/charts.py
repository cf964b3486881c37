"""Coordinate changes ``z' = Phi(z)`` on a chart of C^n."""

from __future__ import annotations

import numpy as np

from .coords import jacobian_from_wirtinger, to_complex, to_real, wirtinger_from_jacobian
from .expr import parse_expression


class ChartError(ValueError):
    pass


class CoordinateChange:
    """Smooth map of ``R^{2n}`` with an invertible differential.

    Subclasses implement ``__call__`` and ``jacobian``; ``inverse`` falls back
    to Newton's method started from the linearization at the origin.
    """

    newton_tol = 1e-14
    newton_maxiter = 50

    def __init__(self, n: int):
        self.n = int(n)

    def __call__(self, x):
        raise NotImplementedError

    def jacobian(self, x):
        raise NotImplementedError

    def wirtinger(self, x):
        """``(dz'/dz, dz'/dzbar)`` at ``x``, complex ``(..., n, n)`` each."""
        return wirtinger_from_jacobian(self.jacobian(x))

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        origin = np.zeros(2 * self.n)
        d0 = self.jacobian(origin)
        x = np.linalg.solve(d0, (y - self(origin))[..., None])[..., 0]
        scale = max(1.0, float(np.max(np.abs(y)))) if y.size else 1.0
        for _ in range(self.newton_maxiter):
            r = self(x) - y
            if np.max(np.abs(r)) <= self.newton_tol * scale:
                return x
            x = x - np.linalg.solve(self.jacobian(x), r[..., None])[..., 0]
        r = self(x) - y
        if np.max(np.abs(r)) > 1e-10 * scale:
            raise ChartError(f"Newton inversion did not converge (residual {np.max(np.abs(r)):.2e})")
        return x

    def compose(self, inner: "CoordinateChange") -> "ComposedChange":
        """The change ``self o inner``."""
        return ComposedChange(self, inner)

    def to_json(self) -> dict:
        raise NotImplementedError


class IdentityChange(CoordinateChange):
    is_identity = True

    def __call__(self, x):
        return np.array(x, dtype=float)

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.eye(2 * self.n), x.shape[:-1] + (2 * self.n, 2 * self.n)).copy()

    def inverse(self, y):
        return np.array(y, dtype=float)

    def to_json(self):
        return {"type": "identity", "n": self.n}


class AffineChange(CoordinateChange):
    """``x -> L (x - center)``."""

    def __init__(self, matrix, center=None):
        L = np.asarray(matrix, dtype=float)
        super().__init__(L.shape[0] // 2)
        if L.shape != (2 * self.n, 2 * self.n):
            raise ChartError("affine change needs a square matrix of even size")
        if abs(np.linalg.det(L)) < 1e-14:
            raise ChartError("affine change is singular")
        self.matrix = L
        self.center = np.zeros(2 * self.n) if center is None else np.asarray(center, dtype=float)
        self._inv = np.linalg.inv(L)

    def __call__(self, x):
        return (np.asarray(x, dtype=float) - self.center) @ self.matrix.T

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.matrix, x.shape[:-1] + self.matrix.shape).copy()

    def inverse(self, y):
        return np.asarray(y, dtype=float) @ self._inv.T + self.center

    def to_json(self):
        return {"type": "affine", "matrix": self.matrix.tolist(), "center": self.center.tolist()}


class QuadraticChange(CoordinateChange):
    """``z -> z + q(z, zbar)`` with ``q_j = sum_{k,l} c[j,k,l] z_k conj(z_l)``."""

    def __init__(self, coefficients):
        c = np.asarray(coefficients, dtype=complex)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise ChartError("quadratic coefficients must have shape (n, n, n)")
        super().__init__(c.shape[0])
        self.coefficients = c

    def __call__(self, x):
        z = to_complex(x)
        q = np.einsum("jkl,...k,...l->...j", self.coefficients, z, z.conj())
        return to_real(z + q)

    def jacobian(self, x):
        z = to_complex(x)
        dz = np.eye(self.n) + np.einsum("jkl,...l->...jk", self.coefficients, z.conj())
        dzbar = np.einsum("jkl,...k->...jl", self.coefficients, z)
        return jacobian_from_wirtinger(dz, dzbar)

    def to_json(self):
        c = self.coefficients
        return {
            "type": "quadratic",
            "coefficients": np.stack([c.real, c.imag], axis=-1).tolist(),
        }


class ExpressionChange(CoordinateChange):
    """Change given by ``2n`` real component expressions (optionally with an explicit inverse)."""

    def __init__(self, components, n: int, inverse: "ExpressionChange | None" = None):
        super().__init__(n)
        comps = [parse_expression(c, n) if isinstance(c, str) else c for c in components]
        if len(comps) != 2 * n:
            raise ChartError(f"expected {2 * n} components, got {len(comps)}")
        self.components = comps
        self._jac = [[c.diff(i) for i in range(2 * n)] for c in comps]
        self._inverse = inverse

    @classmethod
    def from_complex(cls, pairs, n: int, inverse=None):
        """Build from ``n`` (real part, imaginary part) expression pairs."""
        comps = []
        for re_part, im_part in pairs:
            comps.extend([re_part, im_part])
        return cls(comps, n, inverse)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([np.broadcast_to(c.evaluate(x), x.shape[:-1]) for c in self.components], axis=-1)

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        rows = [
            np.stack([np.broadcast_to(e.evaluate(x), x.shape[:-1]) for e in row], axis=-1)
            for row in self._jac
        ]
        return np.stack(rows, axis=-2).astype(float)

    def inverse(self, y):
        if self._inverse is not None:
            return self._inverse(y)
        return super().inverse(y)

    def to_json(self):
        return {"type": "expression", "components": [str(c) for c in self.components]}


class ComposedChange(CoordinateChange):
    """``outer o inner``."""

    def __init__(self, outer: CoordinateChange, inner: CoordinateChange):
        if outer.n != inner.n:
            raise ChartError("dimension mismatch in composition")
        super().__init__(inner.n)
        self.outer = outer
        self.inner = inner

    def __call__(self, x):
        return self.outer(self.inner(x))

    def jacobian(self, x):
        return self.outer.jacobian(self.inner(x)) @ self.inner.jacobian(x)

    def inverse(self, y):
        return self.inner.inverse(self.outer.inverse(y))

    def to_json(self):
        return {"type": "composed", "outer": self.outer.to_json(), "inner": self.inner.to_json()}


class InverseChange(CoordinateChange):
    """The inverse of another change; its inverse is the original map."""

    def __init__(self, forward: CoordinateChange):
        super().__init__(forward.n)
        self.forward = forward

    def __call__(self, y):
        return self.forward.inverse(y)

    def jacobian(self, y):
        return np.linalg.inv(self.forward.jacobian(self.forward.inverse(y)))

    def inverse(self, x):
        return self.forward(x)

    def to_json(self):
        return {"type": "inverse", "forward": self.forward.to_json()}


def change_from_json(data: dict) -> CoordinateChange:
    kind = data.get("type")
    if kind == "identity":
        return IdentityChange(data["n"])
    if kind == "affine":
        return AffineChange(data["matrix"], data.get("center"))
    if kind == "quadratic":
        c = np.asarray(data["coefficients"], dtype=float)
        return QuadraticChange(c[..., 0] + 1j * c[..., 1])
    if kind == "composed":
        return ComposedChange(change_from_json(data["outer"]), change_from_json(data["inner"]))
    if kind == "inverse":
        return InverseChange(change_from_json(data["forward"]))
    if kind == "expression":
        comps = data["components"]
        return ExpressionChange(comps, len(comps) // 2)
    raise ChartError(f"unknown coordinate change type {kind!r}")

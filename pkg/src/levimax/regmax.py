"""Mollifier and the regularized maximum ``M_theta``.

``M_theta(t) = integral of max_j(t_j + s_j) prod_j theta_j^-1 omega(s_j / theta_j) ds``
is the expectation of ``max_j X_j`` for independent ``X_j = t_j + theta_j S_j``,
``S_j ~ omega``.  Writing it through the distribution function of the maximum,

    M_theta(t) = a + int_a^U (1 - prod_j Omega((x - t_j) / theta_j)) dx,
    a = max_j t_j,  U = max_j (t_j + theta_j),

turns the k-dimensional integral with a kink along ``t_i + s_i = t_j + s_j``
into a one-dimensional integral of a smooth function (``Omega``, the
cumulative of the bump, is C-infinity).  The gradient is

    dM/dt_j = int_a^U omega_j(x) prod_{i != j} Omega_i(x) dx,

i.e. the probability that ``X_j`` is the maximum, which is the shifted-form
derivative under the integral sign.  :func:`regmax_eval_tensor` integrates
the defining formula directly on a tensor grid and is kept as an
independent check.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .fields import ScalarField
from .quadrature import adaptive_gauss_legendre, mapped_rule

K_MAX = 4
NODES_PER_PIECE = 32


def bump(s):
    """Unnormalized kernel ``exp(-1/(s(1-s)))`` on ``(0, 1)``, zero elsewhere."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    out[inside] = np.exp(-1.0 / (si * (1.0 - si)))
    return out


def mollifier_constant(tol: float = 1e-14) -> float:
    """``C`` with ``C * int_0^1 bump = 1``."""
    # split at the peak; the integrand is symmetric but both halves are integrated
    left, _ = adaptive_gauss_legendre(bump, 0.0, 0.5, tol=tol / 2)
    right, _ = adaptive_gauss_legendre(bump, 0.5, 1.0, tol=tol / 2)
    return 1.0 / (left + right)


class Mollifier:
    """Normalized bump ``omega`` with a tabulated cumulative ``Omega``.

    ``Omega`` is stored as a piecewise Chebyshev interpolant (``panels``
    pieces of degree ``degree``) built from 64-point Gauss-Legendre values.
    """

    def __init__(self, panels: int = 32, degree: int = 24):
        self.constant = mollifier_constant()
        self._panels = panels
        self._degree = degree
        cheb = np.cos(np.pi * (np.arange(degree + 1) + 0.5) / (degree + 1))
        edges = np.linspace(0.0, 1.0, panels + 1)
        coef = np.empty((panels, degree + 1))
        for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            y = a + (cheb + 1.0) * 0.5 * (b - a)
            coef[i] = np.polynomial.chebyshev.chebfit(cheb, self._cdf_direct(y), degree)
        self._coef = coef
        self._coef.flags.writeable = False
        nodes, weights = mapped_rule(0.0, 1.0, 64)
        self.first_moment = float(np.sum(weights * nodes * self(nodes)))

    def __call__(self, s):
        return self.constant * bump(s)

    def _cdf_direct(self, y):
        y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
        nodes, weights = mapped_rule(np.zeros_like(y), y, 64)
        return np.sum(weights * self(nodes), axis=-1)

    def cdf(self, y):
        """``Omega(y) = int_0^y omega``; exactly 0 below 0 and 1 above 1."""
        y = np.asarray(y, dtype=float)
        yc = np.clip(y, 0.0, 1.0)
        scaled = yc * self._panels
        piece = np.minimum(scaled.astype(int), self._panels - 1)
        u = 2.0 * (scaled - piece) - 1.0
        c = self._coef[piece]
        b1 = np.zeros_like(u)
        b2 = np.zeros_like(u)
        for k in range(self._degree, 0, -1):
            b1, b2 = 2.0 * u * b1 - b2 + c[..., k], b1
        out = u * b1 - b2 + c[..., 0]
        out = np.where(y <= 0.0, 0.0, np.where(y >= 1.0, 1.0, out))
        return out


_DEFAULT = None


def default_mollifier() -> Mollifier:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Mollifier()
    return _DEFAULT


@dataclass(frozen=True)
class ThetaVector:
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in np.atleast_1d(self.values))
        if not vals:
            raise ValueError("theta must have at least one component")
        if not all(np.isfinite(v) and v > 0 for v in vals):
            raise ValueError(f"theta components must be positive, got {vals}")
        object.__setattr__(self, "values", vals)

    @property
    def k(self) -> int:
        return len(self.values)

    def asarray(self) -> np.ndarray:
        return np.array(self.values)


def _prepare(t, theta, k_max):
    t = np.asarray(t, dtype=float)
    if isinstance(theta, ThetaVector):
        theta = theta.asarray()
    theta = np.asarray(theta, dtype=float)
    if t.ndim == 0:
        t = t[None]
    k = t.shape[-1]
    if theta.shape[-1] != k:
        raise ValueError(f"len(t)={k} but len(theta)={theta.shape[-1]}")
    if k < 1:
        raise ValueError("need k >= 1")
    if k > k_max:
        raise ValueError(f"k={k} exceeds the configured maximum {k_max}")
    if np.any(~(theta > 0)):
        raise ValueError("theta components must be positive")
    theta = np.broadcast_to(theta, t.shape)
    return t, theta


def _pieces(t, theta):
    """Subintervals of ``[a, U]`` between consecutive breakpoints, with GL nodes."""
    a = t.max(axis=-1)
    upper = (t + theta).max(axis=-1)
    bp = np.concatenate([t, t + theta], axis=-1)
    bp = np.sort(np.clip(bp, a[..., None], upper[..., None]), axis=-1)
    x, w = mapped_rule(bp[..., :-1], bp[..., 1:], NODES_PER_PIECE)
    return a, x, w  # x, w: (..., 2k-1, nodes)


def regmax_eval(t, theta, k_max: int = K_MAX, mollifier: Mollifier | None = None):
    """Regularized maximum ``M_theta(t)``; ``t`` has shape ``(..., k)``."""
    mol = mollifier or default_mollifier()
    t, theta = _prepare(t, theta, k_max)
    a, x, w = _pieces(t, theta)
    z = (x[..., None] - t[..., None, None, :]) / theta[..., None, None, :]
    F = np.prod(mol.cdf(z), axis=-1)
    return a + np.sum(w * (1.0 - F), axis=(-1, -2))


def regmax_grad(t, theta, k_max: int = K_MAX, mollifier: Mollifier | None = None):
    """Gradient of ``M_theta`` at ``t``, shape ``(..., k)``."""
    mol = mollifier or default_mollifier()
    t, theta = _prepare(t, theta, k_max)
    _, x, w = _pieces(t, theta)
    z = (x[..., None] - t[..., None, None, :]) / theta[..., None, None, :]
    cdf = mol.cdf(z)
    dens = mol(z) / theta[..., None, None, :]
    k = t.shape[-1]
    out = np.empty(t.shape)
    for j in range(k):
        others = np.prod(np.delete(cdf, j, axis=-1), axis=-1) if k > 1 else 1.0
        out[..., j] = np.sum(w * dens[..., j] * others, axis=(-1, -2))
    return out


def regmax_eval_tensor(t, theta, nodes: int = 64, k_max: int = K_MAX, mollifier: Mollifier | None = None):
    """Direct tensor-product Gauss-Legendre quadrature of the defining integral.

    The kink of ``max`` limits this rule to algebraic convergence; use it as
    a cross-check, not as the production path.
    """
    mol = mollifier or default_mollifier()
    t, theta = _prepare(t, theta, k_max)
    if t.ndim > 1:
        flat_t = t.reshape(-1, t.shape[-1])
        flat_th = theta.reshape(-1, t.shape[-1])
        vals = [regmax_eval_tensor(a, b, nodes, k_max, mol) for a, b in zip(flat_t, flat_th)]
        return np.array(vals).reshape(t.shape[:-1])
    sigma, w = mapped_rule(0.0, 1.0, nodes)
    w = w * mol(sigma)
    shifted = t[:, None] + theta[:, None] * sigma  # (k, nodes)
    if t.size == 1:
        return float(w @ shifted[0])
    rest = reduce(np.maximum.outer, shifted[1:])
    wrest = reduce(np.multiply.outer, [w] * (t.size - 1))
    return float(sum(w[i] * np.sum(wrest * np.maximum(shifted[0, i], rest)) for i in range(nodes)))


class RegmaxField(ScalarField):
    """Composite field ``p -> M_theta(u_1(p), ..., u_k(p))`` (finite-difference tier)."""

    def __init__(self, fields, theta, k_max: int = K_MAX):
        fields = list(fields)
        if not fields:
            raise ValueError("need at least one field")
        n = fields[0].n
        for f in fields[1:]:
            if f.n != n:
                raise ValueError(f"dimension mismatch: n={n} vs n={f.n}")
        super().__init__(n)
        self.fields = fields
        self.theta = theta if isinstance(theta, ThetaVector) else ThetaVector(tuple(np.atleast_1d(theta)))
        if self.theta.k != len(fields):
            raise ValueError(f"{len(fields)} fields but {self.theta.k} theta components")
        if self.theta.k > k_max:
            raise ValueError(f"k={self.theta.k} exceeds the configured maximum {k_max}")
        self.k_max = k_max

    def components(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([np.asarray(f(x), dtype=float) for f in self.fields], axis=-1)

    def __call__(self, x):
        return regmax_eval(self.components(x), self.theta, self.k_max)

    def __repr__(self):
        return f"RegmaxField(k={self.theta.k}, theta={self.theta.values})"


def regmax_field(fields, theta, k_max: int = K_MAX) -> RegmaxField:
    return RegmaxField(fields, theta, k_max)

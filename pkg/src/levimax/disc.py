"""Small J-complex discs by Picard iteration on the quasilinear CR system.

A disc ``f: D_r -> C^n`` is J-holomorphic iff

    d f / d zetabar + A(f) conj(d f / d zeta) = 0,

so ``f = f0 - T[A(f) conj(df/dzeta)]`` with ``f0(zeta) = p + zeta V`` and ``T``
the Cauchy-Green operator of the disc (``dT[g]/dzetabar = g``).

Discretization is spectral: Gauss-Legendre radial nodes times uniform angles.
On an angular Fourier mode ``g = g_m(rho) e^{i m phi}`` the operator reduces to
radial integrals,

    T[g]_{m-1}(s) =  2 int_0^s g_m(rho) (rho/s)^{1-m} drho          (m <= 0)
    T[g]_{m-1}(s) = -2 int_s^r g_m(rho) (s/rho)^{m-1} drho          (m >= 1)

which are smooth and evaluated with Gauss-Legendre sub-rules on the
polynomial interpolant of ``g_m``.  No singular cell appears.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from .almost_complex import StructureError, _structure
from .coords import to_complex, to_real
from .fields import ScalarField

log = logging.getLogger(__name__)

SUBRULE_EXTRA = 16  # extra Gauss-Legendre nodes in the radial sub-rules


class DiscConvergenceError(RuntimeError):
    def __init__(self, message, increment):
        super().__init__(message)
        self.increment = increment


class DomainEscapeError(RuntimeError):
    pass


def _interp_matrix(nodes, x):
    """Rows: points ``x``; columns: weights on the values at ``nodes``."""
    return BarycentricInterpolator(nodes, np.eye(len(nodes)), axis=0, rng=0)(np.asarray(x, dtype=float))


class DiscGrid:
    """Polar grid on ``|zeta| < r``: ``n_r`` Gauss-Legendre radii times ``n_phi`` angles."""

    def __init__(self, r: float = 0.1, n_r: int = 32, n_phi: int = 64):
        if not 0 < r <= 1:
            raise ValueError("disc radius must lie in (0, 1]")
        if n_r < 2 or n_phi < 4 or n_phi % 2:
            raise ValueError("need n_r >= 2 and an even n_phi >= 4")
        self.r = float(r)
        self.n_r = int(n_r)
        self.n_phi = int(n_phi)
        x, w = np.polynomial.legendre.leggauss(n_r)
        self.rho = 0.5 * r * (x + 1)
        self.rho_weights = 0.5 * r * w
        self.phi = 2 * np.pi * np.arange(n_phi) / n_phi
        self.modes = np.fft.fftfreq(n_phi, 1 / n_phi).astype(int)
        # fixed rng: the weight computation shuffles nodes, which would break reproducibility
        interp = BarycentricInterpolator(self.rho, np.eye(n_r), axis=0, rng=0)
        self._diff = interp.derivative(self.rho)
        self._at0 = interp(np.zeros(1))[0]
        self._dat0 = interp.derivative(np.zeros(1))[0]
        self._shift_down = self._mode_map(-1)  # mode m -> m - 1
        self._shift_up = self._mode_map(+1)
        self._kernel = self._cauchy_green_kernel()

    def _mode_map(self, step):
        """Index array ``src`` with ``src[a]`` the slot holding mode ``modes[a] - step`` (or -1)."""
        lookup = {m: a for a, m in enumerate(self.modes)}
        return np.array([lookup.get(m - step, -1) for m in self.modes])

    def _cauchy_green_kernel(self):
        """``W[a, i, j]``: weight of ``g_{m+1}(rho_j)`` in ``T[g]_m(rho_i)``, ``m = modes[a]``."""
        q, wq = np.polynomial.legendre.leggauss(self.n_r + SUBRULE_EXTRA)
        m = self.modes[:, None]
        W = np.zeros((self.n_phi, self.n_r, self.n_r))
        inner_modes = self.modes <= -1
        for i, s in enumerate(self.rho):
            qi = 0.5 * s * (q + 1)
            qo = s + 0.5 * (self.r - s) * (q + 1)
            Li = _interp_matrix(self.rho, qi)
            Lo = _interp_matrix(self.rho, qo)
            inner = 2 * (0.5 * s * wq * (qi / s) ** np.abs(m)) @ Li
            outer = -2 * (0.5 * (self.r - s) * wq * (s / qo) ** np.maximum(m, 0)) @ Lo
            W[:, i] = np.where(inner_modes[:, None], inner, outer)
        W[self.modes == self.n_phi // 2 - 1] = 0  # would need the aliased top mode
        return W

    @property
    def zeta(self) -> np.ndarray:
        return self.rho[:, None] * np.exp(1j * self.phi)[None, :]

    @property
    def weights(self) -> np.ndarray:
        """Area weights of the nodes; they integrate polynomials in ``rho`` exactly."""
        return np.outer(self.rho * self.rho_weights, np.full(self.n_phi, 2 * np.pi / self.n_phi))

    def to_modes(self, f):
        return np.fft.fft(f, axis=-1) / self.n_phi

    def from_modes(self, fm):
        return np.fft.ifft(fm * self.n_phi, axis=-1)

    def _shift(self, fm, src):
        out = np.zeros_like(fm)
        ok = src >= 0
        out[..., ok] = fm[..., src[ok]]
        return out

    def cauchy_green(self, g):
        """``T[g]`` for samples ``g`` of shape ``(..., n_r, n_phi)``."""
        gm = self.to_modes(np.asarray(g, dtype=complex))
        src = self._shift(gm, self._shift_down)  # slot of mode m holds g_{m+1}
        return self.from_modes(np.einsum("aij,...ja->...ia", self._kernel, src))

    def _radial_derivative(self, fm):
        return np.einsum("ij,...ja->...ia", self._diff, fm)

    def d_zeta(self, f):
        fm = self.to_modes(np.asarray(f, dtype=complex))
        val = 0.5 * (self._radial_derivative(fm) + self.modes * fm / self.rho[:, None])
        return self.from_modes(self._shift(val, self._shift_down))

    def d_zetabar(self, f):
        fm = self.to_modes(np.asarray(f, dtype=complex))
        val = 0.5 * (self._radial_derivative(fm) - self.modes * fm / self.rho[:, None])
        return self.from_modes(self._shift(val, self._shift_up))

    def center_jet(self, f):
        """``(f(0), df/dzeta(0), df/dzetabar(0))`` from the low modes."""
        fm = self.to_modes(np.asarray(f, dtype=complex))
        slot = {m: a for a, m in enumerate(self.modes)}
        c0 = fm[..., slot[0]] @ self._at0
        a = fm[..., slot[1]] @ self._dat0
        b = fm[..., slot[-1]] @ self._dat0
        return c0, a, b

    def evaluate(self, f, points):
        """Spectral interpolant of samples ``f`` at complex ``points`` with ``|points| < r``."""
        points = np.atleast_1d(np.asarray(points, dtype=complex))
        fm = self.to_modes(np.asarray(f, dtype=complex))
        L = _interp_matrix(self.rho, np.abs(points))
        radial = np.einsum("pj,...ja->...pa", L, fm)
        phase = np.exp(1j * np.outer(np.angle(points), self.modes))
        return np.einsum("...pa,pa->...p", radial, phase)


@functools.lru_cache(maxsize=16)
def disc_grid(r: float = 0.1, n_r: int = 32, n_phi: int = 64) -> DiscGrid:
    return DiscGrid(r, n_r, n_phi)


def cauchy_green(g, grid: DiscGrid | None = None):
    grid = grid or disc_grid()
    return grid.cauchy_green(g)


@dataclass
class DiscMap:
    """Samples of a disc ``f: D_r -> C^n``, shape ``(n, n_r, n_phi)``."""

    grid: DiscGrid
    values: np.ndarray
    center: np.ndarray  # f(0), real 2n-vector
    direction: np.ndarray  # d f(0)(d/dxi), complex n-vector
    iterations: int
    increment: float
    cr_residual: float = float("nan")
    history: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def points(self) -> np.ndarray:
        """Real points ``(n_r, n_phi, 2n)``."""
        return to_real(np.moveaxis(self.values, 0, -1))

    def __call__(self, zeta):
        """Complex values ``(len(zeta), n)`` at disc parameters ``zeta``."""
        return np.moveaxis(self.grid.evaluate(self.values, zeta), 0, -1)

    def compose(self, u: ScalarField, zeta):
        return u(to_real(self(zeta)))

    def rows(self):
        """CSV rows ``xi, eta, Re f1, Im f1, ...`` in grid order."""
        zeta = self.grid.zeta.ravel()
        vals = self.values.reshape(self.n, -1)
        cols = [zeta.real, zeta.imag]
        for k in range(self.n):
            cols.extend([vals[k].real, vals[k].imag])
        return np.stack(cols, axis=-1)

    def header(self):
        names = ["xi", "eta"]
        for k in range(1, self.n + 1):
            names.extend([f"re_f{k}", f"im_f{k}"])
        return names


def _complex_vector(V, n):
    V = np.asarray(V)
    if not np.iscomplexobj(V) and V.shape == (2 * n,):
        return to_complex(V.astype(float))
    V = V.astype(complex).reshape(-1)
    if V.shape != (n,):
        raise ValueError(f"direction must be a complex {n}-vector")
    return V


def cr_residual(S, disc: DiscMap) -> float:
    """``max |d f/d eta - J(f) d f/d xi|`` over the grid nodes."""
    S = _structure(S)
    g = disc.grid
    fz = g.d_zeta(disc.values)
    fzb = g.d_zetabar(disc.values)
    d_xi = to_real(np.moveaxis(fz + fzb, 0, -1))
    d_eta = to_real(np.moveaxis(1j * (fz - fzb), 0, -1))
    J = S.J(disc.points())
    return float(np.max(np.abs(d_eta - np.einsum("...ab,...b->...a", J, d_xi))))


def solve_disc(
    S,
    p,
    V,
    r: float = 0.1,
    tol: float = 1e-4,
    n_r: int = 32,
    n_phi: int = 64,
    max_iter: int = 50,
    chart_radius: float = 1.0,
    residual_tol: float | None = None,
) -> DiscMap:
    """J-holomorphic disc through ``p`` with ``df(0)(d/dxi) = V``.

    Iterates ``f -> f0 - T[A(f) conj(df/dzeta)]`` and after every step removes
    the affine discrepancy so that ``f(0) = p`` and ``d_xi f(0) = V``.  Stops
    once the sup-increment is below ``tol / 10`` and the CR residual is below
    ``tol / 4`` or has stopped decreasing; the residual is then checked
    against ``residual_tol`` (default ``tol``).
    """
    S = _structure(S)
    n = S.n
    p = np.asarray(p, dtype=float)
    if p.shape != (2 * n,):
        raise ValueError(f"point must have length {2 * n}")
    pc = to_complex(p)
    V = _complex_vector(V, n)
    grid = disc_grid(float(r), int(n_r), int(n_phi))
    zeta = grid.zeta
    f0 = pc[:, None, None] + V[:, None, None] * zeta
    f = f0
    history = []
    increment = 0.0
    residual = np.inf
    checks = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        pts = to_real(np.moveaxis(f, 0, -1))
        if not np.all(np.isfinite(pts)) or np.max(np.linalg.norm(pts, axis=-1)) > chart_radius:
            raise DomainEscapeError(f"disc left the chart ball of radius {chart_radius} at iteration {iterations}")
        A = S.A(pts)
        if not np.any(A):
            iterations -= 1  # nothing to correct: the affine disc is exact
            break
        if np.max(np.linalg.norm(A, ord=2, axis=(-2, -1))) >= 1:
            raise StructureError("|A| >= 1 on the disc; the CR system is not elliptic there")
        rhs = np.einsum("rpij,jrp->irp", A, np.conj(grid.d_zeta(f)))
        new = f0 - grid.cauchy_green(rhs)
        c0, a, b = grid.center_jet(new)
        new = new - (c0 - pc)[:, None, None] - (a + b - V)[:, None, None] * zeta
        increment = float(np.max(np.abs(new - f)))
        history.append(increment)
        f = new
        if increment < tol / 10:
            # slow contraction leaves derivative errors well above the increment:
            # also wait for the CR residual to reach tol or stall at the grid floor
            # (it may oscillate, so stalling means three checks without progress)
            residual = cr_residual(S, DiscMap(grid, f, p, V, iterations, increment))
            checks.append(residual)
            stalled = len(checks) > 3 and min(checks[-3:]) > 0.95 * min(checks[:-3])
            if residual <= tol / 4 or stalled:
                break
    else:
        raise DiscConvergenceError(
            f"Picard iteration did not converge in {max_iter} steps (last increment {increment:.2e})", increment
        )
    disc = DiscMap(grid, f, p, V, iterations, increment, history=history)
    disc.cr_residual = residual if np.isfinite(residual) else cr_residual(S, disc)
    log.debug("disc: %d iterations, increment %.2e, CR residual %.2e", iterations, increment, disc.cr_residual)
    residual_tol = tol if residual_tol is None else residual_tol
    if disc.cr_residual > residual_tol:
        raise DiscConvergenceError(f"CR residual {disc.cr_residual:.2e} exceeds {residual_tol:.1e}", increment)
    return disc


def _laplacian(disc: DiscMap, u: ScalarField, h: float) -> float:
    pts = np.array([h, -h, 1j * h, -1j * h, 0.0])
    vals = disc.compose(u, pts)
    return float((vals[:4].sum() - 4 * vals[4]) / h**2)


def hessian_via_disc(S, u: ScalarField, p, V, r: float = 0.1, tol: float = 1e-4, **kwargs) -> float:
    """``Laplacian(u o f)(0)`` for the disc through ``p`` tangent to ``V``.

    Five-point stencils at ``h = r/4`` and ``r/8`` combined by one Richardson
    step.  ``V`` may be a complex ``n``-vector or a real tangent vector.
    """
    disc = solve_disc(S, p, V, r=r, tol=tol, **kwargs)
    coarse = _laplacian(disc, u, r / 4)
    fine = _laplacian(disc, u, r / 8)
    return (4 * fine - coarse) / 3


def circle_average(disc: DiscMap, u: ScalarField, radius: float, samples: int = 128) -> float:
    """Mean of ``u o f`` over the circle ``|zeta| = radius``."""
    if not 0 < radius < disc.grid.r:
        raise ValueError("radius must lie inside the disc")
    zeta = radius * np.exp(2j * np.pi * np.arange(samples) / samples)
    return float(np.mean(disc.compose(u, zeta)))

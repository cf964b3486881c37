"""Central finite differences with one level of Richardson extrapolation.

All routines accept a batch of base points ``x`` of shape ``(..., d)`` and
evaluate ``f`` once on the whole stencil, so ``f`` must accept arrays with
arbitrary leading axes and return values with the same leading axes (plus any
trailing value axes).
"""

from __future__ import annotations

import numpy as np

EPS = np.finfo(float).eps
FIRST_ORDER_STEP = EPS ** (1.0 / 3.0)
SECOND_ORDER_STEP = EPS ** (1.0 / 4.0)


def _steps(x, base):
    return base * np.maximum(1.0, np.abs(x))


def _richardson(coarse, fine):
    return (4.0 * fine - coarse) / 3.0


def _first(f, x, h, value_ndim):
    d = x.shape[-1]
    eye = np.eye(d)
    offsets = h[..., None, :] * eye  # (..., d, d): row i is h_i e_i
    pts = np.concatenate([x[..., None, :] + offsets, x[..., None, :] - offsets], axis=-2)
    vals = np.asarray(f(pts))
    tail = (slice(None),) * value_ndim
    plus, minus = vals[(Ellipsis, slice(0, d)) + tail], vals[(Ellipsis, slice(d, None)) + tail]
    scale = (2.0 * h).reshape(h.shape + (1,) * value_ndim)
    return (plus - minus) / scale


def gradient(f, x, step=None):
    """Gradient of a scalar function, shape ``(..., d)``."""
    x = np.asarray(x, dtype=float)
    h = _steps(x, FIRST_ORDER_STEP if step is None else step)
    return _richardson(_first(f, x, h, 0), _first(f, x, h / 2.0, 0))


def jacobian(f, x, step=None, value_ndim=None):
    """Derivatives of an array-valued function.

    Returns shape ``(..., d, *value_shape)``: axis ``-1 - value_ndim`` indexes
    the coordinate being differentiated.
    """
    x = np.asarray(x, dtype=float)
    if value_ndim is None:
        probe = np.asarray(f(x))
        value_ndim = probe.ndim - (x.ndim - 1)
    h = _steps(x, FIRST_ORDER_STEP if step is None else step)
    return _richardson(_first(f, x, h, value_ndim), _first(f, x, h / 2.0, value_ndim))


def _second(f, x, h):
    d = x.shape[-1]
    eye = np.eye(d)
    # stencil: x, x +- 2h_i e_i, x + s h_i e_i + t h_j e_j for i < j
    iu, ju = np.triu_indices(d, 1)
    hi = h[..., :, None] * eye  # (..., d, d)
    base = x[..., None, :]
    diag_p = base + 2 * hi
    diag_m = base - 2 * hi
    a = hi[..., iu, :]
    b = hi[..., ju, :]
    pp, pm, mp, mm = base + a + b, base + a - b, base - a + b, base - a - b
    pts = np.concatenate([x[..., None, :], diag_p, diag_m, pp, pm, mp, mm], axis=-2)
    vals = np.asarray(f(pts))
    m = len(iu)
    f0 = vals[..., 0]
    vp, vm = vals[..., 1 : 1 + d], vals[..., 1 + d : 1 + 2 * d]
    off = 1 + 2 * d
    vpp, vpm = vals[..., off : off + m], vals[..., off + m : off + 2 * m]
    vmp, vmm = vals[..., off + 2 * m : off + 3 * m], vals[..., off + 3 * m :]
    hess = np.empty(x.shape + (d,))
    hess[..., np.arange(d), np.arange(d)] = (vp - 2 * f0[..., None] + vm) / (4 * h**2)
    mixed = (vpp - vpm - vmp + vmm) / (4 * h[..., iu] * h[..., ju])
    hess[..., iu, ju] = mixed
    hess[..., ju, iu] = mixed
    return hess


def hessian(f, x, step=None):
    """Hessian of a scalar function, shape ``(..., d, d)``."""
    x = np.asarray(x, dtype=float)
    h = _steps(x, SECOND_ORDER_STEP if step is None else step)
    return _richardson(_second(f, x, h), _second(f, x, h / 2.0))

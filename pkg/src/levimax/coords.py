"""Real/complex coordinate conventions shared by every module.

A point of the chart is stored as a real vector ``x`` of length ``2n`` and
identified with ``z`` in C^n through ``z_j = x_{2j-1} + i x_{2j}`` (1-based),
i.e. ``z = x[..., 0::2] + 1j * x[..., 1::2]`` in array terms.  Batches are
always leading axes: points have shape ``(..., 2n)``, matrices ``(..., m, m)``.
"""

from __future__ import annotations

import numpy as np


def to_complex(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def to_real(z):
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def j_standard(n: int) -> np.ndarray:
    """Real matrix of multiplication by ``i`` on C^n."""
    block = np.array([[0.0, -1.0], [1.0, 0.0]])
    return np.kron(np.eye(n), block)


def real_matrix(P, Q) -> np.ndarray:
    """Real ``2n x 2n`` matrix of the operator ``v -> P v + Q conj(v)``."""
    P = np.asarray(P, dtype=complex)
    Q = np.asarray(Q, dtype=complex)
    n = P.shape[-1]
    out = np.empty(P.shape[:-2] + (2 * n, 2 * n))
    out[..., 0::2] = np.swapaxes(to_real(np.swapaxes(P + Q, -1, -2)), -1, -2)
    out[..., 1::2] = np.swapaxes(to_real(np.swapaxes(1j * (P - Q), -1, -2)), -1, -2)
    return out


def complex_parts(L):
    """Split a real ``2n x 2n`` operator into ``(P, Q)`` with ``Lv = Pv + Q conj(v)``."""
    L = np.asarray(L, dtype=float)
    # images of e_j and i e_j, as complex column vectors
    img_re = to_complex(np.swapaxes(L[..., 0::2], -1, -2))
    img_im = to_complex(np.swapaxes(L[..., 1::2], -1, -2))
    P = 0.5 * (img_re - 1j * img_im)
    Q = 0.5 * (img_re + 1j * img_im)
    return np.swapaxes(P, -1, -2), np.swapaxes(Q, -1, -2)


def wirtinger_from_jacobian(jac):
    """Wirtinger derivatives ``(d/dz, d/dzbar)`` of a map C^n -> C^m.

    ``jac`` is the real Jacobian with shape ``(..., 2m, 2n)``; the result is a
    pair of complex ``(..., m, n)`` arrays.
    """
    jac = np.asarray(jac, dtype=float)
    dx = jac[..., 0::2, 0::2] + 1j * jac[..., 1::2, 0::2]
    dy = jac[..., 0::2, 1::2] + 1j * jac[..., 1::2, 1::2]
    return 0.5 * (dx - 1j * dy), 0.5 * (dx + 1j * dy)


def jacobian_from_wirtinger(dz, dzbar) -> np.ndarray:
    """Inverse of :func:`wirtinger_from_jacobian`."""
    dz = np.asarray(dz, dtype=complex)
    dzbar = np.asarray(dzbar, dtype=complex)
    dx = dz + dzbar
    dy = 1j * (dz - dzbar)
    m, n = dz.shape[-2:]
    out = np.empty(dz.shape[:-2] + (2 * m, 2 * n))
    out[..., 0::2, 0::2] = dx.real
    out[..., 1::2, 0::2] = dx.imag
    out[..., 0::2, 1::2] = dy.real
    out[..., 1::2, 1::2] = dy.imag
    return out


def hermitian_real_form(H) -> np.ndarray:
    """Symmetric real matrix ``S`` with ``x^T S x = v^* H v`` for ``v = to_complex(x)``."""
    H = np.asarray(H, dtype=complex)
    n = H.shape[-1]
    C = to_complex(np.eye(2 * n))  # row a: complex image of e_a
    form = np.einsum("ak,...kl,bl->...ab", C.conj(), H, C)
    return 0.5 * (form + np.swapaxes(form, -1, -2)).real


def box_grid(n: int, points: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    """Tensor lattice with ``points`` nodes per real axis, shape ``(points**(2n), 2n)``."""
    axis = np.linspace(lo, hi, points)
    mesh = np.meshgrid(*([axis] * (2 * n)), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)

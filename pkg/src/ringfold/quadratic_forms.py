"""Quadratic-form representation of det_Red^2 and delta in the variable h(gamma).

With ``x = h(gamma)`` both bifurcation conditions become quadratic forms in x:

    det_Red^2 = x^T S x,        delta = x^T T x,

where ``S = n^2 h(cos eta) h(cos eta)^T`` (an outer product, rank one) and
``T = A (B^T)^+ C``. The pencil ``R_tau = tau S + sym(T)`` mixes the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .ring_core import as_theta, complementary_products, edge_differences, incidence_matrix


def h_map(x) -> np.ndarray:
    """Complementary products ``h(x)_i = prod_{j != i} x_j`` on the positive orthant."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("h_map is defined on strictly positive vectors")
    return complementary_products(x)


def h_inverse(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.size < 2:
        raise DomainError("h_inverse needs n >= 2")
    if np.any(y <= 0):
        raise DomainError("h_inverse is defined on strictly positive vectors")
    # geometric mean form keeps the product from over/underflowing
    log_scale = np.sum(np.log(y)) / (y.size - 1)
    return np.exp(log_scale - np.log(y))


def complementary_jacobian(c: np.ndarray) -> np.ndarray:
    """``H[i, k] = d h(c)_i / d c_k = prod_{m not in {i, k}} c_m`` (zero diagonal)."""
    c = np.asarray(c, dtype=float)
    n = c.size
    H = np.zeros((n, n))
    for i in range(n):
        rest = np.delete(c, i)
        H[i, np.arange(n) != i] = complementary_products(rest)
    return H


def matrix_B(n: int) -> np.ndarray:
    return incidence_matrix(n)


@lru_cache(maxsize=64)
def _pinv_Bt(n: int) -> np.ndarray:
    M = np.linalg.pinv(incidence_matrix(n).T, rcond=1e-12)
    M.setflags(write=False)
    return M


def pinv_Bt(n: int) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of B^T (rank n-1, nullspace span{1})."""
    return _pinv_Bt(n)


def _trig(theta):
    eta = edge_differences(theta)
    return np.sin(eta), np.cos(eta)


def matrix_A(theta) -> np.ndarray:
    """``A[i, j] = n * d h(cos eta)_i / d theta_j``, so that grad det_Red = A^T h(gamma)."""
    s, c = _trig(theta)
    n = c.size
    H = complementary_jacobian(c)
    # d cos(eta) / d theta = -D_sin B^T
    return -n * (H * s[None, :]) @ incidence_matrix(n).T


def matrix_C(theta) -> np.ndarray:
    """Off-diagonal ``-n tan(eta_i) h(cos eta)_j``, diagonal ``n sum_{k!=i} tan(eta_k) h(cos eta)_i``.

    Evaluated in the equivalent division-free product form, so it is finite
    even where some cos(eta_i) vanishes.
    """
    s, c = _trig(theta)
    n = c.size
    H = complementary_jacobian(c)
    return n * (np.diag(H @ s) - s[:, None] * H)


@dataclass(frozen=True)
class QuadraticPencil:
    S: np.ndarray
    T: np.ndarray
    T_sym: np.ndarray

    @property
    def n(self) -> int:
        return self.S.shape[0]

    def at(self, tau: float) -> np.ndarray:
        return tau * self.S + self.T_sym


def pencil(theta) -> QuadraticPencil:
    theta = as_theta(theta)
    n = theta.size
    _, c = _trig(theta)
    hc = complementary_products(c)
    S = n**2 * np.outer(hc, hc)
    T = matrix_A(theta) @ pinv_Bt(n) @ matrix_C(theta)
    return QuadraticPencil(S=S, T=T, T_sym=0.5 * (T + T.T))


def embed_state(theta, n_tilde: int) -> np.ndarray:
    """Pad ``theta`` with copies of ``theta[0]`` up to length ``n_tilde``.

    The padded edges have zero angle difference, and the pencil of the
    embedded state restricted to the first n indices is ``(n_tilde/n)^2``
    times the original pencil.
    """
    theta = as_theta(theta)
    if n_tilde < theta.size:
        raise DomainError("n_tilde must be >= len(theta)")
    return np.concatenate([theta, np.full(n_tilde - theta.size, theta[0])])

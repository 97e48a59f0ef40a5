"""Ring Kuramoto model quantities: coupling field, Jacobian, reduced determinant.

Conventions: edge ``i`` joins oscillators ``i`` and ``i+1`` (mod n) and carries
coupling ``gamma[i]`` and angle difference ``eta[i] = theta[i+1] - theta[i]``.
The coupling field is signed so that phase-locked solutions satisfy
``sigma * g(theta) = omega`` and stability means all nontrivial Jacobian
eigenvalues are positive.

The elementwise helpers (edge differences, g, J, det_Red) broadcast over
leading axes of ``theta``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import Degenerate, DomainError

ZERO_TOL = 1e-8


@dataclass(frozen=True)
class RingSystem:
    """A ring of ``n`` oscillators with positive edge couplings."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 1 or g.size < 3:
            raise DomainError("ring needs at least 3 oscillators")
        if np.any(g <= 0):
            raise DomainError("couplings must be positive")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def n(self) -> int:
        return self.gamma.size


@dataclass(frozen=True)
class PhaseState:
    theta: np.ndarray

    def __post_init__(self):
        t = np.array(self.theta, dtype=float)
        if t.ndim != 1:
            raise DomainError("theta must be a vector")
        t.setflags(write=False)
        object.__setattr__(self, "theta", t)

    @property
    def n(self) -> int:
        return self.theta.size

    @property
    def eta(self) -> np.ndarray:
        return edge_differences(self.theta)


def as_theta(x) -> np.ndarray:
    return np.asarray(getattr(x, "theta", x), dtype=float)


def as_gamma(x) -> np.ndarray:
    return np.asarray(getattr(x, "gamma", x), dtype=float)


def complementary_products(x: np.ndarray) -> np.ndarray:
    """``out[i] = prod_{j != i} x[j]`` without division (any signs allowed)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    prefix = np.ones_like(x)
    suffix = np.ones_like(x)
    if n > 1:
        prefix[..., 1:] = np.cumprod(x[..., :-1], axis=-1)
        suffix[..., :-1] = np.cumprod(x[..., :0:-1], axis=-1)[..., ::-1]
    return prefix * suffix


def incidence_matrix(n: int) -> np.ndarray:
    """Oriented incidence matrix of the ring: column j is edge (j, j+1)."""
    B = np.zeros((n, n))
    idx = np.arange(n)
    B[idx, idx] = -1.0
    B[(idx + 1) % n, idx] = 1.0
    return B


def edge_differences(theta) -> np.ndarray:
    theta = as_theta(theta)
    return np.roll(theta, -1, axis=-1) - theta


def coupling_field(theta, gamma) -> np.ndarray:
    """``g_i = -gamma_i sin(eta_i) + gamma_{i-1} sin(eta_{i-1})``."""
    eta = edge_differences(theta)
    flux = as_gamma(gamma) * np.sin(eta)
    return np.roll(flux, 1, axis=-1) - flux


def jacobian(theta, gamma) -> np.ndarray:
    """Weighted ring Laplacian with edge weights ``gamma_i cos(eta_i)``."""
    eta = edge_differences(theta)
    w = as_gamma(gamma) * np.cos(eta)
    n = w.shape[-1]
    i = np.arange(n)
    j = (i + 1) % n
    J = np.zeros(w.shape + (n,))
    J[..., i, i] += w
    J[..., j, j] += w
    J[..., i, j] -= w
    J[..., j, i] -= w
    return J


@lru_cache(maxsize=64)
def _helmert(n: int) -> np.ndarray:
    P = np.zeros((n - 1, n))
    for k in range(1, n):
        P[k - 1, :k] = 1.0
        P[k - 1, k] = -float(k)
        P[k - 1] /= np.sqrt(k * (k + 1.0))
    P.setflags(write=False)
    return P


def projection_basis(n: int) -> np.ndarray:
    """Deterministic (n-1) x n matrix with orthonormal rows spanning 1-perp.

    Rows are the Helmert contrasts, i.e. Gram-Schmidt applied to
    e_1 - e_2, e_2 - e_3, ...
    """
    if n < 2:
        raise DomainError("projection basis needs n >= 2")
    return _helmert(n)


def reduced_determinant(theta, gamma) -> float:
    """Closed form ``n * sum_i prod_{j != i} gamma_j cos(eta_j)``."""
    w = as_gamma(gamma) * np.cos(edge_differences(theta))
    out = w.shape[-1] * complementary_products(w).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def reduced_determinant_direct(theta, gamma, P: np.ndarray | None = None) -> float:
    J = jacobian(theta, gamma)
    if P is None:
        P = projection_basis(J.shape[0])
    return float(np.linalg.det(P @ J @ P.T))


def order_parameter(theta) -> float:
    return float(np.abs(np.mean(np.exp(1j * as_theta(theta)))))


@dataclass(frozen=True)
class SpectralSummary:
    eigenvalues: np.ndarray
    n_zero: int
    index_pos: int
    n_neg: int
    det_red: float
    det_red_spectral: float
    degenerate: bool

    @property
    def stable(self) -> bool:
        return self.n_zero == 1 and self.index_pos == self.eigenvalues.size - 1


def eigen_index(theta, gamma, zero_tol: float = ZERO_TOL) -> SpectralSummary:
    """Count positive / zero / negative Jacobian eigenvalues.

    ``degenerate`` is set when some eigenvalue sits within a decade of
    ``zero_tol`` on either side, where the zero/nonzero call is unreliable.
    """
    if zero_tol <= 0:
        raise DomainError("zero_tol must be positive")
    lam = np.linalg.eigvalsh(jacobian(theta, gamma))
    mag = np.abs(lam)
    n_zero = int(np.sum(mag <= zero_tol))
    n_pos = int(np.sum(lam > zero_tol))
    degenerate = bool(np.any((mag > zero_tol / 10) & (mag < zero_tol * 10)))
    # drop the eigenvalue nearest zero (the trivial one along 1)
    det_spec = float(np.prod(np.delete(lam, np.argmin(mag))))
    return SpectralSummary(
        eigenvalues=lam,
        n_zero=n_zero,
        index_pos=n_pos,
        n_neg=lam.size - n_zero - n_pos,
        det_red=reduced_determinant(theta, gamma),
        det_red_spectral=det_spec,
        degenerate=degenerate,
    )


def index_sign_rule(theta, gamma, tol: float = 1e-9) -> int:
    """Positive-eigenvalue count of J from edge-weight signs alone.

    ``#{i : w_i > 0} - [sum_i 1/w_i > 0]`` with ``w = gamma cos(eta)``.
    """
    w = as_gamma(gamma) * np.cos(edge_differences(theta))
    if np.any(np.abs(np.cos(edge_differences(theta))) <= tol):
        raise Degenerate("an edge has cos(eta) = 0")
    recip = float(np.sum(1.0 / w))
    if abs(recip) <= tol:
        raise Degenerate("sum of reciprocal edge weights vanishes")
    return int(np.sum(w > 0)) - (1 if recip > 0 else 0)


def n_plus(values) -> int:
    return int(np.sum(np.asarray(values) > 0))

"""Branches of phase-locked solutions parametrized by a flow variable ``s``.

Along ``dtheta/ds = v(theta)`` with ``d(ln sigma)/ds = det_Red(theta)`` the
quantity ``sigma(s) g(theta(s)) - omega`` is conserved, so every point of the
integrated curve is a phase-locked solution for coupling ``sigma(s)``.
Folds of the branch (where sigma turns around) are the sign changes of
det_Red, and their direction is the sign of ``delta = n . v``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import DomainError, StepFailure
from .quadratic_forms import matrix_A
from .ring_core import (
    ZERO_TOL,
    as_gamma,
    as_theta,
    complementary_products,
    coupling_field,
    jacobian,
    projection_basis,
    reduced_determinant,
)

log = logging.getLogger(__name__)

SIGMA_LOCAL_MAX = "sigma_local_max"
SIGMA_LOCAL_MIN = "sigma_local_min"
DEGENERATE_FLAT = "degenerate_flat"


def adjugate(M: np.ndarray) -> np.ndarray:
    """Adjugate through the SVD; well defined for singular M."""
    U, sv, Vt = np.linalg.svd(M)
    d = np.linalg.det(U) * np.linalg.det(Vt)
    return d * (Vt.T * complementary_products(sv)) @ U.T


def tangent_field(theta, gamma) -> np.ndarray:
    """``v = -P^T adj(P J P^T) P g``; satisfies ``J v = -det_Red g``."""
    theta, gamma = as_theta(theta), as_gamma(gamma)
    P = projection_basis(theta.size)
    M = P @ jacobian(theta, gamma) @ P.T
    return -P.T @ (adjugate(M) @ (P @ coupling_field(theta, gamma)))


def normal_field(theta, gamma) -> np.ndarray:
    """Gradient of det_Red with respect to theta."""
    return matrix_A(theta).T @ complementary_products(as_gamma(gamma))


def delta(theta, gamma) -> float:
    return float(normal_field(theta, gamma) @ tangent_field(theta, gamma))


def _grad(f, x: np.ndarray, step: float) -> np.ndarray:
    out = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = step
        out[j] = (f(x + e) - f(x - e)) / (2 * step)
    return out


def contact_coefficients(theta, gamma, k_max: int = 2, steps=(1e-5, 1e-4)) -> np.ndarray:
    """Derivatives ``a_k`` of det_Red along the flow: a_0 = det_Red, a_{k+1} = <v, grad a_k>.

    a_0 and a_1 (= delta) are analytic; a_2 and a_3 use central differences
    with the step sizes in ``steps``.
    """
    if not 0 <= k_max <= 3:
        raise DomainError("k_max must be in 0..3")
    theta, gamma = as_theta(theta), as_gamma(gamma)
    v = tangent_field(theta, gamma)
    out = [reduced_determinant(theta, gamma)]
    if k_max >= 1:
        out.append(float(normal_field(theta, gamma) @ v))
    if k_max >= 2:
        a2 = lambda t: float(tangent_field(t, gamma) @ _grad(lambda u: delta(u, gamma), t, steps[0]))
        out.append(a2(theta))
        if k_max == 3:
            out.append(float(v @ _grad(a2, theta, steps[1])))
    return np.array(out)


@dataclass(frozen=True)
class BranchSample:
    s: float
    theta: np.ndarray
    sigma: float
    det_red: float
    index_pos: int | None  # None where the eigenvalue count is degenerate
    r: float
    residual: float


@dataclass(frozen=True)
class BifurcationEvent:
    s_star: float
    theta_star: np.ndarray
    sigma_star: float
    kind: str
    delta_at_event: float
    det_red_at_event: float


class Branch(Sequence[BranchSample]):
    """Samples of one integrated branch, ordered by s, plus the fixed parameters."""

    def __init__(self, samples: list[BranchSample], gamma: np.ndarray, omega: np.ndarray, tol: float):
        self.samples = samples
        self.gamma = gamma
        self.omega = omega
        self.tol = tol

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, i):
        return self.samples[i]

    def __iter__(self) -> Iterator[BranchSample]:
        return iter(self.samples)

    def column(self, name: str) -> np.ndarray:
        if name == "theta":
            return np.array([b.theta for b in self.samples])
        if name == "index_pos":
            return np.array([-1 if b.index_pos is None else b.index_pos for b in self.samples])
        return np.array([getattr(b, name) for b in self.samples], dtype=float)


def _rhs(gamma):
    def f(_s, y):
        th = y[:-1]
        return np.append(tangent_field(th, gamma), reduced_determinant(th, gamma))
    return f


def _integrate(y0, s0, s1, gamma, tol, s_eval=None, sigma_max=None):
    events = None
    if sigma_max is not None:
        cap = np.log(sigma_max)
        events = lambda _s, y: y[-1] - cap
        events.terminal = True
    sol = solve_ivp(
        _rhs(gamma), (s0, s1), y0, method="RK45", rtol=tol, atol=tol, t_eval=s_eval, events=events
    )
    if sol.status < 0:
        last = float(sol.t[-1]) if sol.t.size else s0
        raise StepFailure(f"integration failed: {sol.message}", last_s=last)
    return sol


def correct_to_branch(theta, sigma: float, gamma, omega, tol: float, max_iter: int = 8) -> np.ndarray:
    """Gauss-Newton corrector for ``sigma g(theta) = omega`` at fixed sigma.

    Uses the minimum-norm step on 1-perp, so it stays well defined at folds.
    """
    theta = np.array(theta, dtype=float)
    P = projection_basis(theta.size)
    for _ in range(max_iter):
        r = sigma * coupling_field(theta, gamma) - omega
        if np.linalg.norm(r) <= tol:
            break
        M = sigma * P @ jacobian(theta, gamma) @ P.T
        step, *_ = np.linalg.lstsq(M, P @ r, rcond=1e-12)
        theta -= P.T @ step
    return theta


def integrate_branch(
    theta0,
    gamma,
    sigma0: float = 1.0,
    s_min: float = -3.0,
    s_max: float = 3.0,
    tol: float = 1e-10,
    samples_per_unit: int = 2000,
    zero_tol: float = ZERO_TOL,
    correct: bool = True,
    sigma_max: float | None = 1e4,
) -> Branch:
    """Integrate the branch through ``theta0`` with ``omega = sigma0 g(theta0)``.

    Where sigma grows large the fixed-point residual picks up sigma times the
    integration error in theta; with ``correct`` each output sample whose
    residual exceeds ``tol`` is snapped back by :func:`correct_to_branch`.
    Integration in either direction stops once sigma exceeds ``sigma_max``
    (absolute rounding in eta, about 1e-15, times sigma bounds the residual
    from below).
    """
    if sigma0 <= 0:
        raise DomainError("sigma0 must be positive")
    if tol <= 0:
        raise DomainError("tol must be positive")
    if not s_min <= 0 <= s_max:
        raise DomainError("need s_min <= 0 <= s_max")
    if sigma_max is not None and sigma_max <= sigma0:
        raise DomainError("sigma_max must exceed sigma0")
    theta0, gamma = as_theta(theta0), as_gamma(gamma)
    omega = sigma0 * coupling_field(theta0, gamma)
    y0 = np.append(theta0, np.log(sigma0))

    pieces_s = [np.array([0.0])]
    pieces_y = [y0[:, None]]
    for end in (s_max, s_min):
        if end == 0:
            continue
        m = max(int(np.ceil(abs(end) * samples_per_unit)), 1)
        grid = np.linspace(0.0, end, m + 1)[1:]
        sol = _integrate(y0, 0.0, end, gamma, tol, s_eval=grid, sigma_max=sigma_max)
        pieces_s.append(sol.t)
        pieces_y.append(sol.y)
    order = np.argsort(np.concatenate(pieces_s))
    s_all = np.concatenate(pieces_s)[order]
    y_all = np.concatenate(pieces_y, axis=1)[:, order]
    thetas = y_all[:-1].T.copy()
    sigmas = np.exp(y_all[-1])

    resid = np.linalg.norm(sigmas[:, None] * coupling_field(thetas, gamma) - omega, axis=1)
    if correct:
        for k in np.flatnonzero(resid > tol):
            thetas[k] = correct_to_branch(thetas[k], sigmas[k], gamma, omega, tol)
            resid[k] = np.linalg.norm(sigmas[k] * coupling_field(thetas[k], gamma) - omega)

    lam = np.linalg.eigvalsh(jacobian(thetas, gamma))
    mag = np.abs(lam)
    index_pos = np.sum(lam > zero_tol, axis=1)
    degenerate = np.any((mag > zero_tol / 10) & (mag < zero_tol * 10), axis=1)
    dets = reduced_determinant(thetas, gamma)
    r = np.abs(np.mean(np.exp(1j * thetas), axis=1))

    samples = [
        BranchSample(
            s=float(s_all[k]),
            theta=thetas[k],
            sigma=float(sigmas[k]),
            det_red=float(dets[k]),
            index_pos=None if degenerate[k] else int(index_pos[k]),
            r=float(r[k]),
            residual=float(resid[k]),
        )
        for k in range(s_all.size)
    ]
    return Branch(samples, gamma, omega, tol)


def _state_at(sample: BranchSample, s: float, gamma, tol: float = 1e-13):
    if s == sample.s:
        return sample.theta, sample.sigma
    y0 = np.append(sample.theta, np.log(sample.sigma))
    sol = _integrate(y0, sample.s, s, gamma, tol)
    y = sol.y[:, -1]
    return y[:-1], float(np.exp(y[-1]))


def _flat_scale(branch: Branch, gamma, max_points: int = 200) -> float:
    stride = max(len(branch) // max_points, 1)
    vals = [abs(delta(b.theta, gamma)) for b in branch.samples[::stride]]
    return max(vals) if vals else 0.0


def detect_bifurcations(
    branch: Branch,
    gamma=None,
    event_tol: float = 1e-9,
    flat_tol: float | None = None,
) -> list[BifurcationEvent]:
    """One event per sign change of det_Red between neighbouring samples.

    Each crossing is refined by root bracketing in s, re-integrating from the
    left sample so the refined point stays on the branch.
    """
    gamma = branch.gamma if gamma is None else as_gamma(gamma)
    if flat_tol is None:
        flat_tol = 1e-3 * _flat_scale(branch, gamma)
    events = []
    samples = branch.samples
    for k in range(len(samples) - 1):
        a, b = samples[k], samples[k + 1]
        if a.det_red == 0.0 and k > 0:
            continue  # already reported as the right end of the previous pair
        if a.det_red * b.det_red > 0:
            continue
        if b.det_red == 0.0 and a.det_red != 0.0:
            s_star = b.s
        elif a.det_red == 0.0:
            s_star = a.s
        else:
            f = lambda s: reduced_determinant(_state_at(a, s, gamma)[0], gamma)
            fb = f(b.s)
            if a.det_red * fb < 0:
                s_star = brentq(f, a.s, b.s, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
            else:
                # re-integration lost the bracket (crossing at rounding level)
                s_star = a.s if abs(a.det_red) <= abs(fb) else b.s
        theta_star, sigma_star = _state_at(a, s_star, gamma)
        det_star = reduced_determinant(theta_star, gamma)
        if abs(det_star) > event_tol:
            log.warning("event at s=%.6g refined only to |det_red|=%.3g", s_star, abs(det_star))
        d = delta(theta_star, gamma)
        if abs(d) <= flat_tol:
            kind = DEGENERATE_FLAT
        elif d < 0:
            kind = SIGMA_LOCAL_MAX
        else:
            kind = SIGMA_LOCAL_MIN
        events.append(BifurcationEvent(s_star, theta_star, sigma_star, kind, d, det_star))
    return events

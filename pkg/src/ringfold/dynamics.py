"""Time integration of the ring model and search for phase-locked states.

In the frame rotating with the mean frequency the model reads
``dtheta/dt = omega - sigma g(theta, gamma)`` (g carries the sign that makes
stable states have a positive-semidefinite Jacobian).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, StepFailure
from .ring_core import (
    as_gamma,
    as_theta,
    coupling_field,
    eigen_index,
    jacobian,
    projection_basis,
)

NEWTON_TOL = 1e-10
DEDUPE_TOL = 1e-6


def wrap(x):
    """Angles mapped to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)


def center(omega) -> tuple[np.ndarray, float]:
    omega = np.asarray(omega, dtype=float)
    mean = float(omega.mean())
    return omega - mean, mean


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator so seeds map to reproducible streams."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), n)
    r_trace: np.ndarray
    mean_frequency: float = 0.0  # rotation removed by centering omega


def simulate(omega, gamma, sigma: float, theta_init, t_end: float, tol: float = 1e-9, n_out: int = 201) -> Trajectory:
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    if t_end <= 0:
        raise DomainError("t_end must be positive")
    gamma = as_gamma(gamma)
    om, mean = center(omega)
    rhs = lambda _t, th: om - sigma * coupling_field(th, gamma)
    times = np.linspace(0.0, t_end, n_out)
    sol = solve_ivp(rhs, (0.0, t_end), as_theta(theta_init), method="RK45", rtol=tol, atol=tol, t_eval=times)
    if sol.status != 0:
        raise StepFailure(f"time integration failed: {sol.message}", last_s=float(sol.t[-1]) if sol.t.size else 0.0)
    states = sol.y.T
    r = np.abs(np.mean(np.exp(1j * states), axis=1))
    return Trajectory(sol.t, states, r, mean)


@dataclass(frozen=True)
class LockedState:
    theta: np.ndarray  # representative with theta[-1] = 0, angles in (-pi, pi]
    sigma: float
    index_pos: int
    stable: bool
    residual: float
    r: float


def canonical(theta) -> np.ndarray:
    theta = as_theta(theta)
    return wrap(theta - theta[..., -1:])


def locked_state(theta, sigma: float, omega, gamma, zero_tol: float = 1e-8) -> LockedState:
    gamma = as_gamma(gamma)
    om, _ = center(omega)
    rep = canonical(theta)
    spec = eigen_index(rep, gamma, zero_tol)
    n = rep.size
    return LockedState(
        theta=rep,
        sigma=float(sigma),
        index_pos=spec.index_pos,
        stable=bool(spec.index_pos == n - 1),
        residual=float(np.linalg.norm(sigma * coupling_field(rep, gamma) - om)),
        r=float(np.abs(np.mean(np.exp(1j * rep)))),
    )


def _newton_batch(theta, sigma, om, gamma, tol, max_iter, min_damping=2.0**-20):
    """Damped Newton on ``P (sigma g - omega)`` for a stack of starting points."""
    n = theta.shape[1]
    P = projection_basis(n)
    theta = theta.copy()
    F = sigma * coupling_field(theta, gamma) - om
    norm = np.linalg.norm(F, axis=1)
    active = norm > tol
    alive = np.ones(len(theta), bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active & alive)
        if idx.size == 0:
            break
        M = sigma * P @ jacobian(theta[idx], gamma) @ P.T
        rhs = (F[idx] @ P.T)[..., None]
        step = (np.linalg.pinv(M, rcond=1e-13) @ rhs)[..., 0] @ P
        t = np.ones(idx.size)
        pending = np.ones(idx.size, bool)
        while pending.any():
            k = np.flatnonzero(pending)
            trial = theta[idx[k]] - t[k, None] * step[k]
            Ft = sigma * coupling_field(trial, gamma) - om
            nt = np.linalg.norm(Ft, axis=1)
            ok = nt < norm[idx[k]]
            acc = k[ok]
            theta[idx[acc]] = trial[ok]
            F[idx[acc]] = Ft[ok]
            norm[idx[acc]] = nt[ok]
            pending[acc] = False
            t[k[~ok]] /= 2
            dead = k[~ok][t[k[~ok]] < min_damping]
            alive[idx[dead]] = False
            pending[dead] = False
        active = norm > tol
    return theta, norm


def find_locked_states(
    omega,
    gamma,
    sigma: float,
    n_seeds: int = 256,
    seed: int = 0,
    newton_tol: float = NEWTON_TOL,
    dedupe_tol: float = DEDUPE_TOL,
    max_iter: int = 100,
    threads: int = 1,
) -> list[LockedState]:
    """Phase-locked states reached by damped Newton from uniform random angles.

    Results are deduplicated on canonical representatives and sorted by
    decreasing order parameter; the seed-to-result map does not depend on
    ``threads``.
    """
    if n_seeds < 1:
        raise DomainError("n_seeds must be >= 1")
    if sigma <= 0:
        raise DomainError("sigma must be positive")
    gamma = as_gamma(gamma)
    om, _ = center(omega)
    n = gamma.size
    starts = make_rng(seed).uniform(0.0, 2 * np.pi, size=(n_seeds, n))

    chunks = np.array_split(np.arange(n_seeds), max(1, min(threads, n_seeds)))
    work = lambda ids: _newton_batch(starts[ids], sigma, om, gamma, newton_tol, max_iter)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    thetas = np.concatenate([p[0] for p in parts])
    norms = np.concatenate([p[1] for p in parts])

    found: list[np.ndarray] = []
    for th in thetas[norms <= newton_tol]:
        rep = canonical(th)
        if all(np.max(np.abs(wrap(rep - f))) >= dedupe_tol for f in found):
            found.append(rep)
    states = [locked_state(th, sigma, om, gamma) for th in found]
    return sorted(states, key=lambda s: (-s.r, tuple(s.theta)))


def translation_distance(a, b) -> float:
    """Distance between angle vectors modulo common rotation and 2 pi."""
    d = wrap(as_theta(a) - as_theta(b))
    return float(np.linalg.norm(wrap(d - np.angle(np.mean(np.exp(1j * d))))))


def stability_probe(
    locked: LockedState,
    omega,
    gamma,
    n_perturb: int = 8,
    eps: float = 1e-3,
    t_end: float | None = None,
    seed: int = 0,
) -> float:
    """Fraction of mean-zero perturbations of size ``eps`` that return within ``eps/10``.

    ``t_end`` defaults to ten decay times ``1 / (sigma |lambda|)`` of the
    slowest nontrivial Jacobian mode.
    """
    if n_perturb == 0:
        return 1.0
    if eps <= 0:
        raise DomainError("eps must be positive")
    gamma = as_gamma(gamma)
    if t_end is None:
        lam = np.abs(np.linalg.eigvalsh(jacobian(locked.theta, gamma)))
        slow = np.sort(lam)[1]
        t_end = min(10.0 / (locked.sigma * max(slow, 1e-12)), 1e5)
    rng = make_rng(seed)
    back = 0
    for _ in range(n_perturb):
        d = rng.normal(size=locked.theta.size)
        d -= d.mean()
        d *= eps / np.linalg.norm(d)
        traj = simulate(omega, gamma, locked.sigma, locked.theta + d, t_end, n_out=2)
        if translation_distance(traj.states[-1], locked.theta) <= eps / 10:
            back += 1
    return back / n_perturb

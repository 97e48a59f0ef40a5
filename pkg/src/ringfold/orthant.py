"""Minimization of quadratic forms over the nonnegative orthant and the
large-tau classification of the pencil ``R_tau = tau S + sym(T)``.

The minimum of ``x^T R x / ||x||_1^2`` over ``x >= 0`` is attained on some
face ``{x_i > 0 : i in I}``; on that face the minimizer is proportional to
``R_I^{-1} 1`` and the value is ``det(R_I) / sum_i det(R_{I,i})`` where
``R_{I,i}`` is ``R_I`` with row ``i`` replaced by ones.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DegreeViolation, DomainError, EmptyFeasibleFamily, NoFeasibleSubset
from .quadratic_forms import QuadraticPencil, pencil

log = logging.getLogger(__name__)

MAX_N = 20
SIGN_TOL = 1e-9
DEGREE_TOL = 1e-8


def _subsets(n: int, sizes=None):
    sizes = range(1, n + 1) if sizes is None else sizes
    for m in sizes:
        yield from itertools.combinations(range(n), m)


def _ones_replaced(block: np.ndarray) -> np.ndarray:
    """Stack of copies of ``block`` (..., m, m) with row k set to ones, shape (..., m, m, m)."""
    m = block.shape[-1]
    out = np.repeat(block[..., None, :, :], m, axis=-3)
    idx = np.arange(m)
    out[..., idx, idx, :] = 1.0
    return out


def submatrix_dets(R, I) -> tuple[float, dict[int, float]]:
    """``det(R_I)`` and ``{i: det(R_{I,i})}`` for an index set I (0-based)."""
    I = tuple(sorted(I))
    if not I:
        raise DomainError("index set must be nonempty")
    block = np.asarray(R, dtype=float)[np.ix_(I, I)]
    ones = np.linalg.det(_ones_replaced(block))
    return float(np.linalg.det(block)), {i: float(d) for i, d in zip(I, ones)}


@dataclass(frozen=True)
class OrthantMinResult:
    value: float
    minimizer: np.ndarray
    witness_subset: tuple[int, ...]


def orthant_min(R, ones_tol: float = 1e-12) -> OrthantMinResult:
    """Exact ``min_{x >= 0} x^T R x / ||x||_1^2`` by enumerating all faces.

    A face I qualifies when every ones-replaced determinant exceeds
    ``ones_tol * max|R|^(|I|-1)``.
    """
    R = np.asarray(R, dtype=float)
    n = R.shape[0]
    if R.shape != (n, n):
        raise DomainError("R must be square")
    if n > MAX_N:
        raise DomainError(f"orthant_min enumerates 2^n faces; n = {n} exceeds {MAX_N}")
    R = 0.5 * (R + R.T)
    scale = max(float(np.max(np.abs(R))), 1.0)
    best = None
    for m in range(1, n + 1):
        subsets = list(_subsets(n, [m]))
        idx = np.array(subsets)
        blocks = R[idx[:, :, None], idx[:, None, :]]
        with np.errstate(divide="ignore", invalid="ignore"):  # singular faces give det = 0
            dets = np.linalg.det(blocks)
            ones = np.linalg.det(_ones_replaced(blocks))
        thresh = ones_tol * scale ** (m - 1)
        ok = np.all(ones > thresh, axis=1)
        for k in np.flatnonzero(ok):
            val = dets[k] / ones[k].sum()
            if best is None or val < best[0] - 1e-15 * max(1.0, abs(best[0])):
                best = (float(val), subsets[k], ones[k])
    if best is None:
        raise NoFeasibleSubset("no face has all ones-replaced determinants positive")
    value, I, ones = best
    x = np.zeros(n)
    x[list(I)] = ones / ones.sum()
    return OrthantMinResult(value=value, minimizer=x, witness_subset=tuple(I))


@dataclass(frozen=True)
class AffinePencil:
    """``d(tau) = slope * tau + intercept``."""

    slope: float
    intercept: float

    def __call__(self, tau):
        return self.slope * tau + self.intercept

    @classmethod
    def from_samples(cls, d0: float, d1: float, d2: float, tol: float = DEGREE_TOL, floor: float = 0.0):
        """Fit from values at tau = 0, 1, 2 and check the third point is collinear."""
        slope = d1 - d0
        resid = d2 - (d0 + 2 * slope)
        if abs(resid) > tol * max(abs(d0), abs(d1), abs(d2)) + floor:
            raise DegreeViolation(f"pencil is not affine in tau (residual {resid:.3g})")
        return cls(float(slope), float(d0))

    def eventual_sign(self, tol: float) -> int:
        if abs(self.slope) > tol:
            return 1 if self.slope > 0 else -1
        if abs(self.intercept) > tol:
            return 1 if self.intercept > 0 else -1
        return 0


@dataclass(frozen=True)
class SubsetReport:
    subset: tuple[int, ...]
    det_pencil: AffinePencil
    ones_pencils: dict[int, AffinePencil] = field(repr=False)
    feasible: bool
    p: int | None  # None outside the feasible family
    q: int | None


def _limit_sign(num: AffinePencil, den: AffinePencil, tol: float) -> int:
    """Sign of ``lim_{tau -> inf} num(tau) / den(tau)`` given den eventually positive."""
    if abs(den.slope) > tol:
        # ratio tends to num.slope / den.slope
        if abs(num.slope) > tol:
            return 1 if num.slope > 0 else -1
        return 0
    # den tends to a positive constant: the ratio follows num
    return num.eventual_sign(tol)


def _subset_pencils(pen: QuadraticPencil, subsets: list[tuple[int, ...]]):
    """Affine coefficients of det(R_tau)_I and det(R_tau)_{I,i} for subsets of one size."""
    idx = np.array(subsets)
    R = np.stack([pen.at(t) for t in (0.0, 1.0, 2.0)])  # (3, n, n)
    blocks = R[:, idx[:, :, None], idx[:, None, :]]  # (3, k, m, m)
    dets = np.linalg.det(blocks)  # (3, k)
    ones = np.linalg.det(_ones_replaced(blocks))  # (3, k, m)
    m = idx.shape[1]
    norm = np.max(np.abs(blocks[2]), axis=(1, 2))
    floor_det = 1e3 * np.finfo(float).eps * (m * np.maximum(norm, 1e-300)) ** m
    floor_ones = 1e3 * np.finfo(float).eps * (m * np.maximum(norm, 1.0)) ** m
    return dets, ones, floor_det, floor_ones


def classify_subsets(state, sign_tol: float = SIGN_TOL) -> list[SubsetReport]:
    """Pencil coefficients, feasibility and the limit signs p, q for every nonempty subset.

    ``sign_tol`` is relative to the largest pencil coefficient over all subsets.
    """
    pen = state if isinstance(state, QuadraticPencil) else pencil(state)
    n = pen.n
    if n > MAX_N:
        raise DomainError(f"subset enumeration is exponential; n = {n} exceeds {MAX_N}")
    if n > 14:
        log.warning("classifying %d subsets; this is slow", 2**n - 1)

    raw = []
    coef_max = 0.0
    for m in range(1, n + 1):
        subsets = list(_subsets(n, [m]))
        dets, ones, fd, fo = _subset_pencils(pen, subsets)
        for k, I in enumerate(subsets):
            dp = AffinePencil.from_samples(*dets[:, k], floor=fd[k])
            op = {i: AffinePencil.from_samples(*ones[:, k, j], floor=fo[k]) for j, i in enumerate(I)}
            raw.append((I, dp, op))
            coef_max = max(coef_max, abs(dp.slope), abs(dp.intercept))
            for o in op.values():
                coef_max = max(coef_max, abs(o.slope), abs(o.intercept))
    tol = sign_tol * coef_max

    reports = []
    for I, dp, op in raw:
        feasible = all(o.eventual_sign(tol) > 0 for o in op.values())
        p = q = None
        if feasible:
            den = AffinePencil(sum(o.slope for o in op.values()), sum(o.intercept for o in op.values()))
            p = _limit_sign(dp, den, tol)
            q = dp.eventual_sign(tol)
        reports.append(SubsetReport(I, dp, op, feasible, p, q))
    return reports


def _family_min(reports: list[SubsetReport], key: str) -> int:
    vals = [getattr(r, key) for r in reports if r.feasible]
    if not vals:
        raise EmptyFeasibleFamily("no subset is feasible for large tau")
    return min(vals)


def delta_p(state, sign_tol: float = SIGN_TOL, reports=None) -> int:
    return _family_min(reports if reports is not None else classify_subsets(state, sign_tol), "p")


def delta_q(state, sign_tol: float = SIGN_TOL, reports=None) -> int:
    return _family_min(reports if reports is not None else classify_subsets(state, sign_tol), "q")


def ell_limit(state, I, convention: str = "normalized") -> float:
    """Large-tau slope ``lim det(R_tau)_I / tau`` for a 0-based index set I.

    ``convention="pencil"`` gives the slope for ``R_tau = tau S + sym(T)``.
    ``convention="normalized"`` rescales to the pencil ``tau h h^T - sym(T)/n``
    (``h = h(cos eta)``), which divides the slope by ``n^2 (-n)^(|I|-1)``.
    """
    if convention not in ("normalized", "pencil"):
        raise DomainError("convention must be 'normalized' or 'pencil'")
    pen = state if isinstance(state, QuadraticPencil) else pencil(state)
    I = tuple(sorted(I))
    if not I or I[-1] >= pen.n:
        raise DomainError("index set out of range")
    dets = [np.linalg.det(pen.at(t)[np.ix_(I, I)]) for t in (0.0, 1.0, 2.0)]
    m = len(I)
    block = np.max(np.abs(pen.at(2.0)[np.ix_(I, I)]))
    floor = 1e3 * np.finfo(float).eps * (m * max(block, 1e-300)) ** m
    slope = AffinePencil.from_samples(*dets, floor=floor).slope
    if convention == "pencil":
        return float(slope)
    n = pen.n
    return float(slope / (n**2 * (-n) ** (m - 1)))

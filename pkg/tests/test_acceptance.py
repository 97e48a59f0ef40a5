"""One test per acceptance criterion; each prints a PASS/FAIL line."""

import time

import numpy as np
import pytest

from ringfold import construct as cons
from ringfold.dynamics import find_locked_states, locked_state, stability_probe, translation_distance
from ringfold.errors import Degenerate
from ringfold.flow import (
    SIGMA_LOCAL_MAX,
    contact_coefficients,
    delta,
    detect_bifurcations,
    integrate_branch,
    tangent_field,
)
from ringfold.orthant import delta_p, ell_limit, orthant_min
from ringfold.quadratic_forms import embed_state, h_inverse, h_map, matrix_B, matrix_C, pencil
from ringfold.ring_core import eigen_index, index_sign_rule, reduced_determinant, reduced_determinant_direct
from ringfold.scan import density_scan

from conftest import GAMMA3, GAMMA5, THETA3, THETA5, random_state
from test_orthant import THETA_ELL, brute_min, ell1, ell12, ell123


class Clauses:
    def __init__(self):
        self.items = []

    def check(self, name, ok, value=""):
        self.items.append((name, bool(ok), value))

    @property
    def passed(self):
        return all(ok for _, ok, _ in self.items)

    def detail(self):
        return "; ".join(f"{n}={'ok' if ok else 'FAIL'}{f' [{v}]' if v else ''}" for n, ok, v in self.items)


def _finish(record, number, c, t0, limit):
    dt = time.perf_counter() - t0
    c.check(f"runtime<{limit}s", dt < limit, f"{dt:.1f}s")
    record(number, c.passed, c.detail(), dt)
    assert c.passed, c.detail()


def test_acceptance_1_delta_fixtures(record_acceptance):
    t0 = time.perf_counter()
    c = Clauses()
    d3, d5 = delta(THETA3, GAMMA3), delta(THETA5, GAMMA5)
    c.check("delta(generic seed)", abs(d3 - -0.37347) <= 1e-3, f"{d3:.6f}")
    c.check("delta(stable seed)", abs(d5 - -0.70959) <= 1e-3, f"{d5:.6f}")
    _finish(record_acceptance, 1, c, t0, 1)


def test_acceptance_2_ell_values(record_acceptance, rng):
    t0 = time.perf_counter()
    c = Clauses()
    for I, want in [((0,), 1 / 16), ((0, 1), -27 / 128), ((0, 1, 2), 2187 / 4096)]:
        got = ell_limit(THETA_ELL, I)
        c.check(f"ell{I}", abs(got - want) <= 1e-12, f"{got:.15g}")
    worst = 0.0
    for _ in range(100):
        th = rng.uniform(-np.pi, np.pi, 3)
        for I, f in [((0,), ell1), ((0, 1), ell12), ((0, 1, 2), ell123)]:
            worst = max(worst, abs(ell_limit(th, I) - f(th)))
    c.check("polynomials", worst <= 1e-10, f"max err {worst:.2e}")
    _finish(record_acceptance, 2, c, t0, 1)


def test_acceptance_3_existence_family(record_acceptance):
    t0 = time.perf_counter()
    c = Clauses()
    cases = [(n, "generic") for n in range(3, 11)] + [(n, "stable") for n in range(5, 11)]
    bad_dp, bad_verify = [], []
    for n, fam in cases:
        if delta_p(cons.seed_theta(n, fam)) != -1:
            bad_dp.append((n, fam))
        rep = cons.verify_certificate(cons.construct(n, fam), cert_tol=1e-8)
        if not rep.passed:
            bad_verify.append((n, fam, rep.failures))
    c.check("delta_p=-1", not bad_dp, str(bad_dp) if bad_dp else f"{len(cases)} seeds")
    c.check("construct->verify", not bad_verify, str(bad_verify) if bad_verify else f"{len(cases)} certificates")
    _finish(record_acceptance, 3, c, t0, 30)


def _crossings(s, sigma, level):
    """s values where the sampled sigma(s) crosses ``level`` (linear interpolation)."""
    out = []
    for k in np.flatnonzero((sigma[:-1] - level) * (sigma[1:] - level) < 0):
        w = (level - sigma[k]) / (sigma[k + 1] - sigma[k])
        out.append(s[k] + w * (s[k + 1] - s[k]))
    return out


def test_acceptance_4_fold_reproduction(record_acceptance):
    t0 = time.perf_counter()
    c = Clauses()
    cert = cons.certificate_from(THETA5, GAMMA5, family="stable")
    br = integrate_branch(cert.theta0, cert.gamma, s_min=-1, s_max=1)
    events = detect_bifurcations(br)
    tops = [e for e in events if e.kind == SIGMA_LOCAL_MAX]
    top = min(tops, key=lambda e: abs(e.s_star)) if tops else None
    c.check("sigma_local_max in [0.99,1.01]", top is not None and 0.99 <= top.sigma_star <= 1.01,
            f"{top.sigma_star:.6f}" if top else "none")

    om = cons.construct(5, "stable").omega
    c.check("omega", np.max(np.abs(om - [-0.69, 0.69, 0, 0, 0])) <= 0.01, np.array2string(om, precision=3))

    low = find_locked_states(cert.omega, cert.gamma, 0.95, n_seeds=256)
    n_low = sum(s.stable for s in low)
    c.check("sigma=0.95 >=2 stable", n_low >= 2, f"{n_low} stable")

    # colliding pair: the two branch points at sigma = 0.98 on either side of the fold
    s, sig = br.column("s"), br.column("sigma")
    xs = np.array(_crossings(s, sig, 0.98))
    near = [xs[xs < 0].max(), xs[xs > 0].min()] if (xs < 0).any() and (xs > 0).any() else []
    pair = [br[int(np.argmin(np.abs(s - x)))].theta for x in near]
    pair_d = max(translation_distance(p, cert.theta0) for p in pair)
    mid = find_locked_states(cert.omega, cert.gamma, 0.98, n_seeds=256)
    mid_d = sorted(translation_distance(m.theta, cert.theta0) for m in mid)
    others = [d for d in mid_d if d > pair_d + 1e-6]
    # ball halfway between the pair and the nearest locked state off the pair
    radius = 0.5 * (pair_d + others[0]) if others else 2 * pair_d
    inside_mid = sum(d < radius for d in mid_d)
    high = find_locked_states(cert.omega, cert.gamma, 1.05, n_seeds=256)
    inside_high = sum(translation_distance(h.theta, cert.theta0) < radius for h in high)
    c.check("sigma=1.05 pair absent", len(pair) == 2 and inside_mid == 2 and inside_high == 0,
            f"radius {radius:.3f}: {inside_mid} states at 0.98, {inside_high} at 1.05")
    _finish(record_acceptance, 4, c, t0, 120)


def test_acceptance_5_branch_indices(record_acceptance):
    t0 = time.perf_counter()
    c = Clauses()
    cert = cons.certificate_from(THETA5, GAMMA5, family="stable")
    br = integrate_branch(cert.theta0, cert.gamma, s_min=-0.2, s_max=0.2)
    s, idx = br.column("s"), br.column("index_pos")
    left = {int(k) for k in idx[s < -0.01]} - {-1}
    right = {int(k) for k in idx[s > 0.01]} - {-1}
    c.check("index split", {frozenset(left), frozenset(right)} == {frozenset({4}), frozenset({3})},
            f"left {sorted(left)}, right {sorted(right)}")
    side = br[int(np.argmin(np.abs(s - (-0.1 if left == {4} else 0.1))))]
    ls = locked_state(side.theta, side.sigma, cert.omega, cert.gamma)
    frac = stability_probe(ls, cert.omega, cert.gamma, eps=1e-3)
    c.check("stable side probe", ls.stable and frac == 1.0, f"fraction {frac}")
    _finish(record_acceptance, 5, c, t0, 60)


def test_acceptance_6_hysteresis(record_acceptance):
    t0 = time.perf_counter()
    c = Clauses()
    th = np.array(cons.HYSTERESIS_THETA)
    ga = np.array(cons.HYSTERESIS_GAMMA)
    a = contact_coefficients(th, ga, k_max=2)
    c.check("|a0|,|a1|,|a2|<=1e-2", np.all(np.abs(a) <= 1e-2), ", ".join(f"{v:.3g}" for v in a))
    d1 = delta(th + np.array(cons.HYSTERESIS_EPS1), ga)
    d2 = delta(th + np.array(cons.HYSTERESIS_EPS2), ga)
    c.check("delta(theta+eps1)", abs(d1 / -6.18641 - 1) <= 0.05, f"{d1:.5f}")
    c.check("delta(theta+eps2)", abs(d2 / 12.7292 - 1) <= 0.05, f"{d2:.5f}")
    th2, ga2 = cons.find_hysteresis(6, th, ga, tol=1e-8)
    res = float(np.linalg.norm(contact_coefficients(th2, ga2, k_max=2)))
    c.check("solver residual<=1e-8", res <= 1e-8, f"{res:.2e}")
    _finish(record_acceptance, 6, c, t0, 120)


def test_acceptance_7_property_suites(record_acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    c = Clauses()

    ok = True
    for _ in range(1000):
        th, ga = random_state(rng)
        ok &= reduced_determinant(th, ga) == pytest.approx(reduced_determinant_direct(th, ga), rel=1e-9, abs=1e-12)
    c.check("matrix tree", ok)

    ok_s = ok_t = ok_b = ok_a = True
    for _ in range(1000):
        th, ga = random_state(rng)
        pen, x = pencil(th), h_map(ga)
        det, d = reduced_determinant(th, ga), delta(th, ga)
        sS = np.abs(x) @ np.abs(pen.S) @ np.abs(x)
        sT = np.abs(x) @ np.abs(pen.T) @ np.abs(x)
        ok_s &= x @ pen.S @ x == pytest.approx(det**2, rel=1e-9, abs=1e-12 * sS)
        ok_t &= x @ pen.T @ x == pytest.approx(d, rel=1e-9, abs=1e-12 * sT)
        lhs = matrix_B(th.size).T @ tangent_field(th, ga)
        rhs = matrix_C(th) @ x
        scale = np.abs(matrix_C(th)).max() * x.max()
        ok_b &= bool(np.allclose(lhs, rhs, rtol=1e-8, atol=1e-10 * scale))
        ok_a &= contact_coefficients(th, ga, k_max=1)[1] == pytest.approx(d, rel=1e-9, abs=1e-15)
    c.check("quadratic S", ok_s)
    c.check("quadratic T", ok_t)
    c.check("btv", ok_b)
    c.check("a1=delta", ok_a)

    tol, worst, sign_ok = 1e-10, 0.0, True
    for _ in range(50):
        th, ga = random_state(rng, n_range=(3, 6))
        span = 0.5 / max(abs(reduced_determinant(th, ga)), 1.0)
        br = integrate_branch(th, ga, sigma0=rng.uniform(0.5, 2), s_min=-span, s_max=span, tol=tol,
                              samples_per_unit=int(40 / span))
        worst = max(worst, br.column("residual").max())
        s, sig, d = br.column("s"), br.column("sigma"), br.column("det_red")
        slope = np.diff(np.log(sig)) / np.diff(s)
        clear = (np.abs(d[1:]) > 1e-3) & (np.abs(d[:-1]) > 1e-3) & (d[1:] * d[:-1] > 0)
        sign_ok &= bool(np.all(np.sign(slope[clear]) == np.sign(d[1:][clear])))
    c.check("flow residual<=10tol", worst <= 10 * tol, f"max {worst:.2e}")
    c.check("sign(dsigma/ds)=sign(det)", sign_ok)

    agree = total = 0
    while total < 1000:
        th, ga = random_state(rng)
        try:
            k = index_sign_rule(th, ga)
        except Degenerate:
            continue
        summary = eigen_index(th, ga)
        if summary.degenerate:
            continue
        total += 1
        agree += k == summary.index_pos
    c.check("index sign rule", agree == total, f"{agree}/{total}")

    worst = 0.0
    for k in range(200):
        n = 2 + k % 3
        R = rng.normal(size=(n, n))
        R = 0.5 * (R + R.T)
        worst = max(worst, abs(orthant_min(R).value - brute_min(R, {2: 400, 3: 80, 4: 30}[n])))
    c.check("orthant_min vs grid", worst <= 1e-3, f"max {worst:.1e}")

    ok = True
    for n in range(3, 10):
        th = rng.uniform(-np.pi, np.pi, n)
        pen = pencil(th)
        for nt in range(n + 1, 11):
            big = pencil(embed_state(th, nt))
            k2 = (nt / n) ** 2
            ok &= bool(np.allclose(big.S[:n, :n], k2 * pen.S, rtol=1e-9, atol=1e-12))
            ok &= bool(np.allclose(big.T[:n, :n], k2 * pen.T, rtol=1e-9, atol=1e-11))
    c.check("block scaling", ok)

    worst = 0.0
    for _ in range(1000):
        y = np.exp(rng.uniform(-5, 5, int(rng.integers(2, 11))))
        worst = max(worst, np.max(np.abs(h_map(h_inverse(y)) / y - 1)))
    c.check("h round trip", worst <= 1e-12, f"{worst:.1e}")
    _finish(record_acceptance, 7, c, t0, 300)


def test_acceptance_8_density_statistics(record_acceptance):
    t0 = time.perf_counter()
    c = Clauses()
    dp = density_scan(quantity="delta_p", resolution=200, threads=4)
    r = density_scan(quantity="order_parameter", resolution=200)
    defined = ~np.isnan(dp.values)
    neg = defined & (dp.values == -1)
    c.check("nonempty", neg.any(), f"{int(neg.sum())} cells")
    rv = r.values[defined]
    p10, p90 = np.percentile(rv, [10, 90])
    mean = float(r.values[neg].mean()) if neg.any() else float("nan")
    c.check("p10<mean<p90", p10 < mean < p90, f"{p10:.3f} < {mean:.3f} < {p90:.3f}")
    _finish(record_acceptance, 8, c, t0, 300)

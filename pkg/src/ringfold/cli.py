"""Command-line entry point: construct, continue, verify, scan, simulate, hysteresis.

Exit codes: 0 success, 1 verification or computation failure, 2 bad usage
or unsupported ring size.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__, construct as cons, flow
from .dynamics import find_locked_states
from .errors import RingfoldError, UnsupportedSize
from .scan import QUANTITIES, DEFAULT_RANGE, density_scan, level_set_scan

log = logging.getLogger("ringfold")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


# ---------------------------------------------------------------- serialization


def _floats(a) -> list[float]:
    return [float(v) for v in np.asarray(a, dtype=float)]


def certificate_to_dict(cert: cons.Certificate) -> dict:
    return {
        "n": cert.n,
        "theta0": _floats(cert.theta0),
        "gamma": _floats(cert.gamma),
        "omega": _floats(cert.omega),
        "sigma0": float(cert.sigma0),
        "family": cert.family,
        "diagnostics": {
            "det_red": float(cert.det_red_at_theta0),
            "delta": float(cert.delta_at_theta0),
            "n_plus": int(cert.n_plus_cos_eta),
            "stable_branch": bool(cert.stable_branch),
        },
        "provenance": {
            "tool_version": __version__,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        },
    }


def certificate_from_dict(d: dict) -> cons.Certificate:
    """Inverse of :func:`certificate_to_dict`; missing diagnostics are recomputed."""
    theta0 = np.array(d["theta0"], dtype=float)
    gamma = np.array(d["gamma"], dtype=float)
    fresh = cons.certificate_from(theta0, gamma, float(d.get("sigma0", 1.0)), d.get("family", "external"))
    diag = d.get("diagnostics", {})
    return dataclasses.replace(
        fresh,
        n=int(d.get("n", fresh.n)),
        # stored omega is kept verbatim so a round trip is bit-exact
        omega=np.array(d["omega"], dtype=float) if "omega" in d else fresh.omega,
        det_red_at_theta0=float(diag.get("det_red", fresh.det_red_at_theta0)),
        delta_at_theta0=float(diag.get("delta", fresh.delta_at_theta0)),
        n_plus_cos_eta=int(diag.get("n_plus", fresh.n_plus_cos_eta)),
        stable_branch=bool(diag.get("stable_branch", fresh.stable_branch)),
    )


def write_json(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2)
    if path is None or path == "-":
        print(text)
    else:
        with open(path, "w") as f:
            f.write(text + "\n")


def read_certificate(path: str) -> cons.Certificate:
    with open(path) as f:
        return certificate_from_dict(json.load(f))


def write_pgm(path: str, values: np.ndarray, classes: bool) -> None:
    """ASCII P2 raster; class maps use -1 -> 0, 0/undefined -> 128, 1 -> 255."""
    if classes:
        img = np.full(values.shape, 128, dtype=int)
        img[values == -1] = 0
        img[values == 1] = 255
    else:
        v = np.nan_to_num(values, nan=0.0)
        lo, hi = float(v.min()), float(v.max())
        img = np.zeros(values.shape, int) if hi == lo else np.rint(255 * (v - lo) / (hi - lo)).astype(int)
    h, w = img.shape
    with open(path, "w") as f:
        f.write(f"P2\n{w} {h}\n255\n")
        # top row of the image is the largest phi2
        for row in img[::-1]:
            f.write(" ".join(map(str, row)) + "\n")


def _event_dict(e: flow.BifurcationEvent) -> dict:
    return {
        "s_star": e.s_star,
        "sigma_star": e.sigma_star,
        "kind": e.kind,
        "delta_at_event": e.delta_at_event,
        "det_red_at_event": e.det_red_at_event,
        "theta_star": _floats(e.theta_star),
    }


# ---------------------------------------------------------------- commands


def _fail(report: dict, code: int = EXIT_FAIL) -> int:
    print(json.dumps(report), file=sys.stderr)
    return code


def _check_writable(*paths) -> None:
    for p in paths:
        if p is None or p == "-":
            continue
        d = os.path.dirname(os.path.abspath(p))
        if not os.path.isdir(d) or not os.access(d, os.W_OK):
            raise PermissionError(f"cannot write to {p}")


def cmd_construct(args) -> int:
    _check_writable(args.out)
    try:
        cert = cons.construct(args.n, args.family)
    except UnsupportedSize as e:
        return _fail({"error": "UnsupportedSize", "message": str(e)}, EXIT_USAGE)
    rep = cons.verify_certificate(cert, args.cert_tol, tol=args.tol)
    write_json(certificate_to_dict(cert), args.out)
    if not rep.passed:
        return _fail({"error": "VerificationFailed", **rep.as_dict()})
    return EXIT_OK


def cmd_verify(args) -> int:
    cert = read_certificate(args.cert)
    rep = cons.verify_certificate(cert, args.cert_tol, tol=args.tol)
    write_json(rep.as_dict(), args.out)
    if not rep.passed:
        return _fail({"error": "VerificationFailed", "failures": rep.failures})
    return EXIT_OK


def cmd_continue(args) -> int:
    events_path = args.events or (args.out + ".events.json" if args.out not in (None, "-") else None)
    _check_writable(args.out, events_path)
    cert = read_certificate(args.cert)
    if not args.no_verify:
        rep = cons.verify_certificate(cert, args.cert_tol, tol=args.tol)
        if not rep.passed:
            return _fail({"error": "VerificationFailed", "failures": rep.failures})
    sigma_max = args.sigma_max if args.sigma_max > 0 else None
    br = flow.integrate_branch(
        cert.theta0, cert.gamma, cert.sigma0, args.s_min, args.s_max, tol=args.tol,
        samples_per_unit=args.samples_per_unit, sigma_max=sigma_max,
    )
    events = flow.detect_bifurcations(br)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="")
    try:
        w = csv.writer(out, lineterminator="\r\n")
        w.writerow(["s", "sigma", "det_red", "index_pos", "r", "residual"] + [f"theta_{i + 1}" for i in range(cert.n)])
        for b in br:
            idx = "degenerate" if b.index_pos is None else b.index_pos
            w.writerow([repr(b.s), repr(b.sigma), repr(b.det_red), idx, repr(b.r), repr(b.residual)] + [repr(float(t)) for t in b.theta])
    finally:
        if out is not sys.stdout:
            out.close()
    if events_path:
        write_json([_event_dict(e) for e in events], events_path)
    return EXIT_OK


def cmd_scan(args) -> int:
    _check_writable(args.out_csv, args.out_pgm)
    rng = (args.phi_min, args.phi_max)
    if args.quantity == "det_red":
        if args.gamma is None:
            return _fail({"error": "Usage", "message": "det_red scans need --gamma"}, EXIT_USAGE)
        grid = level_set_scan(args.gamma, args.resolution, rng)
    else:
        grid = density_scan(3, args.quantity, args.resolution, rng, threads=args.threads)
    if args.out_csv:
        with open(args.out_csv, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\r\n")
            w.writerow(["phi1", "phi2", "value"])
            for i, p2 in enumerate(grid.phi2):
                for j, p1 in enumerate(grid.phi1):
                    v = grid.values[i, j]
                    w.writerow([repr(float(p1)), repr(float(p2)), "undefined" if math.isnan(v) else repr(float(v))])
    if args.out_pgm:
        vals = np.sign(grid.values) if grid.quantity == "det_red" else grid.values
        write_pgm(args.out_pgm, vals, classes=grid.quantity != "order_parameter")
    return EXIT_OK


def cmd_simulate(args) -> int:
    _check_writable(args.out)
    if args.cert:
        cert = read_certificate(args.cert)
        omega, gamma = cert.omega, cert.gamma
    elif args.omega is not None and args.gamma is not None:
        omega, gamma = np.array(args.omega), np.array(args.gamma)
    else:
        return _fail({"error": "Usage", "message": "give --cert or both --omega and --gamma"}, EXIT_USAGE)
    states = find_locked_states(omega, gamma, args.sigma, args.seeds, args.seed, threads=args.threads)
    write_json(
        {
            "sigma": args.sigma,
            "n_seeds": args.seeds,
            "seed": args.seed,
            "mean_frequency": float(np.mean(omega)),
            "n_stable": sum(s.stable for s in states),
            "states": [
                {"theta": _floats(s.theta), "index_pos": s.index_pos, "stable": s.stable, "residual": s.residual, "r": s.r}
                for s in states
            ],
        },
        args.out,
    )
    return EXIT_OK


BUILTIN_INIT = ("builtin", "paper")  # second spelling kept for older scripts


def cmd_hysteresis(args) -> int:
    _check_writable(args.out)
    if args.init in BUILTIN_INIT:
        theta, gamma = None, None
    else:
        with open(args.init) as f:
            d = json.load(f)
        theta, gamma = d["theta"], d["gamma"]
    th, ga = cons.find_hysteresis(args.n, theta, gamma, tol=args.target)
    a = flow.contact_coefficients(th, ga, k_max=2)
    write_json({"n": args.n, "theta": _floats(th), "gamma": _floats(ga), "contact": _floats(a), "residual": float(np.linalg.norm(a))}, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    p = argparse.ArgumentParser(prog="ringfold", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file with default values for any flag")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    subs = {}

    s = subs["construct"] = sub.add_parser("construct", help="build and verify a certificate")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--family", choices=["generic", "stable"], default="generic")
    s.add_argument("--out", default="-")
    s.add_argument("--cert-tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_construct)

    s = subs["verify"] = sub.add_parser("verify", help="recheck a certificate")
    s.add_argument("--cert", required=True)
    s.add_argument("--cert-tol", type=float, default=1e-8)
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_verify)

    s = subs["continue"] = sub.add_parser("continue", help="integrate the branch through a certificate")
    s.add_argument("--cert", required=True)
    s.add_argument("--s-min", type=float, default=-3.0)
    s.add_argument("--s-max", type=float, default=3.0)
    s.add_argument("--samples-per-unit", type=int, default=2000)
    s.add_argument("--sigma-max", type=float, default=1e4, help="stop once sigma exceeds this (0 disables)")
    s.add_argument("--out", default="-")
    s.add_argument("--events", help="event sidecar path (default: <out>.events.json)")
    s.add_argument("--cert-tol", type=float, default=1e-8)
    s.add_argument("--no-verify", action="store_true", help="skip certificate verification")
    s.set_defaults(func=cmd_continue)

    s = subs["scan"] = sub.add_parser("scan", help="n = 3 maps over the mean-zero plane")
    s.add_argument("--quantity", choices=list(QUANTITIES) + ["det_red"], default="delta_p")
    s.add_argument("--resolution", type=int, default=200)
    s.add_argument("--phi-min", type=float, default=DEFAULT_RANGE[0])
    s.add_argument("--phi-max", type=float, default=DEFAULT_RANGE[1])
    s.add_argument("--gamma", type=float, nargs=3)
    s.add_argument("--out-csv")
    s.add_argument("--out-pgm")
    s.set_defaults(func=cmd_scan)

    s = subs["simulate"] = sub.add_parser("simulate", help="find phase-locked states by seeded Newton")
    s.add_argument("--cert")
    s.add_argument("--omega", type=float, nargs="+")
    s.add_argument("--gamma", type=float, nargs="+")
    s.add_argument("--sigma", type=float, required=True)
    s.add_argument("--seeds", type=int, default=256)
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_simulate)

    s = subs["hysteresis"] = sub.add_parser("hysteresis", help="solve a0 = a1 = a2 = 0")
    s.add_argument("--n", type=int, default=6)
    s.add_argument("--init", default="builtin", help="'builtin' (n = 6 only) or a JSON file with theta and gamma")
    s.add_argument("--target", type=float, default=1e-8, help="residual norm to reach")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_hysteresis)
    return p, subs


def parse_args(argv=None) -> argparse.Namespace:
    p, subs = build_parser()
    args = p.parse_args(argv)
    if args.config:
        with open(args.config) as f:
            cfg = json.load(f)
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        p.set_defaults(**cfg)
        subs[args.command].set_defaults(**cfg)
        args = p.parse_args(argv)
    for name in ("tol", "cert_tol"):
        v = getattr(args, name, None)
        if v is not None and not v > 0:
            p.error(f"--{name.replace('_', '-')} must be positive")
    return args


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UnsupportedSize as e:
        return _fail({"error": "UnsupportedSize", "message": str(e)}, EXIT_USAGE)
    except (RingfoldError, OSError, ValueError, KeyError) as e:
        return _fail({"error": type(e).__name__, "message": str(e)})


if __name__ == "__main__":
    sys.exit(main())

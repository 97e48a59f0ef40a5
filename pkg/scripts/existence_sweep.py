"""Construct and verify fold certificates for the generic and stable seed families."""

import argparse
import time
from dataclasses import dataclass

from ringfold import construct as cons
from ringfold.orthant import delta_p


@dataclass
class Config:
    n_max: int = 10


def run(cfg: Config) -> int:
    failures = 0
    for fam, n_min in (("generic", 3), ("stable", 5)):
        for n in range(n_min, cfg.n_max + 1):
            t0 = time.perf_counter()
            th = cons.seed_theta(n, fam)
            cert = cons.construct(n, fam)
            rep = cons.verify_certificate(cert)
            failures += not rep.passed
            print(
                f"{fam:7s} n={n:2d} delta_p={delta_p(th):+d} delta={cert.delta_at_theta0:+.4g} "
                f"det={cert.det_red_at_theta0:+.1e} stable={cert.stable_branch!s:5s} "
                f"verified={rep.passed!s:5s} {time.perf_counter() - t0:.2f}s"
            )
    return failures


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-max", type=int, default=Config.n_max)
    raise SystemExit(1 if run(Config(p.parse_args().n_max)) else 0)

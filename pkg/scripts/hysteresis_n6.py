"""Contact coefficients at the stored six-oscillator point and the refined solution."""

import argparse
from dataclasses import dataclass

import numpy as np

from ringfold import construct as cons
from ringfold.flow import contact_coefficients, delta


@dataclass
class Config:
    tol: float = 1e-8
    max_iter: int = 500


def run(cfg: Config) -> None:
    th = np.array(cons.HYSTERESIS_THETA)
    ga = np.array(cons.HYSTERESIS_GAMMA)
    print("stored point a0..a3:", contact_coefficients(th, ga, k_max=3))
    print("delta at theta+eps1:", delta(th + np.array(cons.HYSTERESIS_EPS1), ga))
    print("delta at theta+eps2:", delta(th + np.array(cons.HYSTERESIS_EPS2), ga))
    th2, ga2 = cons.find_hysteresis(6, th, ga, tol=cfg.tol, max_iter=cfg.max_iter)
    a = contact_coefficients(th2, ga2, k_max=3)
    print("refined theta:", np.round(th2, 6))
    print("refined gamma:", np.round(ga2, 6))
    print("refined a0..a3:", a)
    print("distance moved: theta", np.abs(th2 - th).max(), "gamma", np.abs(ga2 - ga).max())


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--tol", type=float, default=Config.tol)
    a = p.parse_args()
    run(Config(tol=a.tol))

"""Count stable phase-locked states of the five-oscillator fold certificate across sigma."""

import argparse
from dataclasses import dataclass

import numpy as np

from ringfold import construct as cons
from ringfold.dynamics import find_locked_states
from ringfold.flow import detect_bifurcations, integrate_branch


@dataclass
class Config:
    sigmas: tuple[float, ...] = (0.95, 0.96, 0.97, 0.98, 0.99, 1.0, 1.01, 1.05)
    n_seeds: int = 1024
    seed: int = 0
    threads: int = 1


def run(cfg: Config) -> None:
    cert = cons.construct(5, "stable")
    print("gamma", np.round(cert.gamma, 5), "omega", np.round(cert.omega, 4))
    for e in detect_bifurcations(integrate_branch(cert.theta0, cert.gamma, s_min=-1, s_max=1)):
        print(f"fold {e.kind:16s} s={e.s_star:+.4f} sigma={e.sigma_star:.5f}")
    for sigma in cfg.sigmas:
        states = find_locked_states(cert.omega, cert.gamma, sigma, n_seeds=cfg.n_seeds, seed=cfg.seed, threads=cfg.threads)
        stable = [s for s in states if s.stable]
        print(f"sigma={sigma:.3f} locked={len(states):3d} stable={len(stable)} r={[round(s.r, 3) for s in stable]}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", type=int, default=Config.n_seeds)
    p.add_argument("--threads", type=int, default=Config.threads)
    p.add_argument("--sigma", type=float, nargs="+")
    a = p.parse_args()
    cfg = Config(n_seeds=a.seeds, threads=a.threads)
    if a.sigma:
        cfg.sigmas = tuple(a.sigma)
    run(cfg)

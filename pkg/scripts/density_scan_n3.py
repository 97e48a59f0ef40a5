"""Delta_p and order-parameter maps for three oscillators, with summary statistics."""

import argparse
from dataclasses import dataclass

import numpy as np

from ringfold.cli import write_pgm
from ringfold.scan import density_scan


@dataclass
class Config:
    resolution: int = 200
    threads: int = 4
    out_prefix: str | None = None


def run(cfg: Config) -> None:
    dp = density_scan(quantity="delta_p", resolution=cfg.resolution, threads=cfg.threads)
    r = density_scan(quantity="order_parameter", resolution=cfg.resolution)
    vals, counts = np.unique(dp.values[~np.isnan(dp.values)], return_counts=True)
    print("delta_p cells:", dict(zip(vals.astype(int).tolist(), counts.tolist())), "undefined:", int(np.isnan(dp.values).sum()))
    defined = ~np.isnan(dp.values)
    for k in (-1, 0, 1):
        m = defined & (dp.values == k)
        if m.any():
            print(f"mean r over delta_p={k:+d}: {r.values[m].mean():.4f}")
    p10, p90 = np.percentile(r.values[defined], [10, 90])
    print(f"r percentiles over defined cells: p10={p10:.4f} p90={p90:.4f}")
    if cfg.out_prefix:
        write_pgm(cfg.out_prefix + "_delta_p.pgm", dp.values, classes=True)
        write_pgm(cfg.out_prefix + "_r.pgm", r.values, classes=False)


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--resolution", type=int, default=Config.resolution)
    p.add_argument("--threads", type=int, default=Config.threads)
    p.add_argument("--out-prefix")
    a = p.parse_args()
    run(Config(a.resolution, a.threads, a.out_prefix))

"""Log intersection ratio against center distance for Hamming spaces.

Writes one CSV row per (q, r) with the fitted slope and R^2, plus the
boundary growth rate, to stdout or --output.
"""
import argparse
import csv
import math
import sys
from dataclasses import dataclass, field

from intervol.conditions import boundary_rate, decay_profile
from intervol.spaces import SpaceSpec


@dataclass
class DecayConfig:
    n: int = 300
    qs: tuple[int, ...] = (2, 3, 4)
    fractions: tuple[float, ...] = (0.1, 0.25, 0.4, 0.6, 0.8, 1.0)  # of (q-1)/q
    k_min: int = 10
    k_max: int = 150
    output: str | None = None


def rows(cfg: DecayConfig):
    for q in cfg.qs:
        space = SpaceSpec.hamming(q, cfg.n)
        for frac in cfg.fractions:
            r = math.floor(frac * (q - 1) / q * cfg.n)
            rep = decay_profile(space, r, range(cfg.k_min, min(cfg.k_max, 2 * r) + 1))
            yield {"q": q, "n": cfg.n, "r": r, "p": f"{r / cfg.n:.4f}",
                   "slope": f"{rep.slope:.5f}", "r_squared": f"{rep.r_squared:.4f}",
                   "boundary_rate": f"{boundary_rate(space, r):.5f}",
                   "verdict": rep.verdict.value}


def main() -> None:
    cfg = DecayConfig()
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=cfg.n)
    ap.add_argument("--output", default=None)
    args = ap.parse_args()
    cfg.n, cfg.output = args.n, args.output
    out = open(cfg.output, "w", newline="") if cfg.output else sys.stdout
    writer = None
    for row in rows(cfg):
        if writer is None:
            writer = csv.DictWriter(out, fieldnames=list(row), lineterminator="\n")
            writer.writeheader()
        writer.writerow(row)
    if cfg.output:
        out.close()


if __name__ == "__main__":
    main()

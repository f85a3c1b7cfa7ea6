"""Random-code list-decoding failure rate as the message count grows.

Also prints the exact event probabilities P(E_ell) next to the smaller of the
two covariance bounds for each ell.
"""
import argparse
import sys
from dataclasses import dataclass

from intervol.listdecode import (ListDecodeParams, event_probability, event_bounds,
                                 message_count_sweep, sweep_csv)


@dataclass
class SweepConfig:
    q: int = 2
    n: int = 12
    p: float = 0.1
    L: int = 2
    c: float = 0.5
    message_counts: tuple[int, ...] = (2, 3, 4, 6, 8, 12, 16)
    trials: int = 1000
    seed: int = 0
    jobs: int = 4


def main() -> None:
    cfg = SweepConfig()
    ap = argparse.ArgumentParser(description=__doc__)
    for name in ("q", "n", "L", "trials", "seed", "jobs"):
        ap.add_argument(f"--{name}", type=int, default=getattr(cfg, name))
    ap.add_argument("--p", type=float, default=cfg.p)
    ap.add_argument("--c", type=float, default=cfg.c)
    ap.add_argument("--message-counts", type=int, nargs="+", default=list(cfg.message_counts))
    args = ap.parse_args()
    cfg = SweepConfig(args.q, args.n, args.p, args.L, args.c, tuple(args.message_counts),
                      args.trials, args.seed, args.jobs)
    params = ListDecodeParams(cfg.q, cfg.n, cfg.p, L=cfg.L, c=cfg.c, message_count=cfg.L)
    for ell in range(1, cfg.L + 1):
        prob = event_probability(cfg.q, cfg.n, cfg.p, cfg.L, ell)
        b = event_bounds(params, ell)
        print(f"ell={ell} P(E)={float(prob):.6g} bound1={float(b.bound1):.6g} "
              f"bound2={b.bound2:.6g}", file=sys.stderr)
    stats = message_count_sweep(cfg.q, cfg.n, cfg.p, cfg.L, cfg.message_counts, cfg.trials,
                                cfg.seed, cfg.jobs)
    sys.stdout.write(sweep_csv(stats))


if __name__ == "__main__":
    main()

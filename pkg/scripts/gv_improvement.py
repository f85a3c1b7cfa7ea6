"""Constructed code sizes against the sphere-covering bound, binary Hamming.

For each n the radius is floor(n/4); every method in --methods is run on the
same ball graph. Large n is slow for degeneracy_order (n=20 takes minutes).
"""
import argparse
import sys
from dataclasses import dataclass

from intervol.codes import build_ball_graph, comparison_csv, comparison_row, construct_code
from intervol.spaces import SpaceSpec


@dataclass
class GVConfig:
    n_min: int = 8
    n_max: int = 16
    radius_divisor: int = 4
    methods: tuple[str, ...] = ("greedy_maximal", "degeneracy_order")


def run(cfg: GVConfig) -> str:
    rows = []
    for n in range(cfg.n_min, cfg.n_max + 1):
        graph = build_ball_graph(SpaceSpec.hamming(2, n), n // cfg.radius_divisor, cap=1 << 20)
        for method in cfg.methods:
            row = comparison_row(graph, construct_code(graph, method))
            rows.append(row)
            print(f"n={n} {method}: {row['constructedSize']} "
                  f"(x{row['improvementFactor']})", file=sys.stderr)
    return comparison_csv(rows)


def main() -> None:
    cfg = GVConfig()
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-min", type=int, default=cfg.n_min)
    ap.add_argument("--n-max", type=int, default=cfg.n_max)
    ap.add_argument("--methods", nargs="+", default=list(cfg.methods))
    args = ap.parse_args()
    cfg = GVConfig(args.n_min, args.n_max, cfg.radius_divisor, tuple(args.methods))
    sys.stdout.write(run(cfg))


if __name__ == "__main__":
    main()

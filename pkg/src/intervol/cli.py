"""Command-line front end.

Data goes to stdout or --output; diagnostics go to stderr. Every CSV/JSON
output and every file starts with a header naming the tool version and a
hash of the run configuration, and embeds the configuration itself.

Exit codes: 0 success/pass, 1 verification fail, 2 usage error, 3 budget exceeded.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from . import __version__
from .codes import (METHODS, audit_sparsity, build_ball_graph, comparison_row, construct_code,
                    exact_occupancy, hardcore_estimate, min_pairwise_distance, COMPARISON_COLUMNS,
                    EXACT_COUNT_CAP, GRAPH_CAP)
from .conditions import (claimed_subgaussian_constant, decay_profile, default_alpha,
                         verify_dispersal, verify_growth, verify_subgaussian)
from .exactcomb import Verdict
from .listdecode import (ListDecodeParams, SWEEP_COLUMNS, sweep_row, witness_experiment)
from .spaces import ENUMERATION_CAP, BudgetExceeded, SpaceSpec, VOLUME_COLUMNS, volume, volume_table_row
from .spherical import BOUND_COLUMNS, bound_table, verify_cap_intersection

log = logging.getLogger("intervol")

ENV_SAMPLES = "INTERVOL_SAMPLES"
ENV_ENUM_CAP = "INTERVOL_ENUM_CAP"
ENV_GRAPH_CAP = "INTERVOL_GRAPH_CAP"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def parse_range(text: str) -> list[int]:
    """'5', '1,4,9' or 'start:end[:step]' with an inclusive end."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            start, end = parts[0], parts[1]
            step = parts[2] if len(parts) == 3 else 1
            if step <= 0:
                raise UsageError(f"range step must be positive in {text!r}")
            if end < start:
                raise UsageError(f"range end precedes start in {text!r}")
            return list(range(start, end + 1, step))
        return [int(p) for p in text.split(",")]
    except UsageError:
        raise
    except ValueError:
        raise UsageError(f"cannot parse range {text!r}; use N, A,B,C or start:end:step") from None


_PI_FORM = re.compile(r"^(?:(\d*\.?\d+)\s*\*?\s*)?pi(?:\s*/\s*(\d*\.?\d+))?$")


def parse_radians(text: str) -> float:
    t = str(text).strip().lower()
    if t.endswith(("deg", "°", "degrees")):
        raise UsageError("angles are taken in radians only")
    m = _PI_FORM.match(t)
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    try:
        return float(t)
    except ValueError:
        raise UsageError(f"cannot parse angle {text!r}") from None


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"environment variable {name} must be an integer, got {raw!r}") from None


# -- results -------------------------------------------------------------------

@dataclass
class Result:
    data: dict
    columns: Sequence[str] = ()
    rows: list[dict] = field(default_factory=list)
    text: str = ""
    notes: list[str] = field(default_factory=list)
    verdict: Verdict | None = None


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _space_from(args) -> SpaceSpec:
    kind = args.space
    if kind == "hamming":
        return SpaceSpec.hamming(args.q, args.n)
    if kind == "johnson":
        return SpaceSpec.johnson(args.n, args.w)
    return SpaceSpec.permutation(args.n)


def _single(values: list[int], name: str) -> int:
    if len(values) != 1:
        raise UsageError(f"--{name} takes a single value here")
    return values[0]


def cmd_volume(args) -> Result:
    space = _space_from(args)
    rows = [{"kind": space.kind.value, "q": space.q, "n": space.n, "w": space.w, "r": r,
             "volume": volume(space, r)} for r in parse_range(args.r)]
    text = "\n".join(str(row["volume"]) if len(rows) == 1 else f"{row['r']} {row['volume']}"
                     for row in rows)
    return Result({"rows": rows}, ("kind", "q", "n", "w", "r", "volume"), rows, text)


def cmd_intersect(args) -> Result:
    space = _space_from(args)
    rows = [volume_table_row(space, r, k, args.enum_cap)
            for r in parse_range(args.r) for k in parse_range(args.k)]
    if len(rows) == 1:
        text = str(rows[0]["intersection_volume"])
    else:
        text = "\n".join(f"{row['r']} {row['k']} {row['intersection_volume']}" for row in rows)
    return Result({"rows": rows}, VOLUME_COLUMNS, rows, text)


def cmd_decay(args) -> Result:
    space = _space_from(args)
    r = _single(parse_range(args.r), "r")
    rep = decay_profile(space, r, parse_range(args.k), args.mode, args.samples, args.seed)
    rows = []
    for k, ratio, lg in rep.points:
        exact = isinstance(ratio, Fraction)
        rows.append({"k": k, "ratio": _frac(ratio) if exact else repr(float(ratio)),
                     "log_ratio": repr(lg)})
    notes = [f"slope={rep.slope!r}", f"intercept={rep.intercept!r}",
             f"r_squared={rep.r_squared!r}", f"verdict={rep.verdict.value}"]
    notes += [f"excluded k={k}: {why}" for k, why in rep.excluded]
    text = "\n".join(f"{row['k']} {row['ratio']} {row['log_ratio']}" for row in rows)
    text += f"\nslope {rep.slope!r} r_squared {rep.r_squared!r} verdict {rep.verdict.value}"
    return Result(rep.to_dict(), ("k", "ratio", "log_ratio"), rows, text, notes, rep.verdict)


def cmd_growth(args) -> Result:
    space = _space_from(args)
    r = _single(parse_range(args.r), "r")
    rep = verify_growth(space, r, args.t_max, args.rate, args.min_rate)
    rows = [{"t": t, "ratio": _frac(x)} for t, x in rep.rate_points]
    notes = [f"fitted_rate={rep.fitted_rate!r}", f"boundary_rate={rep.boundary_rate!r}",
             f"checked_rate={rep.checked_rate!r}",
             f"shell_ratios_monotone={rep.shell_ratios_monotone}",
             f"verdict={rep.verdict.value}"] + rep.notes
    text = "\n".join(notes)
    return Result(rep.to_dict(), ("t", "ratio"), rows, text, notes, rep.verdict)


def cmd_dispersal(args) -> Result:
    space = _space_from(args)
    r = _single(parse_range(args.r), "r")
    k = _single(parse_range(args.k), "k")
    alpha = args.alpha if args.alpha is not None else default_alpha(space, r, args.eps)
    rep = verify_dispersal(space, r, k, alpha, args.mode, args.samples, args.seed, args.jobs)
    rows = [{"i": m.i, "mean": repr(m.mean), "kind": m.kind, "stderr": repr(m.stderr),
             "verdict": m.verdict.value} for m in rep.per_offset_means]
    notes = [f"alpha={alpha!r}", f"threshold={rep.threshold!r}", f"verdict={rep.verdict.value}"]
    text = "\n".join(f"{row['i']} {row['mean']} {row['verdict']}" for row in rows)
    text += f"\nthreshold {rep.threshold!r} verdict {rep.verdict.value}"
    return Result(rep.to_dict(), ("i", "mean", "kind", "stderr", "verdict"), rows, text, notes,
                  rep.verdict)


def cmd_subgaussian(args) -> Result:
    space = _space_from(args)
    r = _single(parse_range(args.r), "r")
    k = _single(parse_range(args.k), "k")
    K = args.K if args.K is not None else claimed_subgaussian_constant(space, r, k)
    rep = verify_subgaussian(space, r, k, args.i, K, args.samples, args.seed, args.jobs)
    rows = [{"t": row.t, "frequency": repr(row.frequency), "bound": repr(row.bound),
             "stderr": repr(row.stderr), "verdict": row.verdict.value} for row in rep.rows]
    notes = [f"claimed_K={K!r}", f"fitted_K={rep.fitted_K!r}", f"verdict={rep.verdict.value}"]
    text = "\n".join(f"{row['t']} {row['frequency']} {row['bound']} {row['verdict']}"
                     for row in rows)
    text += f"\nfitted_K {rep.fitted_K!r} verdict {rep.verdict.value}"
    return Result(rep.to_dict(), ("t", "frequency", "bound", "stderr", "verdict"), rows, text,
                  notes, rep.verdict)


def cmd_graph(args) -> Result:
    space = _space_from(args)
    r = _single(parse_range(args.r), "r")
    g = build_ball_graph(space, r, args.graph_cap)
    data = {"N": g.N, "D": g.D, "min_degree": g.min_degree,
            "min_degree_at_least_half_D": 2 * g.min_degree >= g.D}
    verdict = None
    if args.audit_t is not None:
        audit = audit_sparsity(g, args.vertex, args.audit_t)
        data["audit"] = audit.to_dict()
        verdict = Verdict.PASS if audit.edge_bound_holds else Verdict.FAIL
    row = {k: v for k, v in data.items() if k != "audit"}
    if "audit" in data:
        row.update({f"audit_{k}": v for k, v in data["audit"].items() if k != "vertex"})
    text = "\n".join(f"{k} {v}" for k, v in row.items())
    return Result(data, tuple(row), [row], text, verdict=verdict)


def cmd_code(args) -> Result:
    space = _space_from(args)
    r = _single(parse_range(args.r), "r")
    g = build_ball_graph(space, r, args.graph_cap)
    res = construct_code(g, args.method, args.code_seed)
    dmin = min_pairwise_distance(space, res.codewords)
    verdict = Verdict.PASS if dmin > r else Verdict.FAIL
    row = comparison_row(g, res)
    data = dict(row, method=res.method, min_distance=dmin,
                codewords=[space.render(c) for c in res.codewords])
    return Result(data, COMPARISON_COLUMNS, [row], res.render(space).rstrip("\n"),
                  [f"method={res.method}", f"min_distance={dmin}"], verdict)


def cmd_hardcore(args) -> Result:
    space = _space_from(args)
    r = _single(parse_range(args.r), "r")
    g = build_ball_graph(space, r, args.graph_cap)
    steps = args.steps if args.steps is not None else 1000 * g.N
    est = hardcore_estimate(g, args.lam, steps, args.seed)
    row = {"N": g.N, "D": g.D, "lambda": repr(args.lam), "steps": steps,
           "mean_occupancy": repr(est.mean_occupancy), "stderr": repr(est.stderr)}
    verdict = None
    if g.N <= EXACT_COUNT_CAP:
        exact = exact_occupancy(g, args.lam)
        row["exact_occupancy"] = repr(exact)
        within = abs(est.mean_occupancy - exact) <= 3 * est.stderr
        verdict = Verdict.PASS if within else Verdict.FAIL
    text = "\n".join(f"{k} {v}" for k, v in row.items())
    return Result(dict(row), tuple(row), [row], text, verdict=verdict)


def _listdecode_params(args, message_count: int | None) -> ListDecodeParams:
    return ListDecodeParams(args.q, args.n, args.p, epsilon=args.epsilon, L=args.L, c=args.c,
                            message_count=message_count)


def cmd_listdecode(args) -> Result:
    mc = _single(parse_range(args.message_count), "message-count") if args.message_count else None
    stats = witness_experiment(_listdecode_params(args, mc), args.trials, args.seed, args.jobs)
    row = sweep_row(stats)
    data = stats.to_dict()
    text = "\n".join(f"{k} {v}" for k, v in row.items())
    return Result(data, SWEEP_COLUMNS, [row], text)


def cmd_sweep(args) -> Result:
    if not args.message_count:
        raise UsageError("sweep needs --message-count RANGE")
    rows, runs = [], []
    for m in parse_range(args.message_count):
        stats = witness_experiment(_listdecode_params(args, m), args.trials, args.seed, args.jobs)
        rows.append(sweep_row(stats))
        runs.append(stats.to_dict())
    text = "\n".join(" ".join(str(row[c]) for c in SWEEP_COLUMNS) for row in rows)
    return Result({"runs": runs}, SWEEP_COLUMNS, rows, text)


def cmd_spherical(args) -> Result:
    theta = parse_radians(args.theta)
    rows, data = [], []
    verdict = None
    for n in parse_range(args.n):
        b = bound_table(n, theta)
        row = {c: v for c, v in zip(BOUND_COLUMNS, (
            b.n, repr(b.theta), repr(b.s_theta), repr(b.q_theta), repr(b.c_theta),
            repr(b.gklp_constant), repr(b.covering_bound), repr(b.jjp_bound),
            repr(b.gklp_bound)))}
        entry = b.to_dict()
        if args.verify:
            rep = verify_cap_intersection(n, theta, args.samples, args.seed)
            entry["cap_intersection"] = rep.to_dict()
            row.update({"mc_estimate": repr(rep.estimate), "mc_stderr": repr(rep.stderr),
                        "mc_bound": repr(rep.bound)})
            ok = Verdict.PASS if rep.within_bound else Verdict.FAIL
            verdict = ok if verdict in (None, Verdict.PASS) else verdict
        rows.append(row)
        data.append(entry)
    columns = BOUND_COLUMNS + (("mc_estimate", "mc_stderr", "mc_bound") if args.verify else ())
    text = "\n".join(" ".join(str(row[c]) for c in columns) for row in rows)
    return Result({"rows": data}, columns, rows, text, verdict=verdict)


COMMANDS: dict[str, Callable] = {
    "volume": cmd_volume, "intersect": cmd_intersect, "decay": cmd_decay,
    "growth": cmd_growth, "dispersal": cmd_dispersal, "subgaussian": cmd_subgaussian,
    "graph": cmd_graph, "code": cmd_code, "hardcore": cmd_hardcore,
    "listdecode": cmd_listdecode, "spherical": cmd_spherical, "sweep": cmd_sweep,
}


# -- argument parsing -------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json", "text"), default="text")
    p.add_argument("--output", default=None, help="write data here instead of stdout")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--samples", type=int, default=None,
                   help=f"Monte Carlo samples (default from ${ENV_SAMPLES} or 100000)")
    p.add_argument("--enum-cap", type=int, default=None,
                   help=f"enumeration cap (default from ${ENV_ENUM_CAP} or {ENUMERATION_CAP})")
    p.add_argument("--graph-cap", type=int, default=None,
                   help=f"graph vertex cap (default from ${ENV_GRAPH_CAP} or {GRAPH_CAP})")
    p.add_argument("--verbose", action="store_true")


def _add_space(p: argparse.ArgumentParser) -> None:
    p.add_argument("--space", choices=("hamming", "johnson", "permutation"), required=True)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--w", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="intervol", description="Ball intersection volumes and code bounds.")
    parser.add_argument("--version", action="version", version=f"intervol {__version__}")
    parser.add_argument("--config", help="JSON RunConfig file; replaces the command line")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("volume", help="exact ball volumes")
    _add_space(p)
    p.add_argument("--r", required=True)
    p = sub.add_parser("intersect", help="exact intersection volumes")
    _add_space(p)
    p.add_argument("--r", required=True)
    p.add_argument("--k", required=True)
    p = sub.add_parser("decay", help="log intersection ratio vs center distance")
    _add_space(p)
    p.add_argument("--r", required=True)
    p.add_argument("--k", required=True)
    p.add_argument("--mode", choices=("exact", "monte_carlo"), default="exact")
    p = sub.add_parser("growth", help="exponential growth check")
    _add_space(p)
    p.add_argument("--r", required=True)
    p.add_argument("--t-max", type=int, default=None)
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--min-rate", type=float, default=0.05)
    p = sub.add_parser("dispersal", help="dispersal check on shells")
    _add_space(p)
    p.add_argument("--r", required=True)
    p.add_argument("--k", required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--mode", choices=("exact", "monte_carlo"), default="exact")
    p = sub.add_parser("subgaussian", help="empirical tails of the boundary functional")
    _add_space(p)
    p.add_argument("--r", required=True)
    p.add_argument("--k", required=True)
    p.add_argument("--i", type=int, default=0)
    p.add_argument("--K", type=float, default=None)
    p = sub.add_parser("graph", help="ball graph statistics and sparsity audit")
    _add_space(p)
    p.add_argument("--r", required=True)
    p.add_argument("--audit-t", type=int, default=None)
    p.add_argument("--vertex", type=int, default=0, help="vertex rank to audit")
    p = sub.add_parser("code", help="construct a code")
    _add_space(p)
    p.add_argument("--r", required=True)
    p.add_argument("--method", choices=METHODS, default="greedy_maximal")
    p.add_argument("--code-seed", type=int, default=None,
                   help="randomises the greedy order; omitted means deterministic")
    p = sub.add_parser("hardcore", help="Glauber estimate of hard-core occupancy")
    _add_space(p)
    p.add_argument("--r", required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--steps", type=int, default=None)
    for name in ("listdecode", "sweep"):
        p = sub.add_parser(name, help="random-code list-decoding witnesses"
                           if name == "listdecode" else "list-decoding sweep over message counts")
        p.add_argument("--q", type=int, default=2)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--p", type=float, required=True)
        p.add_argument("--L", type=int, default=None)
        p.add_argument("--epsilon", type=float, default=None)
        p.add_argument("--c", type=float, default=None)
        p.add_argument("--message-count", default=None)
        p.add_argument("--trials", type=int, default=1000)
    p = sub.add_parser("spherical", help="spherical cap constants and bounds")
    p.add_argument("--n", required=True)
    p.add_argument("--theta", required=True, help="radians, e.g. 1.0472 or pi/3")
    p.add_argument("--verify", action="store_true", help="run the cap-intersection Monte Carlo")
    for p in sub.choices.values():
        _add_common(p)
    return parser


def config_to_argv(cfg: dict) -> list[str]:
    """Flatten a RunConfig dict (as embedded in outputs) back into argv."""
    if "command" not in cfg:
        raise UsageError("config needs a 'command' field")
    argv = [cfg["command"]]

    def flag(key: str, value) -> None:
        if value is None or value is False:
            return
        argv.append("--" + key.replace("_", "-") if key not in ("K", "L") else "--" + key)
        if value is not True:
            argv.append(str(value))

    space = cfg.get("space") or {}
    if space:
        flag("space", space.get("kind"))
        for key in ("q", "n", "w"):
            if key in space:
                flag(key, space[key])
    for section in ("params", "budgets"):
        for key, value in (cfg.get(section) or {}).items():
            flag(key, value)
    for key in ("seed", "format", "output"):
        if key in cfg:
            flag(key, cfg[key])
    return argv


_SPACE_KEYS = ("space", "q", "n", "w")
_BUDGET_KEYS = ("samples", "enum_cap", "graph_cap")
_UNRECORDED = ("command", "format", "output", "seed", "jobs", "verbose", "config")


def run_config(args) -> dict:
    """The RunConfig of a parsed invocation; jobs and output path are not part of it."""
    values = vars(args)
    cfg = {"command": args.command, "seed": args.seed, "format": args.format}
    if "space" in values:
        cfg["space"] = {"kind": args.space, "q": args.q, "n": args.n, "w": args.w}
    cfg["budgets"] = {k: values[k] for k in _BUDGET_KEYS}
    skip = (_SPACE_KEYS if "space" in values else ()) + _BUDGET_KEYS + _UNRECORDED
    cfg["params"] = {k: v for k, v in sorted(values.items()) if k not in skip}
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def render(result: Result, cfg: dict, fmt: str, to_file: bool) -> str:
    header = f"intervol {__version__} config={config_hash(cfg)}"
    cfg_line = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    if fmt == "json":
        payload = {"header": header, "config": cfg, "result": result.data}
        if result.verdict is not None:
            payload["verdict"] = result.verdict.value
        return json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"
    lines = [f"# {header}", f"# config={cfg_line}"]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(result.columns), lineterminator="\n",
                                extrasaction="ignore")
        writer.writeheader()
        writer.writerows(result.rows)
        lines += [f"# {note}" for note in result.notes]
        return "\n".join(lines) + "\n" + buf.getvalue()
    body = result.text + "\n" if result.text else ""
    return "\n".join(lines) + "\n" + body if to_file else body


def run(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            with open(args.config) as fh:
                args = parser.parse_args(config_to_argv(json.load(fh)))
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            stream=sys.stderr, format="%(levelname)s %(message)s")
        args.samples = args.samples if args.samples is not None else _env_int(ENV_SAMPLES, 100_000)
        args.enum_cap = args.enum_cap if args.enum_cap is not None else _env_int(ENV_ENUM_CAP, ENUMERATION_CAP)
        args.graph_cap = args.graph_cap if args.graph_cap is not None else _env_int(ENV_GRAPH_CAP, GRAPH_CAP)
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        cfg = run_config(args)
        log.info("running %s config=%s", args.command, config_hash(cfg))
        result = COMMANDS[args.command](args)
        out = render(result, cfg, args.format, args.output is not None)
    except BudgetExceeded as exc:
        print(f"intervol: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, ValueError, KeyError, OSError) as exc:
        print(f"intervol: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    if result.verdict in (Verdict.FAIL, Verdict.INDETERMINATE):
        return EXIT_FAIL
    return EXIT_OK


def main() -> None:
    sys.exit(run())

"""Command line: ``eqvar simulate | discover | bench | bound``.

Exit codes: 0 success, 1 I/O failure, 2 bad flags or config, 3 ordering
exhausted before every variable was placed (p > n with ``--method td``).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .bench import ConfigError, load_config, run_benchmark
from .covariance import sample_covariance
from .edges import select_edges
from .errors import Exhausted
from .io import read_data_csv, write_data_csv, write_edges_csv, write_model, write_ordering
from .ordering import BoundInputs, OrderingConfig, discover_order, sample_size_bound_highdim, sample_size_bound_lowdim
from .sem import ErrorSpec, SemModel
from .simulate import FAMILIES, CoeffLaw, GraphRecipe, generate, make_rng, sample_data, sparse_pc

METHODS = {"td": "full", "td-hd": "subset", "bu": "bottomup"}


def _coeff(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")
    if not 0 < lo < hi:
        raise argparse.ArgumentTypeError("need 0 < LO < HI")
    return lo, hi


def _pc(text: str):
    if text in ("dense", "sparse"):
        return text
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a probability, 'dense' or 'sparse', got {text!r}")
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {v}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="eqvar", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a random SEM and sample data from it")
    sim.add_argument("--family", choices=FAMILIES, required=True)
    sim.add_argument("--p", type=_positive_int, required=True)
    sim.add_argument("--n", type=_positive_int, required=True)
    sim.add_argument("--pc", type=_pc, default=0.0)
    sim.add_argument("--coeff", type=_coeff, default=None, help="coefficient magnitudes LO,HI")
    sim.add_argument("--error", choices=("gaussian", "rademacher"), default="gaussian")
    sim.add_argument("--sigma2", type=float, default=1.0)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--header", action="store_true")
    sim.add_argument("--out", required=True, help="output directory")

    dis = sub.add_parser("discover", help="estimate a causal ordering (and edges) from data")
    dis.add_argument("--data", required=True)
    dis.add_argument("--method", choices=tuple(METHODS), required=True)
    dis.add_argument("--q", type=_positive_int)
    dis.add_argument("--folds", type=_positive_int, default=5)
    dis.add_argument("--seed", type=int, default=0)
    dis.add_argument("--rule", choices=("1se", "min"), default="1se")
    dis.add_argument("--order-only", action="store_true")
    dis.add_argument("--out", required=True, help="output directory")

    bn = sub.add_parser("bench", help="run a benchmark config")
    bn.add_argument("--config", required=True)
    bn.add_argument("--threads", type=_positive_int)
    bn.add_argument("--format", choices=("csv", "json", "md"), default="csv")
    bn.add_argument("--out", help="report path (default: stdout)")
    bn.add_argument("--full", action="store_true", help="use each config's full replicate counts")
    bn.add_argument("--timing", action="store_true", help="include wall-clock seconds")
    bn.add_argument("--replicates", type=_positive_int, help="override every replicate count")

    bd = sub.add_parser("bound", help="sample size sufficient for ordering recovery")
    bd.add_argument("--p", type=_positive_int, required=True)
    bd.add_argument("--q", type=_positive_int)
    bd.add_argument("--epsilon", type=float, default=0.05)
    bd.add_argument("--gamma2-over-sigma2", type=float, default=1.0)
    bd.add_argument("--max-sigma-jj", type=float, required=True)
    bd.add_argument("--zeta", type=float, required=True)
    bd.add_argument("--lambda-min", type=float, required=True)
    bd.add_argument("--sigma2", type=float, default=1.0)
    return ap


def cmd_simulate(args, ap) -> int:
    p = args.p
    pc = sparse_pc(p) if args.pc == "sparse" else 0.3 if args.pc == "dense" else args.pc
    coeff = args.coeff or ((0.1, 1.0) if args.family == "peters" else (0.3, 1.0))
    if args.family.startswith("highdim") and p < 4:
        ap.error("--p must be at least 4 for high-dimensional families")
    if args.sigma2 <= 0:
        ap.error("--sigma2 must be positive")
    recipe = GraphRecipe(args.family, p, CoeffLaw(*coeff), seed=args.seed, pc=pc)
    errors = ErrorSpec(args.error, args.sigma2)
    model = SemModel(generate(recipe), args.sigma2, errors)
    X = sample_data(model, args.n, make_rng(args.seed, 1))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_data_csv(out / "data.csv", X, header=args.header)
    write_model(out, model)
    return 0


def cmd_discover(args, ap) -> int:
    if args.method == "td-hd" and args.q is None:
        ap.error("--method td-hd requires --q")
    if args.folds < 2:
        ap.error("--folds must be at least 2")
    X = read_data_csv(args.data)
    cfg = OrderingConfig(METHODS[args.method], args.q if args.method == "td-hd" else None)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        order = discover_order(sample_covariance(X), cfg)
    except Exhausted as exc:
        write_ordering(
            out / "ordering.json",
            {
                "sequence": [v + 1 for v in exc.sequence],
                "step_criteria": list(exc.step_criteria),
                "step_subsets": [[v + 1 for v in s] for s in exc.step_subsets],
                "exhausted_at_step": exc.step,
            },
        )
        print(f"eqvar: {exc}", file=sys.stderr)
        return 3
    write_ordering(out / "ordering.json", order)
    if not args.order_only:
        write_edges_csv(out / "edges.csv", select_edges(X, order, args.folds, args.seed, args.rule))
    return 0


def cmd_bench(args, ap) -> int:
    threads = args.threads
    if threads is None:
        env = os.environ.get("EQVAR_THREADS", "1")
        try:
            threads = max(1, int(env))
        except ValueError:
            ap.error(f"EQVAR_THREADS must be an integer, got {env!r}")
    try:
        config = load_config(args.config, full=args.full, replicates=args.replicates)
    except ConfigError as exc:
        ap.error(f"--config: {exc}")
    report = run_benchmark(config, threads=threads)
    render = {"csv": report.to_csv, "json": report.to_json, "md": report.to_markdown}[args.format]
    text = render(timing=args.timing)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_bound(args, ap) -> int:
    try:
        b = BoundInputs(
            p=args.p, epsilon=args.epsilon, gamma2_over_sigma2=args.gamma2_over_sigma2,
            max_sigma_jj=args.max_sigma_jj, zeta=args.zeta, lambda_min=args.lambda_min,
            sigma2=args.sigma2, q=args.q,
        )
    except ValueError as exc:
        ap.error(str(exc))
    n = sample_size_bound_highdim(b) if args.q else sample_size_bound_lowdim(b)
    print(json.dumps({"n": n, "criterion": "subset" if args.q else "full"}))
    return 0


COMMANDS = {"simulate": cmd_simulate, "discover": cmd_discover, "bench": cmd_bench, "bound": cmd_bound}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return COMMANDS[args.command](args, ap)
    except OSError as exc:
        print(f"eqvar: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        # malformed input files and model errors
        print(f"eqvar: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

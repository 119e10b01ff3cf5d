"""Command-line entry point: ``lrgm {simulate,match,bench,register}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import graphon as gr
from . import io
from .bench import load_config, run_bench, simulate_instance, trial_seeds
from .laplace import LossConfig
from .pipeline import (
    SignatureMismatch,
    embed_pair,
    icp_baseline,
    match_graphs,
    register_points,
    registration_error,
    rmse_metric,
)

logger = logging.getLogger("lrgm")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SIGNATURE = 2


def _signature(text: str) -> tuple[int, int]:
    try:
        pos, neg = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected POS,NEG, e.g. 3,1") from None
    if pos < 0 or neg < 0:
        raise argparse.ArgumentTypeError("counts must be non-negative")
    return pos, neg


def _n_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers") from None


def _add_loss_flags(p: argparse.ArgumentParser, defaults: bool) -> None:
    # bench leaves these unset so a config file can supply them
    d = LossConfig()
    p.add_argument("--ms", type=int, default=d.m_s if defaults else None, help="frequency samples")
    p.add_argument("--R", type=float, default=d.R if defaults else None, help="frequency truncation")
    p.add_argument("--gamma", type=float, default=d.gamma if defaults else None,
                   help="real part of the frequencies")
    p.add_argument("--p", type=int, default=4 if defaults else None, help="grid resolution")
    p.add_argument("--seed", type=int, default=0 if defaults else None)
    p.add_argument("--budget", type=int, default=None, help="loss evaluations per start")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrgm", description="Unseeded low-rank graph matching.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a shuffled pair of graphs")
    sim.add_argument("--config", type=Path)
    sim.add_argument("--graphon")
    sim.add_argument("--n", type=_n_list, help="node count (first value is used)")
    sim.add_argument("--rep", type=int, help="repetition index, selects the derived seed")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--noise-sigma", dest="noise_sigma", help="number, 'none' or 'auto'")
    sim.add_argument("--independent-latents", action="store_true")
    sim.add_argument("--format", choices=("csv", "bin"), default="csv")
    sim.add_argument("--out", required=True, type=Path, help="output directory")

    match = sub.add_parser("match", help="match two adjacency matrices")
    match.add_argument("A1", type=Path)
    match.add_argument("A2", type=Path)
    match.add_argument("--d", type=int, required=True)
    _add_loss_flags(match, defaults=True)
    match.add_argument("--signature", type=_signature, help="force (positive, negative) counts")
    match.add_argument("--method", choices=("laplace", "icp"), default="laplace")
    match.add_argument("--truth", type=Path, help="true permutation, one index per line")
    match.add_argument("--prob", type=Path, help="probability matrix used for the RMSE")
    match.add_argument("--out", type=Path, help="result JSON (default: stdout)")

    bench = sub.add_parser("bench", help="repeated simulation study")
    bench.add_argument("--config", type=Path)
    bench.add_argument("--graphon")
    bench.add_argument("--n", type=_n_list)
    bench.add_argument("--reps", type=int)
    bench.add_argument("--d", type=int)
    _add_loss_flags(bench, defaults=False)
    bench.add_argument("--noise-sigma", dest="noise_sigma")
    bench.add_argument("--method", action="append", choices=("laplace", "icp"),
                       help="repeatable; default laplace")
    bench.add_argument("--independent-latents", action="store_true")
    bench.add_argument("--no-timings", action="store_true", help="write zero timings")
    bench.add_argument("--out", type=str)

    reg = sub.add_parser("register", help="register two point clouds")
    reg.add_argument("X", type=Path)
    reg.add_argument("Y", type=Path)
    _add_loss_flags(reg, defaults=True)
    reg.add_argument("--method", choices=("laplace", "icp"), default="laplace")
    reg.add_argument("--truth", type=Path, help="true permutation, one index per line")
    reg.add_argument("--out", type=Path, help="result JSON (default: stdout)")
    return parser


def _emit(obj: dict, out: Path | None) -> None:
    if out is None:
        json.dump(obj, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        io.write_json(out, obj)


def _loss_config(args) -> LossConfig:
    return LossConfig(gamma=args.gamma, R=args.R, m_s=args.ms)


def _read_truth(path: Path, n: int) -> np.ndarray:
    perm = io.read_vector(path, integer=True)
    if perm.shape != (n,):
        raise io.FormatError(f"{path}: permutation has {perm.size} entries, expected {n}")
    gr.invert_permutation(perm)
    return perm


def cmd_simulate(args) -> int:
    overrides = dict(graphon=args.graphon, n=args.n, seed=args.seed, rep=args.rep,
                     noise_sigma=args.noise_sigma)
    if args.independent_latents:
        overrides["shared_latents"] = False
    cfg = load_config(args.config, **overrides)
    n = cfg.n[0]
    data_seed, match_seed = trial_seeds(cfg.seed, cfg.graphon, n, cfg.rep)
    spec = gr.get_graphon(cfg.graphon)
    inst = simulate_instance(spec, n, np.random.default_rng(data_seed), cfg.sigma(), cfg.shared_latents)

    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    ext = ".csv" if args.format == "csv" else ".bin"
    io.write_matrix(out / f"W{ext}", inst.W1)
    if not cfg.shared_latents:
        io.write_matrix(out / f"W2{ext}", inst.W2)
    io.write_matrix(out / f"A1{ext}", inst.A1)
    io.write_matrix(out / f"A2{ext}", inst.A2)
    io.write_vector(out / "perm.csv", inst.perm, integer=True)
    io.write_vector(out / "latents1.csv", inst.u1)
    io.write_vector(out / "latents2.csv", inst.u2)
    io.write_json(out / "manifest.json", {
        "graphon": cfg.graphon,
        "n": n,
        "rep": cfg.rep,
        "seed": cfg.seed,
        "data_seed": data_seed,
        "match_seed": match_seed,
        "noise_sigma": cfg.sigma(),
        "shared_latents": cfg.shared_latents,
    })
    logger.info("wrote instance to %s", out)
    return EXIT_OK


def cmd_match(args) -> int:
    A1 = io.read_symmetric(args.A1)
    A2 = io.read_symmetric(args.A2)
    if A1.shape != A2.shape:
        raise io.FormatError(f"matrix sizes differ: {A1.shape} vs {A2.shape}")
    if args.d < 1:
        raise ValueError("--d must be >= 1")
    rng = np.random.default_rng(args.seed)
    if args.method == "laplace":
        res = match_graphs(A1, A2, args.d, _loss_config(args), p=args.p, rng=rng,
                           signature=args.signature, budget=args.budget)
        e1, e2 = res.embeddings
    else:
        e1, e2 = embed_pair(A1, A2, args.d, args.signature)
        res = icp_baseline(e1.X, e2.X, rng=rng)
    report = res.to_dict()
    report["signature"] = list(e1.signature)
    report["registration_error"] = registration_error(e1.X, e2.X, res.matching)
    if args.truth is not None:
        truth = _read_truth(args.truth, A1.shape[0])
        W = io.read_symmetric(args.prob) if args.prob is not None else A1
        report["rmse"] = 100.0 * rmse_metric(W, res.perm, truth)
        report["correct_fraction"] = float(np.mean(res.perm == truth))
    _emit(report, args.out)
    return EXIT_OK


def cmd_register(args) -> int:
    X = io.read_matrix(args.X)
    Y = io.read_matrix(args.Y)
    if X.shape[1] != Y.shape[1]:
        raise io.FormatError(f"clouds have dimensions {X.shape[1]} and {Y.shape[1]}")
    rng = np.random.default_rng(args.seed)
    if args.method == "laplace":
        res = register_points(X, Y, _loss_config(args), p=args.p, rng=rng, budget=args.budget)
    else:
        res = icp_baseline(X, Y, rng=rng)
    report = res.to_dict()
    if res.perm is not None:
        report["registration_error"] = registration_error(X, Y, res.perm)
        if args.truth is not None:
            truth = _read_truth(args.truth, X.shape[0])
            report["correct_fraction"] = float(np.mean(res.perm == truth))
    _emit(report, args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    overrides = dict(
        graphon=args.graphon, n=args.n, reps=args.reps, d=args.d, m_s=args.ms, R=args.R,
        gamma=args.gamma, p=args.p, seed=args.seed, budget=args.budget,
        noise_sigma=args.noise_sigma, out=args.out,
        methods=tuple(dict.fromkeys(args.method)) if args.method else None,
    )
    if args.independent_latents:
        overrides["shared_latents"] = False
    if args.no_timings:
        overrides["record_timings"] = False
    cfg = load_config(args.config, **overrides)
    agg, detail, rows = run_bench(cfg)
    for row in rows:
        print(f"{row.graphon} n={row.n} {row.method}: 100*RMSE {row.rmse_mean:.3f} "
              f"(se {row.rmse_se:.3f}), {row.time_mean_s:.2f} s")
    print(f"wrote {agg} and {detail}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "match": cmd_match,
    "bench": cmd_bench,
    "register": cmd_register,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except SignatureMismatch as exc:
        print(f"lrgm: {exc}", file=sys.stderr)
        return EXIT_SIGNATURE
    except (OSError, ValueError, KeyError) as exc:
        print(f"lrgm: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

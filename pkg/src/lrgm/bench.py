"""Simulation experiments: repeated graph-matching trials and their summary tables."""
from __future__ import annotations

import csv
import logging
import math
import os
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import graphon as gr
from .laplace import LossConfig
from .pipeline import (
    embed_pair,
    icp_baseline,
    match_graphs,
    matching_error,
    registration_error,
    rmse_metric,
)

logger = logging.getLogger(__name__)

NOISY_PRESETS = ("graphon2", "graphon3")
DEFAULT_NOISE_SIGMA = math.sqrt(0.2)
AGGREGATE_COLUMNS = (
    "graphon", "n", "method", "rmse_mean", "rmse_se", "reg_err_mean", "time_mean_s",
    "embed_mean_s", "optimize_mean_s", "assign_mean_s",
)
DETAIL_COLUMNS = (
    "graphon", "n", "rep", "method", "data_seed", "match_seed", "d", "d_pos", "d_neg",
    "rmse", "reg_err", "loss", "loss_evaluations", "time_s", "embed_s", "optimize_s", "assign_s",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """One benchmark sweep.

    ``noise_sigma`` is ``"auto"`` (Gaussian noise with sd ``sqrt(0.2)`` for
    the noisy presets, Bernoulli edges otherwise), ``"none"`` for Bernoulli
    edges, or a number.  ``signature_from`` picks the embedding sign pattern:
    ``"graphon"`` uses the kernel spectrum, ``"data"`` the top eigenvalues of
    each adjacency matrix.
    """

    graphon: str = "graphon1"
    n: tuple[int, ...] = (100,)
    reps: int = 10
    d: int | None = None
    gamma: float = 1.0
    R: float = 15.0
    m_s: int = 500
    p: int = 4
    noise_sigma: str | float = "auto"
    seed: int = 0
    out: str = "bench_out"
    budget: int | None = None
    methods: tuple[str, ...] = ("laplace",)
    shared_latents: bool = True
    signature_from: str = "graphon"
    record_timings: bool = True
    rep: int = 0

    def __post_init__(self):
        if not self.n or min(self.n) < 1:
            raise ValueError("n values must be >= 1")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.d is not None and self.d < 1:
            raise ValueError("d must be >= 1")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.budget is not None and self.budget < 1:
            raise ValueError("budget must be >= 1")
        bad = set(self.methods) - {"laplace", "icp"}
        if bad or not self.methods:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if self.signature_from not in ("graphon", "data"):
            raise ValueError("signature_from must be 'graphon' or 'data'")
        if self.rep < 0:
            raise ValueError("rep must be >= 0")
        self.loss_config()
        self.sigma()

    def loss_config(self) -> LossConfig:
        return LossConfig(gamma=self.gamma, R=self.R, m_s=self.m_s)

    def sigma(self) -> float | None:
        """Gaussian noise sd, or ``None`` for Bernoulli edges."""
        value = self.noise_sigma
        if isinstance(value, str):
            key = value.strip().lower()
            if key == "auto":
                return DEFAULT_NOISE_SIGMA if self.graphon.lower() in NOISY_PRESETS else None
            if key in ("none", "bernoulli"):
                return None
            value = float(key)
        if value < 0:
            raise ValueError("noise sigma must be non-negative")
        return float(value)


@dataclass
class ReportRow:
    graphon: str
    n: int
    method: str
    rmse_mean: float
    rmse_se: float
    reg_err_mean: float
    time_mean_s: float
    stage_means: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        rec = {k: v for k, v in asdict(self).items() if k != "stage_means"}
        for stage in ("embed", "optimize", "assign"):
            rec[f"{stage}_mean_s"] = self.stage_means.get(stage, 0.0)
        return rec


# ---------------------------------------------------------------- seeds

def graphon_index(name: str) -> int:
    return zlib.crc32(name.strip().lower().encode())


def trial_seeds(seed: int, graphon: str, n: int, rep: int) -> tuple[int, int]:
    """Independent ``(data_seed, match_seed)`` for one trial."""
    ss = np.random.SeedSequence([seed, graphon_index(graphon), n, rep])
    data_seed, match_seed = ss.generate_state(2)
    return int(data_seed), int(match_seed)


def default_d(spec: gr.GraphonSpec) -> int:
    """Numerical rank of the kernel (at most 10)."""
    eig = gr.kernel_spectrum(spec, k=10)
    return max(1, int(np.sum(np.abs(eig) > 1e-6 * np.abs(eig[0]))))


# ---------------------------------------------------------------- data

@dataclass
class Instance:
    W1: np.ndarray
    W2: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    perm: np.ndarray
    u1: np.ndarray
    u2: np.ndarray


def simulate_instance(spec: gr.GraphonSpec, n: int, rng: np.random.Generator,
                      sigma: float | None, shared_latents: bool = True) -> Instance:
    """Two realizations with the second relabelled by a random permutation.

    ``W2`` is the second probability matrix in the relabelled order, so
    ``W2 == apply_permutation(W1, perm)`` when latents are shared.
    """
    u1 = gr.sample_latents(n, rng)
    W1 = gr.build_prob_matrix(spec, u1)
    A1 = gr.sample_adjacency(W1, rng, sigma)
    if shared_latents:
        u2, W2 = u1, W1
    else:
        u2 = gr.sample_latents(n, rng)
        W2 = gr.build_prob_matrix(spec, u2)
    A2 = gr.sample_adjacency(W2, rng, sigma)
    perm = gr.sample_permutation(n, rng)
    inv = gr.invert_permutation(perm)
    return Instance(
        W1=W1,
        W2=gr.apply_permutation(W2, perm),
        A1=A1,
        A2=gr.apply_permutation(A2, perm),
        perm=perm,
        u1=u1,
        u2=u2[inv],
    )


def _trial_error(inst: Instance, perm_hat: np.ndarray, shared: bool) -> float:
    if shared:
        return rmse_metric(inst.W1, perm_hat, inst.perm)
    return matching_error(inst.W1, inst.W2, perm_hat)


def run_trial(cfg: ExperimentConfig, n: int, rep: int) -> list[dict]:
    """All configured methods on one simulated pair; one detail record per method."""
    spec = gr.get_graphon(cfg.graphon)
    d = cfg.d or default_d(spec)
    signature = gr.kernel_signature(spec, d) if cfg.signature_from == "graphon" else None
    data_seed, match_seed = trial_seeds(cfg.seed, cfg.graphon, n, rep)
    inst = simulate_instance(spec, n, np.random.default_rng(data_seed), cfg.sigma(), cfg.shared_latents)

    records = []
    for method in cfg.methods:
        rng = np.random.default_rng(match_seed)
        if method == "laplace":
            res = match_graphs(inst.A1, inst.A2, d, cfg.loss_config(), p=cfg.p, rng=rng,
                               signature=signature, budget=cfg.budget)
            e1, e2 = res.embeddings
            nfev = res.diagnostics["loss_evaluations"]
        else:
            t0 = time.perf_counter()
            e1, e2 = embed_pair(inst.A1, inst.A2, d, signature)
            t_embed = time.perf_counter() - t0
            res = icp_baseline(e1.X, e2.X, rng=rng)
            res.timings = {"embed": t_embed, **res.timings}
            nfev = 0
        perm_hat = res.perm
        timings = dict(res.timings)
        rec = {
            "graphon": cfg.graphon,
            "n": n,
            "rep": rep,
            "method": method,
            "data_seed": data_seed,
            "match_seed": match_seed,
            "d": e1.d,
            "d_pos": e1.d_pos,
            "d_neg": e1.d_neg,
            "rmse": 100.0 * _trial_error(inst, perm_hat, cfg.shared_latents),
            "reg_err": registration_error(e1.X, e2.X, perm_hat),
            "loss": float(res.loss),
            "loss_evaluations": nfev,
            "time_s": sum(timings.values()),
            "embed_s": timings.get("embed", 0.0),
            "optimize_s": timings.get("optimize", timings.get("icp", 0.0)),
            "assign_s": timings.get("assign", 0.0),
        }
        if not cfg.record_timings:
            for key in ("time_s", "embed_s", "optimize_s", "assign_s"):
                rec[key] = 0.0
        records.append(rec)
    return records


def aggregate(records: list[dict]) -> list[ReportRow]:
    """Mean and standard error (``sd / sqrt(reps)``) per (graphon, n, method)."""
    cells: dict[tuple, list[dict]] = {}
    for rec in records:
        cells.setdefault((rec["graphon"], rec["n"], rec["method"]), []).append(rec)
    rows = []
    for (g, n, method), recs in sorted(cells.items()):
        rmse = np.array([r["rmse"] for r in recs])
        se = float(np.std(rmse, ddof=1) / np.sqrt(rmse.size)) if rmse.size > 1 else 0.0
        rows.append(ReportRow(
            graphon=g,
            n=n,
            method=method,
            rmse_mean=float(np.mean(rmse)),
            rmse_se=se,
            reg_err_mean=float(np.mean([r["reg_err"] for r in recs])),
            time_mean_s=float(np.mean([r["time_s"] for r in recs])),
            stage_means={s: float(np.mean([r[f"{s}_s"] for r in recs]))
                         for s in ("embed", "optimize", "assign")},
        ))
    return rows


# ---------------------------------------------------------------- output

def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def write_csv(path: Path, columns, records) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for rec in records:
            w.writerow([_fmt(rec[c]) for c in columns])


def _detail_key(rec: dict):
    return (rec["graphon"], rec["n"], rec["rep"], rec["method"])


def thread_cap() -> int:
    """Worker count from ``LRGM_THREADS`` (default: all cores)."""
    raw = os.environ.get("LRGM_THREADS", "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise ValueError(f"LRGM_THREADS must be an integer, got {raw!r}") from None
        return max(1, value)
    return os.cpu_count() or 1


def run_bench(cfg: ExperimentConfig, workers: int | None = None) -> tuple[Path, Path, list[ReportRow]]:
    """Run every (n, rep) trial and write ``aggregate.csv`` and ``detail.csv`` under ``cfg.out``.

    Finished trials are appended to ``detail.csv.partial`` as they complete;
    the final files are sorted, so their bytes do not depend on scheduling.
    """
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    partial = out / "detail.csv.partial"
    jobs = [(n, rep) for n in cfg.n for rep in range(cfg.reps)]
    workers = min(workers or thread_cap(), len(jobs))

    records: list[dict] = []
    with partial.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DETAIL_COLUMNS)

        def collect(recs):
            for rec in recs:
                w.writerow([_fmt(rec[c]) for c in DETAIL_COLUMNS])
                records.append(rec)
            fh.flush()

        if workers <= 1:
            for n, rep in jobs:
                logger.info("trial %s n=%d rep=%d", cfg.graphon, n, rep)
                collect(run_trial(cfg, n, rep))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(run_trial, cfg, n, rep) for n, rep in jobs]
                for fut in futures:
                    collect(fut.result())

    records.sort(key=_detail_key)
    detail = out / "detail.csv"
    write_csv(detail, DETAIL_COLUMNS, records)
    partial.unlink()
    rows = aggregate(records)
    agg = out / "aggregate.csv"
    write_csv(agg, AGGREGATE_COLUMNS, [r.as_record() for r in rows])
    return agg, detail, rows


# ---------------------------------------------------------------- config files

def _parse_value(name: str, raw: str):
    raw = raw.strip()
    if name in ("n", "methods"):
        items = [x.strip() for x in raw.replace(";", ",").split(",") if x.strip()]
        return tuple(int(x) for x in items) if name == "n" else tuple(items)
    if name in ("reps", "m_s", "p", "seed", "rep"):
        return int(raw)
    if name in ("d", "budget"):
        return None if raw.lower() in ("", "none", "auto") else int(raw)
    if name in ("gamma", "R"):
        return float(raw)
    if name in ("shared_latents", "record_timings"):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    return raw


_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}
_ALIASES = {"ms": "m_s", "noise-sigma": "noise_sigma", "r": "R"}


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment.  Unknown keys are an error."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        name = _ALIASES.get(key.lower(), key.replace("-", "_"))
        if name not in _FIELD_NAMES:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        try:
            values[name] = _parse_value(name, raw)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return values


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Defaults, then the config file, then non-``None`` overrides."""
    values = parse_config_text(Path(path).read_text()) if path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return replace(ExperimentConfig(), **values)

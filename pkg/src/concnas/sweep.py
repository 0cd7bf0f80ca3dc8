"""Seeded Monte-Carlo sweeps over generators, samples and unit counts.

A sweep draws one seed per sample index from the master seed, runs the
full pipeline (generate, orient, elaborate, score, place, simulate) for
every requested generator and unit count, and emits one row per
(generator, sample, units).  Workers share nothing; rows are merged by
task order, so the output does not depend on the worker count.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from statistics import mean, median
from typing import Dict, List, Sequence, Tuple

from .archmodel import elaborate
from .dagify import longest_path_length, orient
from .deploy import CostParams, balance_entropy, group_chains, place_greedy, simulate
from .hypart import build_hypergraph
from .randgraph import GeneratorConfig, generate
from .rng import sample_seed
from .score import DEFAULT_EPS_GRID, DEFAULT_WEIGHTS, concurrency_score

DEFAULT_GENERATORS = ("er", "ba", "ws", "dp", "fb")
DEFAULT_UNITS = (4, 6, 8, 10)

@dataclass(frozen=True)
class SweepConfig:
    """Everything a sweep needs; defaults match the reference experiment."""

    generators: Tuple[str, ...] = DEFAULT_GENERATORS
    n_vertices: int = 40
    samples: int = 1000
    units: Tuple[int, ...] = DEFAULT_UNITS
    master_seed: int = 0
    er_p: float = 0.12
    ba_m: int = 3
    ws_k: int = 6
    ws_p: float = 0.75
    dp_p: float = 0.4
    dp_alpha: float = 2.0
    dp_beta: float = 2.0
    fb_stages: int = 3
    input_spatial: int = 32
    input_channels: int = 16
    channel_limit: int = 256
    staging: str = "probabilistic"
    staging_prob: float = 0.5
    bytes_per_element: int = 4
    eps_grid: Tuple[float, ...] = DEFAULT_EPS_GRID
    weights: Tuple[float, float, float] = DEFAULT_WEIGHTS
    cost: CostParams = field(default_factory=CostParams)
    workers: int = 1

def generator_config(cfg: SweepConfig, kind: str, seed: int) -> GeneratorConfig:
    n = cfg.n_vertices
    if kind == "er":
        return GeneratorConfig(kind="er", n_vertices=n, seed=seed, p=cfg.er_p)
    if kind == "ba":
        return GeneratorConfig(kind="ba", n_vertices=n, seed=seed, m=cfg.ba_m)
    if kind == "ws":
        return GeneratorConfig(kind="ws", n_vertices=n, seed=seed, k=cfg.ws_k, p=cfg.ws_p)
    if kind == "dp":
        return GeneratorConfig(
            kind="dp", n_vertices=n, seed=seed, p=cfg.dp_p, alpha=cfg.dp_alpha, beta=cfg.dp_beta
        )
    if kind == "fb":
        return GeneratorConfig(
            kind="fb", n_vertices=n, seed=seed, k=cfg.ws_k, p=cfg.ws_p, stages=cfg.fb_stages
        )
    raise ValueError(f"unknown generator kind: {kind!r}")

def run_sample(cfg: SweepConfig, kind: str, index: int) -> List[Dict]:
    """All rows for one (generator, sample index) pair."""
    seed = sample_seed(cfg.master_seed, index)
    graph = generate(generator_config(cfg, kind, seed))
    dag = orient(graph)
    kwargs = dict(
        input_shape=(cfg.input_spatial, cfg.input_channels),
        channel_limit=cfg.channel_limit,
        staging_prob=cfg.staging_prob,
        bytes_per_element=cfg.bytes_per_element,
        seed=seed,
    )
    arch = elaborate(dag, staging=cfg.staging, **kwargs)
    params_greedy = elaborate(dag, staging="greedy", **kwargs).total_params
    h = build_hypergraph(arch)
    gd = group_chains(arch)
    rows = []
    for n in cfg.units:
        report = concurrency_score(arch, n, cfg.eps_grid, cfg.weights, seed=seed, hypergraph=h)
        placement = place_greedy(gd, n)
        sim = simulate(gd, placement, cfg.cost)
        rows.append(
            {
                "generator": kind,
                "sample": index,
                "seed": seed,
                "n_units": n,
                "edges": len(graph.edges),
                "dag_vertices": dag.n_vertices,
                "longest_path": longest_path_length(dag),
                "eta": report.eta,
                "u_c": report.u_c,
                "cs": report.best_cs,
                "cs_eps": report.best.eps,
                "lam": report.best.lam,
                "lam_norm": report.best.lam_norm,
                "imbalance": report.best.imbalance,
                "best_effort": int(report.best.best_effort),
                "makespan": sim.makespan,
                "speedup": sim.speedup_vs_single_unit,
                "entropy": balance_entropy(gd, placement),
                "params": arch.total_params,
                "params_greedy": params_greedy,
                "flops": arch.total_flops,
                "groups": len(gd.groups),
            }
        )
    return rows

def _run_task(args: Tuple[SweepConfig, str, int]) -> List[Dict]:
    return run_sample(*args)

def run_sweep(cfg: SweepConfig) -> List[Dict]:
    """Rows for the whole grid, ordered by (generator, sample, units)."""
    tasks = [(cfg, kind, i) for kind in cfg.generators for i in range(cfg.samples)]
    if cfg.workers > 1:
        with Pool(cfg.workers) as pool:
            chunks = pool.map(_run_task, tasks, chunksize=8)
    else:
        chunks = [_run_task(t) for t in tasks]
    rows: List[Dict] = []
    for chunk in chunks:
        rows.extend(chunk)
    return rows

def summarize(rows: Sequence[Dict]) -> List[Dict]:
    """Per (generator, units) means and medians; latency is also reported
    normalized to the fb generator's mean at the same unit count."""
    keys = sorted({(r["generator"], r["n_units"]) for r in rows})
    fb_mean: Dict[int, float] = {}
    for gen, n in keys:
        if gen == "fb":
            fb_mean[n] = mean(r["makespan"] for r in rows if r["generator"] == "fb" and r["n_units"] == n)
    out = []
    for gen, n in keys:
        sub = [r for r in rows if r["generator"] == gen and r["n_units"] == n]
        lat = mean(r["makespan"] for r in sub)
        out.append(
            {
                "generator": gen,
                "n_units": n,
                "samples": len(sub),
                "mean_cs": mean(r["cs"] for r in sub),
                "median_cs": median(r["cs"] for r in sub),
                "mean_lam": mean(r["lam"] for r in sub),
                "mean_eta": mean(r["eta"] for r in sub),
                "mean_imbalance": mean(r["imbalance"] for r in sub),
                "mean_latency": lat,
                "latency_vs_fb": lat / fb_mean[n] if fb_mean.get(n) else float("nan"),
                "mean_speedup": mean(r["speedup"] for r in sub),
                "median_entropy": median(r["entropy"] for r in sub),
                "mean_params": mean(r["params"] for r in sub),
                "mean_params_greedy": mean(r["params_greedy"] for r in sub),
            }
        )
    return out

def write_rows_csv(rows: Sequence[Dict], path: str | Path) -> None:
    if not rows:
        Path(path).write_text("")
        return
    fields = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})

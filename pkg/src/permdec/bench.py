"""Rotation-count and scalar-mult statistics over sampled permutations.

For each size the bench samples uniform random permutations (per-sample seed
= base seed + index), builds the mask-reduced routing network, and
aggregates the per-level rotation profile together with the priced
scalar-multiplication total. Sampling can fan out over worker processes;
results are keyed by sample index, so the aggregate does not depend on
completion order.

CSV schema (one row per size and level):

    n,samples,seed,level,mean_rotations,std_total,mean_total,mean_scalar_mult

The std_total/mean_total/mean_scalar_mult columns repeat each size's
aggregate on all of its level rows.
"""

from __future__ import annotations

import csv
import io
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .costmodel import CostParams, chain_cost
from .network import build_network, reduce_masks
from .slots import Permutation

CSV_HEADER = ("n,samples,seed,level,mean_rotations,"
              "std_total,mean_total,mean_scalar_mult")


def _sample(job: tuple[int, int, int]) -> tuple[int, dict[int, int], int]:
    """One permutation: (index, per-level rotation counts, scalar mults)."""
    idx, n, seed = job
    p = Permutation.random(n, random.Random(seed))
    net = reduce_masks(build_network(p))
    rep = chain_cost(net, CostParams())
    return idx, rep.per_level, rep.total


@dataclass
class BenchResult:
    n: int
    samples: int
    seed: int
    per_level_mean: dict[int, float]
    total_mean: float
    total_std: float
    scalar_mean: float

    def to_json(self) -> dict:
        return {
            "n": self.n, "samples": self.samples, "seed": self.seed,
            "per_level_mean": {str(k): v for k, v in
                               sorted(self.per_level_mean.items())},
            "total_mean": self.total_mean, "total_std": self.total_std,
            "scalar_mult_mean": self.scalar_mean,
        }


def bench_networks(n: int, samples: int = 20, seed: int = 0,
                   workers: int = 1) -> BenchResult:
    jobs = [(i, n, seed + i) for i in range(samples)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_sample, jobs))
    else:
        raw = [_sample(j) for j in jobs]
    raw.sort(key=lambda r: r[0])

    levels = sorted({lv for _, per, _ in raw for lv in per})
    per_mean = {lv: sum(per.get(lv, 0) for _, per, _ in raw) / samples
                for lv in levels}
    totals = [sum(per.values()) for _, per, _ in raw]
    scalars = [c for _, _, c in raw]
    return BenchResult(
        n, samples, seed, per_mean,
        total_mean=statistics.fmean(totals),
        total_std=statistics.pstdev(totals),
        scalar_mean=statistics.fmean(scalars))


def bench_csv(results: list[BenchResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER.split(","))
    for r in results:
        for lv in sorted(r.per_level_mean):
            w.writerow([r.n, r.samples, r.seed, lv,
                        f"{r.per_level_mean[lv]:.3f}",
                        f"{r.total_std:.3f}", f"{r.total_mean:.3f}",
                        f"{r.scalar_mean:.1f}"])
    return buf.getvalue()

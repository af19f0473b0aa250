"""Total-variation distance between sampled and exact path frequencies as
the sample size grows.  Expect roughly n^(-1/2) decay."""

from __future__ import annotations

import argparse
import dataclasses
import math
import statistics
import time
from dataclasses import dataclass

from qmtree.metaspace import build_metaspace, uniform_q
from qmtree.sampling import compare_empirical, sample_paths, total_variation
from qmtree.treespec import load_tree_spec
from qmtree.vorobev import CONTEXTS, VorobevParams, build_vorobev


@dataclass
class ConvergenceConfig:
    spec: str = ""
    sizes: str = "1000,10000,100000,1000000"
    repeats: int = 5
    seed: int = 0
    workers: int = 4


def run(cfg: ConvergenceConfig) -> int:
    if cfg.spec:
        ms = load_tree_spec(cfg.spec).build().metaspace
    else:
        ms = build_metaspace(build_vorobev(VorobevParams("1/2", "1/2", "1/2")), uniform_q(CONTEXTS))
    print(f"{'n':>9}  {'mean TV':>10}  {'TV*sqrt(n)':>10}  {'max |z|':>8}  {'secs':>6}")
    worst_z = 0.0
    for n in (int(s) for s in cfg.sizes.split(",")):
        t0 = time.perf_counter()
        tvs, zs = [], []
        for r in range(cfg.repeats):
            run_ = sample_paths(ms, n, cfg.seed + r, cfg.workers)
            tvs.append(total_variation(run_, ms))
            zs.append(compare_empirical(run_, ms).max_abs_z)
        tv = statistics.fmean(tvs)
        worst_z = max(worst_z, max(zs))
        print(f"{n:>9}  {tv:>10.2e}  {tv * math.sqrt(n):>10.3f}  {max(zs):>8.3f}  {time.perf_counter() - t0:>6.2f}")
    return 0 if worst_z <= 4 else 2


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    for f in dataclasses.fields(ConvergenceConfig):
        ap.add_argument(f"--{f.name.replace('_', '-')}", type=type(f.default), default=f.default)
    return run(ConvergenceConfig(**vars(ap.parse_args())))


if __name__ == "__main__":
    raise SystemExit(main())

"""Monte Carlo paths through the two-stage measurement tree.

Stream splitting: sample indices are cut into consecutive blocks of
``BLOCK_SIZE``; block ``b`` draws from a Philox generator keyed by
``SeedSequence([seed, b])``.  Counts therefore depend only on (seed, n,
metaspace), never on how blocks are spread over worker threads.

Within a context the draw selects an atom of that context's algebra and
reports the atom's lowest-index point, so a sampled path never carries
information finer than the context can observe.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .context import ContextId
from .metaspace import Metaspace

BLOCK_SIZE = 1 << 14


@dataclass(frozen=True)
class SampleRun:
    seed: int
    n: int
    counts: Mapping[tuple[ContextId, int], int]

    def __post_init__(self) -> None:
        if sum(self.counts.values()) != self.n:
            raise ValueError("counts do not add up to n")

    def context_counts(self) -> dict[ContextId, int]:
        out: Counter = Counter()
        for (c, _), k in self.counts.items():
            out[c] += k
        return dict(out)

    def to_json(self, ms: Metaspace) -> dict:
        labels = ms.space.labels
        return {
            "seed": self.seed,
            "n": self.n,
            "counts": [
                {"context": c, "point": labels[i], "count": k}
                for (c, i), k in sorted(self.counts.items(), key=lambda t: (ms.contexts.index(t[0][0]), t[0][1]))
            ],
        }


@dataclass(frozen=True)
class _Tables:
    contexts: tuple[ContextId, ...]
    q_cdf: np.ndarray
    atom_cdf: tuple[np.ndarray, ...]
    representative: tuple[np.ndarray, ...]


def _cdf(weights) -> np.ndarray:
    w = np.array([float(x) for x in weights])
    cdf = np.cumsum(w) / w.sum()
    # pin the tail so rounding cannot leave u in (cdf[-1], 1)
    cdf[np.flatnonzero(w > 0)[-1]:] = 1.0
    return cdf


def _tables(ms: Metaspace) -> _Tables:
    atom_cdf, reps = [], []
    for c in ms.contexts:
        measure = ms.source.measures[c]
        atom_cdf.append(_cdf(measure.masses))
        reps.append(np.array([a.lowest() for a in measure.algebra.atoms]))
    q_cdf = _cdf(ms.q[c] for c in ms.contexts)
    return _Tables(ms.contexts, q_cdf, tuple(atom_cdf), tuple(reps))


def _draw(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    # side="right" never selects a zero-mass entry
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)


def _sample_block(t: _Tables, seed: int, block: int, size: int) -> Counter:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))
    u = rng.random((2, size))
    ctx = _draw(t.q_cdf, u[0])
    out: Counter = Counter()
    for k, c in enumerate(t.contexts):
        sel = ctx == k
        if not sel.any():
            continue
        points = t.representative[k][_draw(t.atom_cdf[k], u[1][sel])]
        values, counts = np.unique(points, return_counts=True)
        for v, m in zip(values, counts):
            out[(c, int(v))] += int(m)
    return out


def sample_paths(ms: Metaspace, n: int, seed: int, workers: int = 1) -> SampleRun:
    """Draw ``n`` independent (context, outcome) paths."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    t = _tables(ms)
    blocks = [(b, min(BLOCK_SIZE, n - b * BLOCK_SIZE)) for b in range(math.ceil(n / BLOCK_SIZE))]
    if workers <= 1:
        parts = [_sample_block(t, seed, b, size) for b, size in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda bs: _sample_block(t, seed, *bs), blocks))
    total: Counter = Counter()
    for part in parts:
        total.update(part)
    return SampleRun(seed, n, dict(sorted(total.items(), key=lambda kv: (t.contexts.index(kv[0][0]), kv[0][1]))))


@dataclass(frozen=True)
class CellCheck:
    context: ContextId
    atom: int
    point: int
    expected_p: float
    count: int
    z: float


@dataclass(frozen=True)
class EmpiricalComparison:
    n: int
    threshold: float
    cells: tuple[CellCheck, ...] = field(repr=False)

    @property
    def max_abs_z(self) -> float:
        return max((abs(c.z) for c in self.cells), default=0.0)

    @property
    def failing(self) -> tuple[CellCheck, ...]:
        return tuple(c for c in self.cells if abs(c.z) > self.threshold)

    @property
    def flagged_contexts(self) -> tuple[ContextId, ...]:
        seen = []
        for c in self.failing:
            if c.context not in seen:
                seen.append(c.context)
        return tuple(seen)

    @property
    def passed(self) -> bool:
        return not self.failing

    def to_json(self, ms: Metaspace) -> dict:
        labels = ms.space.labels
        return {
            "n": self.n,
            "threshold": self.threshold,
            "passed": self.passed,
            "max_abs_z": self.max_abs_z,
            "flagged_contexts": list(self.flagged_contexts),
            "cells": [
                {
                    "context": c.context,
                    "atom": c.atom,
                    "point": labels[c.point],
                    "expected_p": c.expected_p,
                    "count": c.count,
                    "z": c.z if math.isfinite(c.z) else str(c.z),
                }
                for c in self.cells
            ],
        }


def compare_empirical(run: SampleRun, ms: Metaspace, z_threshold: float = 4.0) -> EmpiricalComparison:
    """Binomial z-score of each (context, atom) count against q_c * P_c(atom)."""
    reps = {}
    for c in ms.contexts:
        for k, atom in enumerate(ms.algebra(c).atoms):
            reps[(c, atom.lowest())] = k
    unknown = [key for key in run.counts if key not in reps]
    if unknown:
        raise ValueError(f"run does not match the metaspace: unexpected outcomes {unknown[:3]}")
    n = run.n
    cells = []
    for c in ms.contexts:
        measure = ms.source.measures[c]
        for k, atom in enumerate(measure.algebra.atoms):
            p = float(ms.q[c] * measure.masses[k])
            count = run.counts.get((c, atom.lowest()), 0)
            var = n * p * (1 - p)
            if var > 0:
                z = (count - n * p) / math.sqrt(var)
            else:
                z = 0.0 if count == round(n * p) else math.inf
            cells.append(CellCheck(c, k, atom.lowest(), p, count, z))
    return EmpiricalComparison(n, z_threshold, tuple(cells))


def total_variation(run: SampleRun, ms: Metaspace) -> float:
    """Total-variation distance between empirical and compound (context, atom) laws."""
    tv = 0.0
    for c in ms.contexts:
        measure = ms.source.measures[c]
        for k, atom in enumerate(measure.algebra.atoms):
            p = float(ms.q[c] * measure.masses[k])
            tv += abs(run.counts.get((c, atom.lowest()), 0) / run.n - p)
    return tv / 2

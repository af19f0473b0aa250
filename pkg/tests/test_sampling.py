from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmtree.metaspace import build_metaspace, uniform_q
from qmtree.sampling import BLOCK_SIZE, SampleRun, compare_empirical, sample_paths, total_variation
from qmtree.vorobev import CONTEXTS, VorobevParams, build_vorobev


def expected_counts(ms, n):
    out = {}
    for c in ms.contexts:
        m = ms.source.measures[c]
        for atom, mass in zip(m.algebra.atoms, m.masses):
            out[(c, atom.lowest())] = n * ms.q[c] * mass
    return out


def test_single_context(table2):
    ms = build_metaspace(table2, {"XY": 1, "XZ": 0, "YZ": 0})
    run = sample_paths(ms, 100, seed=5)
    assert run.context_counts() == {"XY": 100}


def test_context_frequencies_concentrate(table2_ms):
    n = 100_000
    run = sample_paths(table2_ms, n, seed=2024)
    bound = 3 * math.sqrt((1 / 3) * (2 / 3) / n)
    for c in CONTEXTS:
        assert abs(run.context_counts()[c] / n - 1 / 3) <= bound


def test_n_must_be_positive(table2_ms):
    with pytest.raises(ValueError):
        sample_paths(table2_ms, 0, seed=1)


def test_counts_sum_to_n():
    with pytest.raises(ValueError):
        SampleRun(0, 3, {("XY", 0): 2})


def test_same_seed_same_counts(table2_ms):
    n = 3 * BLOCK_SIZE + 17
    a = sample_paths(table2_ms, n, seed=99)
    assert a == sample_paths(table2_ms, n, seed=99)
    assert a == sample_paths(table2_ms, n, seed=99, workers=4)
    assert a != sample_paths(table2_ms, n, seed=100)


def test_reports_only_atom_representatives(table2_ms):
    run = sample_paths(table2_ms, 20_000, seed=8)
    for (c, point), _ in run.counts.items():
        atom = table2_ms.algebra(c).atoms[table2_ms.algebra(c).atom_of(point)]
        assert atom.lowest() == point
        assert table2_ms.source.measures[c].masses[table2_ms.algebra(c).atom_of(point)] > 0


def test_exact_synthetic_run_passes(table2_ms):
    n = 6000
    counts = {k: round(v) for k, v in expected_counts(table2_ms, n).items() if v}
    report = compare_empirical(SampleRun(0, n, counts), table2_ms)
    assert report.passed and report.max_abs_z == 0


def test_wrong_q_is_flagged(table2):
    declared = build_metaspace(table2, {c: Fraction(1, 3) for c in CONTEXTS})
    actual = build_metaspace(table2, {"XY": Fraction(3, 5), "XZ": Fraction(1, 5), "YZ": Fraction(1, 5)})
    report = compare_empirical(sample_paths(actual, 100_000, seed=11), declared)
    assert not report.passed
    assert set(report.flagged_contexts) == set(CONTEXTS)
    assert all(c.z > 4 for c in report.failing if c.context == "XY")


def test_honest_run_passes(table2_ms):
    report = compare_empirical(sample_paths(table2_ms, 100_000, seed=12), table2_ms)
    assert report.passed


def test_mismatched_run(table2_ms):
    with pytest.raises(ValueError, match="does not match"):
        compare_empirical(SampleRun(0, 1, {("XY", 1): 1}), table2_ms)


def test_total_variation_shrinks(table2_ms):
    for n in (1_000, 10_000, 100_000):
        tvs = [total_variation(sample_paths(table2_ms, n, seed=s), table2_ms) for s in range(5)]
        assert max(tvs) * math.sqrt(n) <= 4.0


@given(st.integers(1, 3 * BLOCK_SIZE), st.integers(0, 2**64 - 1))
def test_sampler_invariants(n, seed):
    ms = build_metaspace(build_vorobev(VorobevParams("1/2", "1/2", "1/2")), uniform_q(CONTEXTS))
    run = sample_paths(ms, n, seed)
    assert sum(run.counts.values()) == n
    assert run == sample_paths(ms, n, seed, workers=3)

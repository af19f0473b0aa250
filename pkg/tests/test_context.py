from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qmtree.context import (
    Measure,
    Tolerances,
    check_consistency,
    common_events,
    make_multi_measurable,
    make_multi_probability,
    validate_measure,
)
from qmtree.errors import MeasurabilityError, SpaceMismatchError
from qmtree.sets import SigmaAlgebra, make_sample_space
from qmtree.vorobev import VorobevParams, build_vorobev, cylinder_algebra, cylinder_event, vorobev_space

HALF = Fraction(1, 2)


def uniform(alg: SigmaAlgebra, exact: bool = True) -> Measure:
    k = alg.n_atoms
    return Measure(alg, tuple(Fraction(1, k) if exact else 1 / k for _ in range(k)))


class TestMultiMeasurable:
    def test_vorobev_contexts(self):
        base = make_multi_measurable(vorobev_space(), {c: cylinder_algebra(c) for c in ("XY", "XZ", "YZ")})
        assert base.contexts == ("XY", "XZ", "YZ")

    def test_single_context_power_set(self):
        space = vorobev_space()
        base = make_multi_measurable(space, {"only": SigmaAlgebra.discrete(space)})
        mps = make_multi_probability(base, {"only": uniform(SigmaAlgebra.discrete(space))})
        assert check_consistency(mps).consistent
        assert mps.consistent_prob(space.event(["R,R,R", "B,B,B"])) == Fraction(1, 4)

    def test_empty_context_set(self):
        with pytest.raises(ValueError):
            make_multi_measurable(vorobev_space(), {})

    def test_algebra_on_other_space(self):
        other = make_sample_space(["a", "b"])
        with pytest.raises(SpaceMismatchError):
            make_multi_measurable(vorobev_space(), {"c": SigmaAlgebra.trivial(other)})


class TestValidateMeasure:
    def test_uniform(self):
        alg = cylinder_algebra("XY")
        assert validate_measure(alg, uniform(alg))

    def test_short_total(self):
        alg = cylinder_algebra("XY")
        check = validate_measure(alg, Measure(alg, (0.3, 0.3, 0.2, 0.1)))
        assert not check and check.axiom == "total"

    def test_negative_mass(self):
        alg = cylinder_algebra("XY")
        check = validate_measure(alg, Measure(alg, (HALF, HALF, Fraction(1, 4), Fraction(-1, 4))))
        assert not check and check.axiom == "nonnegativity"

    def test_table2_xy(self, table2):
        assert validate_measure(cylinder_algebra("XY"), table2.measures["XY"])

    def test_wrong_domain(self):
        check = validate_measure(cylinder_algebra("XY"), uniform(cylinder_algebra("XZ")))
        assert not check and check.axiom == "domain"

    def test_sampled_additivity_on_large_algebras(self):
        space = make_sample_space([str(i) for i in range(14)])
        alg = SigmaAlgebra.discrete(space)
        assert validate_measure(alg, uniform(alg, exact=False))

    def test_prob_rejects_non_members(self, table2):
        with pytest.raises(MeasurabilityError):
            table2.prob("YZ", vorobev_space().event(["R,R,R"]))


@given(st.lists(st.integers(0, 5), min_size=4, max_size=4).filter(any))
def test_measure_of_member_is_sum_of_point_weights(weights):
    """Oracle: spread each atom's mass over its points and sum point weights."""
    alg = cylinder_algebra("XZ")
    mu = Measure(alg, tuple(Fraction(w, sum(weights)) for w in weights))
    point = {}
    for atom, m in zip(alg.atoms, mu.masses):
        for i in atom:
            point[i] = m / len(atom)
    for e in alg.members():
        assert mu.prob(e) == sum((point[i] for i in e), Fraction(0))
    assert validate_measure(alg, mu)


class TestCommonEvents:
    def test_xy_xz(self):
        shared = common_events(cylinder_algebra("XY"), cylinder_algebra("XZ"))
        x_red = cylinder_event("XY", ("R", "R")) | cylinder_event("XY", ("R", "B"))
        assert set(shared) == {vorobev_space().empty(), x_red, x_red.complement(), vorobev_space().full()}

    def test_self(self):
        a = cylinder_algebra("YZ")
        assert set(common_events(a, a)) == set(a.members())

    def test_discrete_vs_trivial(self):
        space = vorobev_space()
        assert set(common_events(SigmaAlgebra.discrete(space), SigmaAlgebra.trivial(space))) == {
            space.empty(),
            space.full(),
        }


class TestConsistency:
    def test_table2(self, table2):
        assert check_consistency(table2).consistent

    def test_point_three(self):
        p = Fraction(3, 10)
        report = check_consistency(build_vorobev(VorobevParams(p, p, p)))
        assert not report.consistent
        assert all(v.contexts == ("XZ", "YZ") for v in report.violations)
        assert {(v.value_a, v.value_b) for v in report.violations} == {(p, 1 - p), (1 - p, p)}

    def test_consistent_prob_is_context_independent(self, table2):
        y_red = cylinder_event("XY", ("R", "R")) | cylinder_event("XY", ("B", "R"))
        assert table2.consistent_prob(y_red) == HALF
        assert table2.prob("YZ", y_red) == HALF

    def test_consistent_prob_refuses_inconsistent_spaces(self):
        mps = build_vorobev(VorobevParams("3/10", "3/10", "3/10"))
        with pytest.raises(ValueError):
            mps.consistent_prob(vorobev_space().full())

    def test_float_tolerance(self):
        space = vorobev_space()
        alg = cylinder_algebra("XY")
        base = make_multi_measurable(space, {"a": alg, "b": alg})
        near = make_multi_probability(base, {"a": Measure(alg, (0.25,) * 4), "b": Measure(alg, (0.25 + 1e-10, 0.25 - 1e-10, 0.25, 0.25))})
        far = make_multi_probability(base, {"a": Measure(alg, (0.25,) * 4), "b": Measure(alg, (0.25 + 1e-8, 0.25 - 1e-8, 0.25, 0.25))})
        assert check_consistency(near).consistent
        assert not check_consistency(far).consistent
        assert not check_consistency(near, Tolerances(consistency=1e-11)).consistent

    def test_invalid_measure_is_rejected(self):
        alg = cylinder_algebra("XY")
        base = make_multi_measurable(vorobev_space(), {"a": alg})
        with pytest.raises(ValueError, match="total"):
            make_multi_probability(base, {"a": Measure(alg, (HALF, HALF, HALF, 0))})


fractions = st.integers(0, 10).map(lambda k: Fraction(k, 10))


@given(fractions, fractions, fractions, st.permutations(["XY", "XZ", "YZ"]))
def test_consistency_is_invariant_under_context_order(a, b, g, order):
    mps = build_vorobev(VorobevParams(a, b, g))
    base = make_multi_measurable(mps.space, {c: mps.algebra(c) for c in order})
    shuffled = make_multi_probability(base, {c: mps.measures[c] for c in order})
    key = lambda v: (frozenset(v.contexts), v.event.bits, frozenset((v.value_a, v.value_b)))
    assert {key(v) for v in check_consistency(mps).violations} == {
        key(v) for v in check_consistency(shuffled).violations
    }

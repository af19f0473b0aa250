"""Multi-measurable and multi-probability spaces over one sample space.

Each context carries its own sigma-algebra and its own probability measure.
Masses may be ``Fraction`` (exact mode) or ``float``; arithmetic follows
whatever type the caller supplies.
"""

from __future__ import annotations

import itertools
import random
from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from numbers import Rational, Real

from .errors import MeasurabilityError, SpaceMismatchError
from .sets import Event, SampleSpace, SigmaAlgebra, intersect_algebras

ContextId = str

EXHAUSTIVE_ADDITIVITY_ATOMS = 12
SAMPLED_ADDITIVITY_PAIRS = 1000
MAX_ENUMERATED_SHARED_ATOMS = 16


@dataclass(frozen=True)
class Tolerances:
    consistency: float = 1e-9
    mass: float = 1e-12


DEFAULT_TOLERANCES = Tolerances()


def is_exact(x: Real) -> bool:
    return isinstance(x, Rational)


def close(a: Real, b: Real, tol: float) -> bool:
    """Exact equality for rationals, absolute tolerance otherwise."""
    if type(a) is float or type(b) is float:
        return abs(a - b) <= tol
    if is_exact(a) and is_exact(b):
        return a == b
    return abs(a - b) <= tol


@dataclass(frozen=True)
class Measure:
    """A probability measure given by the masses of an algebra's atoms."""

    algebra: SigmaAlgebra
    masses: tuple[Real, ...]

    def __post_init__(self) -> None:
        if len(self.masses) != self.algebra.n_atoms:
            raise ValueError(
                f"expected {self.algebra.n_atoms} atom masses, got {len(self.masses)}"
            )

    @classmethod
    def from_atom_map(cls, algebra: SigmaAlgebra, masses: Mapping[Event, Real]) -> Measure:
        """Atoms missing from ``masses`` get zero mass."""
        by_bits = {}
        for e, m in masses.items():
            if e not in algebra.atoms:
                raise ValueError(f"{e!r} is not an atom of the algebra")
            by_bits[e.bits] = m
        return cls(algebra, tuple(by_bits.get(a.bits, 0) for a in algebra.atoms))

    def prob(self, event: Event) -> Real:
        """Sum of the masses of the atoms inside ``event``, in atom order."""
        bits = event.bits
        if event.space is not self.algebra.space and event.space != self.algebra.space:
            raise SpaceMismatchError("event and measure live on different spaces")
        total: Real = 0
        for atom, m in zip(self.algebra.atoms, self.masses):
            inter = atom.bits & bits
            if inter:
                if inter != atom.bits:
                    raise MeasurabilityError(f"{event!r} is not a member of the algebra")
                total += m
        return total

    def __call__(self, event: Event) -> Real:
        return self.prob(event)

    @property
    def exact(self) -> bool:
        return all(is_exact(m) for m in self.masses)


@dataclass(frozen=True)
class MeasureValidation:
    ok: bool
    axiom: str | None = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate_measure(
    algebra: SigmaAlgebra,
    measure: Measure,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    seed: int = 0,
) -> MeasureValidation:
    """Check the Kolmogorov axioms for ``measure`` on ``algebra``.

    Finite additivity is checked on every pair of disjoint members when the
    algebra has at most 12 atoms, and on randomly drawn pairs otherwise.
    """
    if not measure.algebra.same_members(algebra):
        return MeasureValidation(False, "domain", "measure is keyed by a different algebra")
    for atom, m in zip(measure.algebra.atoms, measure.masses):
        if m < 0:
            return MeasureValidation(False, "nonnegativity", f"mass {m} on {atom!r}")
    full = algebra.space.full()
    total = measure.prob(full)
    if not close(total, 1, tolerances.mass):
        return MeasureValidation(False, "total", f"P(Omega) = {total}")
    if measure.prob(algebra.space.empty()) != 0:
        return MeasureValidation(False, "total", "P(empty) != 0")

    k = algebra.n_atoms
    tol = tolerances.mass
    if k <= EXHAUSTIVE_ADDITIVITY_ATOMS:
        members = algebra.members()
        value = [measure.prob(e) for e in members]
        everything = (1 << k) - 1
        for a in range(1 << k):
            rest = everything & ~a
            b = rest
            while True:
                if not close(value[a | b], value[a] + value[b], tol):
                    return MeasureValidation(
                        False, "additivity", f"{members[a]!r} and {members[b]!r}"
                    )
                if b == 0:
                    break
                b = (b - 1) & rest
    else:
        rng = random.Random(seed)
        for _ in range(SAMPLED_ADDITIVITY_PAIRS):
            a = rng.getrandbits(k)
            b = rng.getrandbits(k) & ~a
            ea, eb = algebra.event_from_atom_mask(a), algebra.event_from_atom_mask(b)
            if not close(measure.prob(ea | eb), measure.prob(ea) + measure.prob(eb), tol):
                return MeasureValidation(False, "additivity", f"{ea!r} and {eb!r}")
    return MeasureValidation(True)


@dataclass(frozen=True)
class MultiMeasurableSpace:
    space: SampleSpace
    algebras: Mapping[ContextId, SigmaAlgebra]

    @property
    def contexts(self) -> tuple[ContextId, ...]:
        return tuple(self.algebras)


def make_multi_measurable(
    space: SampleSpace, algebras: Mapping[ContextId, SigmaAlgebra]
) -> MultiMeasurableSpace:
    if not algebras:
        raise ValueError("a multi-measurable space needs at least one context")
    for c, alg in algebras.items():
        if not isinstance(c, str) or not c:
            raise ValueError(f"context names must be nonempty strings, got {c!r}")
        if alg.space != space:
            raise SpaceMismatchError(f"algebra of context {c!r} lives on another space")
    return MultiMeasurableSpace(space, dict(algebras))


@dataclass(frozen=True)
class MultiProbabilitySpace:
    base: MultiMeasurableSpace
    measures: Mapping[ContextId, Measure]

    @property
    def space(self) -> SampleSpace:
        return self.base.space

    @property
    def contexts(self) -> tuple[ContextId, ...]:
        return self.base.contexts

    def algebra(self, context: ContextId) -> SigmaAlgebra:
        return self.base.algebras[context]

    def prob(self, context: ContextId, event: Event) -> Real:
        return self.measures[context].prob(event)

    @property
    def exact(self) -> bool:
        return all(m.exact for m in self.measures.values())

    @cached_property
    def consistency(self) -> ConsistencyReport:
        return check_consistency(self)

    def consistent_prob(self, event: Event) -> Real:
        """The context-independent probability of ``event``.

        Only defined on consistent spaces; the value is read through the first
        context whose algebra contains ``event``.  This is not a measure on
        the union of the algebras.
        """
        if not self.consistency.consistent:
            raise ValueError("probabilities are context-dependent: space is inconsistent")
        for c in self.contexts:
            if self.algebra(c).contains(event):
                return self.prob(c, event)
        raise MeasurabilityError(f"{event!r} is not measurable in any context")


def make_multi_probability(
    base: MultiMeasurableSpace,
    measures: Mapping[ContextId, Measure],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    validate: bool = True,
) -> MultiProbabilitySpace:
    """Assemble and, unless ``validate`` is false, axiom-check each measure."""
    if set(measures) != set(base.algebras):
        raise ValueError(
            f"measure contexts {sorted(measures)} != algebra contexts {sorted(base.algebras)}"
        )
    ordered = {}
    for c in base.contexts:
        if measures[c].algebra.space != base.space:
            raise SpaceMismatchError(f"measure of context {c!r} lives on another space")
        check = validate_measure(base.algebras[c], measures[c], tolerances) if validate else True
        if not check:
            raise ValueError(f"context {c!r}: invalid measure ({check.axiom}: {check.detail})")
        ordered[c] = measures[c]
    return MultiProbabilitySpace(base, ordered)


def common_events(a: SigmaAlgebra, b: SigmaAlgebra) -> list[Event]:
    return intersect_algebras(a, b).members()


@dataclass(frozen=True)
class Violation:
    contexts: tuple[ContextId, ContextId]
    event: Event
    value_a: Real
    value_b: Real


@dataclass(frozen=True)
class ConsistencyReport:
    violations: tuple[Violation, ...]

    @property
    def consistent(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.consistent


def check_consistency(
    mps: MultiProbabilitySpace, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> ConsistencyReport:
    """Compare every pair of contexts on every event they share.

    When the shared algebra is too large to enumerate, only its atoms are
    compared, which suffices by additivity of both measures.
    """
    violations = []
    for c1, c2 in itertools.combinations(mps.contexts, 2):
        shared = intersect_algebras(mps.algebra(c1), mps.algebra(c2))
        if shared.n_atoms <= MAX_ENUMERATED_SHARED_ATOMS:
            events = shared.members()
        else:
            events = list(shared.atoms)
        for e in events:
            v1, v2 = mps.prob(c1, e), mps.prob(c2, e)
            if not close(v1, v2, tolerances.consistency):
                violations.append(Violation((c1, c2), e, v1, v2))
    return ConsistencyReport(tuple(violations))


def as_number(x: Real | str) -> Real:
    """Parse ``"1/3"`` or ``"0.25"`` as an exact Fraction; pass numbers through."""
    if isinstance(x, str):
        return Fraction(x)
    return x

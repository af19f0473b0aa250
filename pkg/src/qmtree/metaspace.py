"""The probability metaspace over (base point, context) pairs.

A two-stage tree picks a context with distribution ``q`` and then an outcome
with that context's measure.  Meta-events are kept in their per-context form,
one member of each contextual algebra, so membership in the augmented algebra
reduces to one membership test per context.
"""

from __future__ import annotations

import dataclasses
import itertools
import random
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Hashable, Union

from .context import (
    DEFAULT_TOLERANCES,
    ContextId,
    MeasureValidation,
    MultiProbabilitySpace,
    Tolerances,
    close,
)
from .errors import MeasurabilityError
from .sets import Event, SampleSpace, point_values

UNOBSERVED = "U"


@dataclass(frozen=True)
class MetaPoint:
    base_point: int
    context: ContextId


@dataclass(frozen=True)
class Metaspace:
    source: MultiProbabilitySpace
    q: Mapping[ContextId, Real]

    @property
    def space(self) -> SampleSpace:
        return self.source.space

    @property
    def contexts(self) -> tuple[ContextId, ...]:
        return self.source.contexts

    def algebra(self, context: ContextId):
        return self.source.algebra(context)

    def points(self) -> Iterator[MetaPoint]:
        """Enumerate the augmented sample space, context-major."""
        for c in self.contexts:
            for i in range(self.space.size):
                yield MetaPoint(i, c)

    def event(self, per_context: Mapping[ContextId, Event] | None = None, **kw: Event) -> MetaEvent:
        """Build a validated meta-event; unspecified contexts get the empty set."""
        parts = dict(per_context or {}, **kw)
        unknown = set(parts) - set(self.contexts)
        if unknown:
            raise KeyError(f"unknown contexts {sorted(unknown)}")
        e = MetaEvent({c: parts.get(c, self.space.empty()) for c in self.contexts})
        check_meta_event(self, e)
        return e

    def full(self) -> MetaEvent:
        return MetaEvent({c: self.space.full() for c in self.contexts})

    def empty(self) -> MetaEvent:
        return MetaEvent({c: self.space.empty() for c in self.contexts})


def build_metaspace(
    mps: MultiProbabilitySpace,
    q: Mapping[ContextId, Real],
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> Metaspace:
    if set(q) != set(mps.contexts):
        raise ValueError(f"q keys {sorted(q)} do not match contexts {sorted(mps.contexts)}")
    for c, v in q.items():
        if v < 0 or v > 1:
            raise ValueError(f"q not on simplex: q[{c!r}] = {v}")
    total = sum(q[c] for c in mps.contexts)
    if not close(total, 1, tolerances.mass):
        raise ValueError(f"q not on simplex: entries sum to {total}")
    return Metaspace(mps, {c: q[c] for c in mps.contexts})


def reweight(ms: Metaspace, q: Mapping[ContextId, Real], tolerances: Tolerances = DEFAULT_TOLERANCES) -> Metaspace:
    """Same source and type, new context distribution (validated)."""
    checked = build_metaspace(ms.source, q, tolerances)
    return dataclasses.replace(ms, q=checked.q)


def uniform_q(contexts: Sequence[ContextId], exact: bool = True) -> dict[ContextId, Real]:
    n = len(contexts)
    w = Fraction(1, n) if exact else 1.0 / n
    return {c: w for c in contexts}


@dataclass(frozen=True)
class MetaEvent:
    """The union over contexts of ``per_context[c] x {c}``."""

    per_context: Mapping[ContextId, Event]

    def __getitem__(self, context: ContextId) -> Event:
        return self.per_context[context]

    def _zip(self, other: MetaEvent) -> Iterator[tuple[ContextId, Event, Event]]:
        if set(self.per_context) != set(other.per_context):
            raise ValueError("meta-events are indexed by different context sets")
        for c, e in self.per_context.items():
            yield c, e, other.per_context[c]

    def __and__(self, other: MetaEvent) -> MetaEvent:
        return MetaEvent({c: a & b for c, a, b in self._zip(other)})

    def __or__(self, other: MetaEvent) -> MetaEvent:
        return MetaEvent({c: a | b for c, a, b in self._zip(other)})

    def complement(self) -> MetaEvent:
        return MetaEvent({c: e.complement() for c, e in self.per_context.items()})

    def isdisjoint(self, other: MetaEvent) -> bool:
        """Disjointness as subsets of the augmented space: context by context."""
        return all(a.isdisjoint(b) for _, a, b in self._zip(other))

    def __contains__(self, point: MetaPoint) -> bool:
        return point.base_point in self.per_context[point.context]

    def points(self) -> set[MetaPoint]:
        return {MetaPoint(i, c) for c, e in self.per_context.items() for i in e}

    def is_empty(self) -> bool:
        return all(e.is_empty() for e in self.per_context.values())


def check_meta_event(ms: Metaspace, e: MetaEvent) -> None:
    """Raise MeasurabilityError naming the first context whose part is not a member."""
    if set(e.per_context) != set(ms.contexts):
        raise ValueError("meta-event contexts do not match the metaspace")
    for c in ms.contexts:
        part = e.per_context[c]
        if not ms.algebra(c).contains(part):
            raise MeasurabilityError(
                f"{part!r} is not a member of the algebra of context {c!r}"
            )


def is_meta_event(ms: Metaspace, e: MetaEvent) -> bool:
    try:
        check_meta_event(ms, e)
    except MeasurabilityError:
        return False
    return True


def meta_probability(ms: Metaspace, e: MetaEvent) -> Real:
    """Compound probability: sum over contexts of q_c times P_c(E_c)."""
    check_meta_event(ms, e)
    total: Real = 0
    for c in ms.contexts:
        total += ms.q[c] * ms.source.prob(c, e.per_context[c])
    return total


def validate_metaspace(
    ms: Metaspace, pairs: int = 200, seed: int = 0, tolerances: Tolerances = DEFAULT_TOLERANCES
) -> MeasureValidation:
    """Axiom check of the compound measure on random disjoint meta-event pairs."""
    tol = tolerances.mass
    if not close(meta_probability(ms, ms.full()), 1, tol):
        return MeasureValidation(False, "total", "compound measure of the whole metaspace != 1")
    if meta_probability(ms, ms.empty()) != 0:
        return MeasureValidation(False, "total", "compound measure of the empty meta-event != 0")
    rng = random.Random(seed)
    for _ in range(pairs):
        a, b = {}, {}
        for c in ms.contexts:
            alg = ms.algebra(c)
            ma = rng.getrandbits(alg.n_atoms)
            mb = rng.getrandbits(alg.n_atoms) & ~ma
            a[c], b[c] = alg.event_from_atom_mask(ma), alg.event_from_atom_mask(mb)
        ea, eb = MetaEvent(a), MetaEvent(b)
        pa, pb = meta_probability(ms, ea), meta_probability(ms, eb)
        if pa < 0 or pb < 0:
            return MeasureValidation(False, "nonnegativity", "negative compound probability")
        if not close(meta_probability(ms, ea | eb), pa + pb, tol):
            return MeasureValidation(False, "additivity", f"{ea!r} and {eb!r}")
    return MeasureValidation(True)


@dataclass(frozen=True)
class MetaRandomVariable:
    """A variable on the metaspace that reports ``unobserved`` outside ``visible``.

    ``raw`` holds the underlying value at each base point, indexed by point.
    Construction does not check measurability; use :func:`lift_variable`.
    """

    name: str
    raw: tuple[Hashable, ...]
    visible: frozenset[ContextId]
    unobserved: Hashable = UNOBSERVED

    @property
    def codomain(self) -> tuple[Hashable, ...]:
        return (*sorted(set(self.raw), key=str), self.unobserved)

    def __call__(self, point: MetaPoint) -> Hashable:
        if point.context in self.visible:
            return self.raw[point.base_point]
        return self.unobserved


def lift_variable(
    raw: Mapping | Sequence,
    visible: Iterable[ContextId],
    ms: Metaspace,
    name: str = "",
    unobserved: Hashable = UNOBSERVED,
) -> MetaRandomVariable:
    """Extend a function on base points to the metaspace.

    Raises MeasurabilityError naming the first visible context in which some
    preimage of ``raw`` is not a member of the contextual algebra.
    """
    values = tuple(point_values(ms.space, raw))
    if unobserved in values:
        raise ValueError(f"raw values may not contain the reserved label {unobserved!r}")
    visible = frozenset(visible)
    unknown = visible - set(ms.contexts)
    if unknown:
        raise KeyError(f"unknown contexts {sorted(unknown)}")
    var = MetaRandomVariable(name, values, visible, unobserved)
    for c in ms.contexts:
        if c not in visible:
            continue
        for v in sorted(set(values), key=str):
            part = _raw_preimage(ms.space, values, v)
            if not ms.algebra(c).contains(part):
                raise MeasurabilityError(
                    f"variable {name or '?'!s} is not measurable in context {c!r}: "
                    f"preimage of {v!r} is {part!r}"
                )
    return var


def _raw_preimage(space: SampleSpace, values: Sequence[Hashable], v: Hashable) -> Event:
    bits = 0
    for i, x in enumerate(values):
        if x == v:
            bits |= 1 << i
    return Event(space, bits)


def preimage(ms: Metaspace, var: MetaRandomVariable, value: Hashable) -> MetaEvent:
    """The set of meta-points where ``var`` equals ``value`` (not validated)."""
    parts = {}
    for c in ms.contexts:
        if c in var.visible:
            parts[c] = _raw_preimage(ms.space, var.raw, value)
        elif value == var.unobserved:
            parts[c] = ms.space.full()
        else:
            parts[c] = ms.space.empty()
    return MetaEvent(parts)


def tuple_preimage(
    ms: Metaspace, variables: Sequence[MetaRandomVariable], values: Sequence[Hashable]
) -> MetaEvent:
    """Preimage of a tuple value: the intersection of the coordinate preimages."""
    result = ms.full()
    for var, v in zip(variables, values, strict=True):
        result = result & preimage(ms, var, v)
    return result


VariableOrTuple = Union[MetaRandomVariable, Sequence[MetaRandomVariable]]


def _as_tuple(v: VariableOrTuple) -> tuple[MetaRandomVariable, ...]:
    return (v,) if isinstance(v, MetaRandomVariable) else tuple(v)


def is_meta_measurable(ms: Metaspace, v: VariableOrTuple) -> bool:
    """True iff every tuple value has a preimage in the augmented algebra."""
    variables = _as_tuple(v)
    for values in itertools.product(*(var.codomain for var in variables)):
        if not is_meta_event(ms, tuple_preimage(ms, variables, values)):
            return False
    return True


def joint_distribution(
    ms: Metaspace, variables: VariableOrTuple
) -> dict[tuple[Hashable, ...], Real]:
    """Probability of every tuple in the product codomain (zeros included)."""
    variables = _as_tuple(variables)
    out = {}
    for values in itertools.product(*(var.codomain for var in variables)):
        e = tuple_preimage(ms, variables, values)
        try:
            out[values] = meta_probability(ms, e)
        except MeasurabilityError as exc:
            raise MeasurabilityError(f"tuple {values} has a non-measurable preimage: {exc}") from exc
    return out


def context_conditional(
    ms: Metaspace, variables: VariableOrTuple, context: ContextId
) -> dict[tuple[Hashable, ...], Real]:
    """Joint distribution restricted to one context and renormalised by q_c."""
    variables = _as_tuple(variables)
    qc = ms.q[context]
    if qc == 0:
        raise ZeroDivisionError(f"context {context!r} has zero probability")
    out = {}
    for values in itertools.product(*(var.codomain for var in variables)):
        e = tuple_preimage(ms, variables, values)
        only = MetaEvent(
            {c: (part if c == context else ms.space.empty()) for c, part in e.per_context.items()}
        )
        out[values] = meta_probability(ms, only) / qc
    return out

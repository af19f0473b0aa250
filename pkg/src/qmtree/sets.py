"""Finite sample spaces, bitset events and atom-partition sigma-algebras.

Events are Python integers used as bitsets over point indices, so spaces of
any size are handled without a separate multi-word representation.  A
sigma-algebra on a finite space is stored through its atoms; its members are
exactly the unions of atoms and are only enumerated on request.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Hashable

from .errors import EnumerationLimitError, MeasurabilityError, SpaceMismatchError

MAX_ENUMERATED_ATOMS = 20


@dataclass(frozen=True, eq=False)
class SampleSpace:
    """An ordered finite set of labelled points."""

    labels: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.labels:
            raise ValueError("a sample space needs at least one point")
        index = {}
        for i, label in enumerate(self.labels):
            if not isinstance(label, str):
                raise TypeError(f"point labels must be strings, got {label!r}")
            if label in index:
                raise ValueError(f"duplicate point label {label!r}")
            index[label] = i
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_hash", hash(self.labels))

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, SampleSpace):
            return NotImplemented
        return self.labels == other.labels

    def __hash__(self) -> int:
        return self._hash

    @property
    def size(self) -> int:
        return len(self.labels)

    @cached_property
    def full_bits(self) -> int:
        return (1 << len(self.labels)) - 1

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown point label {label!r}") from None

    def event(self, labels: Iterable[str]) -> Event:
        bits = 0
        for label in labels:
            bits |= 1 << self.index(label)
        return Event(self, bits)

    def event_from_indices(self, indices: Iterable[int]) -> Event:
        bits = 0
        n = self.size
        for i in indices:
            if not 0 <= i < n:
                raise IndexError(f"point index {i} outside space of size {n}")
            bits |= 1 << i
        return Event(self, bits)

    def full(self) -> Event:
        return Event(self, self.full_bits)

    def empty(self) -> Event:
        return Event(self, 0)

    def singletons(self) -> list[Event]:
        return [Event(self, 1 << i) for i in range(self.size)]


def make_sample_space(labels: Iterable[str]) -> SampleSpace:
    return SampleSpace(tuple(labels))


def _same_space(a: SampleSpace, b: SampleSpace) -> None:
    if a is not b and a != b:
        raise SpaceMismatchError("objects live on different sample spaces")


@dataclass(frozen=True)
class Event:
    """A subset of a sample space, stored as a bitmask over point indices."""

    space: SampleSpace
    bits: int

    def __post_init__(self) -> None:
        if self.bits < 0 or self.bits > self.space.full_bits:
            raise ValueError("event bits exceed the width of its sample space")

    def _other(self, other: Event) -> int:
        _same_space(self.space, other.space)
        return other.bits

    def __and__(self, other: Event) -> Event:
        return Event(self.space, self.bits & self._other(other))

    def __or__(self, other: Event) -> Event:
        return Event(self.space, self.bits | self._other(other))

    def __sub__(self, other: Event) -> Event:
        return Event(self.space, self.bits & ~self._other(other))

    def __xor__(self, other: Event) -> Event:
        return Event(self.space, self.bits ^ self._other(other))

    def complement(self) -> Event:
        return Event(self.space, self.space.full_bits & ~self.bits)

    def issubset(self, other: Event) -> bool:
        return self.bits & ~self._other(other) == 0

    def isdisjoint(self, other: Event) -> bool:
        return self.bits & self._other(other) == 0

    def is_empty(self) -> bool:
        return self.bits == 0

    def is_full(self) -> bool:
        return self.bits == self.space.full_bits

    def __contains__(self, point: int | str) -> bool:
        i = self.space.index(point) if isinstance(point, str) else point
        return bool(self.bits >> i & 1)

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __iter__(self) -> Iterator[int]:
        bits = self.bits
        while bits:
            low = bits & -bits
            yield low.bit_length() - 1
            bits ^= low

    def indices(self) -> list[int]:
        return list(self)

    def labels(self) -> list[str]:
        return [self.space.labels[i] for i in self]

    def lowest(self) -> int:
        if not self.bits:
            raise ValueError("empty event has no lowest point")
        return (self.bits & -self.bits).bit_length() - 1

    def __repr__(self) -> str:
        return "Event({" + ", ".join(self.labels()) + "})"


@dataclass(frozen=True)
class Partition:
    """Pairwise-disjoint nonempty blocks covering the whole space."""

    space: SampleSpace
    blocks: tuple[Event, ...]

    def __post_init__(self) -> None:
        seen = 0
        for block in self.blocks:
            _same_space(self.space, block.space)
            if block.bits == 0:
                raise ValueError("partition blocks must be nonempty")
            if seen & block.bits:
                raise ValueError("partition blocks overlap")
            seen |= block.bits
        if seen != self.space.full_bits:
            raise ValueError("partition blocks do not cover the space")

    @classmethod
    def canonical(cls, space: SampleSpace, blocks: Iterable[Event]) -> Partition:
        """Blocks ordered by their lowest point index."""
        return cls(space, tuple(sorted(blocks, key=lambda b: b.lowest())))

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.blocks)


@dataclass(frozen=True)
class SigmaAlgebra:
    """A sigma-algebra on a finite space, represented by its atom partition."""

    partition: Partition

    @classmethod
    def from_atoms(cls, space: SampleSpace, atoms: Iterable[Event]) -> SigmaAlgebra:
        return cls(Partition.canonical(space, atoms))

    @classmethod
    def trivial(cls, space: SampleSpace) -> SigmaAlgebra:
        return cls.from_atoms(space, [space.full()])

    @classmethod
    def discrete(cls, space: SampleSpace) -> SigmaAlgebra:
        return cls.from_atoms(space, space.singletons())

    @property
    def space(self) -> SampleSpace:
        return self.partition.space

    @property
    def atoms(self) -> tuple[Event, ...]:
        return self.partition.blocks

    @property
    def n_atoms(self) -> int:
        return len(self.partition.blocks)

    @property
    def n_members(self) -> int:
        return 2 ** self.n_atoms

    @cached_property
    def _atom_of_point(self) -> tuple[int, ...]:
        owner = [0] * self.space.size
        for k, atom in enumerate(self.atoms):
            for i in atom:
                owner[i] = k
        return tuple(owner)

    def atom_of(self, point: int) -> int:
        """Index of the atom containing ``point``."""
        return self._atom_of_point[point]

    def atom_mask(self, event: Event) -> int:
        """Bitmask over atom indices of the atoms making up ``event``.

        Raises MeasurabilityError if ``event`` splits an atom.
        """
        _same_space(self.space, event.space)
        mask = 0
        bits = event.bits
        for k, atom in enumerate(self.atoms):
            inter = atom.bits & bits
            if inter:
                if inter != atom.bits:
                    raise MeasurabilityError(
                        f"{event!r} splits the atom {atom!r} and is not a member"
                    )
                mask |= 1 << k
        return mask

    def contains(self, event: Event) -> bool:
        try:
            self.atom_mask(event)
        except MeasurabilityError:
            return False
        return True

    def __contains__(self, event: Event) -> bool:
        return self.contains(event)

    def event_from_atom_mask(self, mask: int) -> Event:
        bits = 0
        k = 0
        while mask:
            if mask & 1:
                bits |= self.atoms[k].bits
            mask >>= 1
            k += 1
        return Event(self.space, bits)

    def members(self, cap_atoms: int = MAX_ENUMERATED_ATOMS) -> list[Event]:
        """All members, ordered by atom mask.  Refuses beyond ``2**cap_atoms``."""
        if self.n_atoms > cap_atoms:
            raise EnumerationLimitError(
                f"algebra has 2^{self.n_atoms} members; cap is 2^{cap_atoms}"
            )
        atom_bits = [a.bits for a in self.atoms]
        out = [0] * (1 << len(atom_bits))
        for mask in range(1, len(out)):
            low = mask & -mask
            out[mask] = out[mask ^ low] | atom_bits[low.bit_length() - 1]
        return [Event(self.space, b) for b in out]

    def is_refined_by(self, other: SigmaAlgebra) -> bool:
        """True iff every member of this algebra is a member of ``other``."""
        return all(other.contains(a) for a in self.atoms)

    def same_members(self, other: SigmaAlgebra) -> bool:
        _same_space(self.space, other.space)
        return {a.bits for a in self.atoms} == {a.bits for a in other.atoms}


def generate_sigma_algebra(space: SampleSpace, generators: Iterable[Event]) -> SigmaAlgebra:
    """Smallest sigma-algebra on ``space`` containing every generator.

    Atoms are the classes of points that belong to exactly the same
    generators, obtained by splitting blocks against each generator in turn.
    """
    blocks = [space.full_bits]
    for g in generators:
        _same_space(space, g.space)
        split = []
        for b in blocks:
            inside = b & g.bits
            outside = b & ~g.bits
            if inside:
                split.append(inside)
            if outside:
                split.append(outside)
        blocks = split
    return SigmaAlgebra.from_atoms(space, (Event(space, b) for b in blocks))


def is_sigma_algebra(space: SampleSpace, family: Iterable[Event]) -> bool:
    """Brute-force check of the closure axioms for a finite family."""
    members = set()
    for e in family:
        if e.space != space:
            return False
        members.add(e.bits)
    full = space.full_bits
    if full not in members:
        return False
    for b in members:
        if full & ~b not in members:
            return False
    ordered = sorted(members)
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            if a | b not in members:
                return False
    return True


def intersect_algebras(a: SigmaAlgebra, b: SigmaAlgebra) -> SigmaAlgebra:
    """The algebra of events lying in both ``a`` and ``b``.

    Its atoms are the finest common coarsening of the two atom partitions,
    i.e. the connected components of the overlap relation between atoms.
    """
    _same_space(a.space, b.space)
    remaining_a = [x.bits for x in a.atoms]
    remaining_b = [x.bits for x in b.atoms]
    blocks = []
    while remaining_a:
        block = remaining_a.pop(0)
        grew = True
        while grew:
            grew = False
            for pool in (remaining_b, remaining_a):
                keep = []
                for x in pool:
                    if x & block:
                        block |= x
                        grew = True
                    else:
                        keep.append(x)
                pool[:] = keep
        blocks.append(block)
    return SigmaAlgebra.from_atoms(a.space, (Event(a.space, x) for x in blocks))


def point_values(space: SampleSpace, f: Mapping[Any, Hashable] | Sequence[Hashable]) -> list[Hashable]:
    """Normalise a function on points to a list indexed by point index.

    Mappings may be keyed by point label or point index.
    """
    if isinstance(f, Mapping):
        values: list[Any] = [None] * space.size
        seen = [False] * space.size
        for key, v in f.items():
            i = space.index(key) if isinstance(key, str) else int(key)
            values[i] = v
            seen[i] = True
        if not all(seen):
            missing = [space.labels[i] for i, s in enumerate(seen) if not s]
            raise ValueError(f"function undefined at points {missing}")
        return values
    values = list(f)
    if len(values) != space.size:
        raise ValueError(f"expected {space.size} values, got {len(values)}")
    return values


def preimages(space: SampleSpace, f: Mapping[Any, Hashable] | Sequence[Hashable]) -> dict[Hashable, Event]:
    """Map each value of ``f`` to its (nonempty) preimage event."""
    bits: dict[Hashable, int] = {}
    for i, v in enumerate(point_values(space, f)):
        bits[v] = bits.get(v, 0) | 1 << i
    return {v: Event(space, b) for v, b in bits.items()}


def is_measurable(
    f: Mapping[Any, Hashable] | Sequence[Hashable], algebra: SigmaAlgebra
) -> bool:
    """Finite-codomain measurability: every value's preimage is a member."""
    return all(algebra.contains(e) for e in preimages(algebra.space, f).values())

"""Three siblings, three pairwise contexts.

Each of X, Y, Z wears red (R) or blue (B).  Only two siblings are seen
together at a time; in context XY and XZ the pair always matches, in context
YZ it never does.  The base space is the 8 colour triples, and each context's
algebra ignores the absent sibling's coordinate.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from numbers import Real

from .context import (
    ContextId,
    Measure,
    MultiProbabilitySpace,
    check_consistency,
    is_exact,
    make_multi_measurable,
    make_multi_probability,
)
from .lp import solve_feasibility, verify_farkas
from .metaspace import Metaspace, MetaRandomVariable, lift_variable
from .sets import Event, SampleSpace, SigmaAlgebra, generate_sigma_algebra

SIBLINGS = ("X", "Y", "Z")
COLOURS = ("R", "B")
CONTEXTS: dict[ContextId, tuple[int, int]] = {"XY": (0, 1), "XZ": (0, 2), "YZ": (1, 2)}
CELLS = tuple(product(COLOURS, COLOURS))


def _coerce(x: Real | str) -> Real:
    if isinstance(x, str):
        return Fraction(x)
    return x


@dataclass(frozen=True)
class VorobevParams:
    alpha: Real
    beta: Real
    gamma: Real

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma"):
            v = _coerce(getattr(self, name))
            if not 0 <= v <= 1:
                raise ValueError(f"{name} = {v} is outside [0, 1]")
            object.__setattr__(self, name, v)

    def as_tuple(self) -> tuple[Real, Real, Real]:
        return (self.alpha, self.beta, self.gamma)


@lru_cache(maxsize=None)
def vorobev_space() -> SampleSpace:
    return SampleSpace(tuple(",".join(t) for t in product(COLOURS, repeat=3)))


def colours_of(point: int) -> tuple[str, str, str]:
    return tuple(vorobev_space().labels[point].split(","))  # type: ignore[return-value]


def coordinate_event(sibling: int, colour: str) -> Event:
    """All triples in which ``sibling`` wears ``colour``."""
    space = vorobev_space()
    return space.event_from_indices(
        i for i in range(space.size) if colours_of(i)[sibling] == colour
    )


@lru_cache(maxsize=None)
def cylinder_event(context: ContextId, cell: tuple[str, str]) -> Event:
    i, j = CONTEXTS[context]
    return coordinate_event(i, cell[0]) & coordinate_event(j, cell[1])


@lru_cache(maxsize=None)
def cylinder_algebra(context: ContextId) -> SigmaAlgebra:
    i, j = CONTEXTS[context]
    return generate_sigma_algebra(
        vorobev_space(), [coordinate_event(i, "R"), coordinate_event(j, "R")]
    )


def pair_tables(p: VorobevParams) -> dict[ContextId, dict[tuple[str, str], Real]]:
    """The three 2x2 pmfs, rows indexed by the first sibling of each pair."""
    a, b, g = p.as_tuple()
    return {
        "XY": {("R", "R"): a, ("R", "B"): 0, ("B", "R"): 0, ("B", "B"): 1 - a},
        "XZ": {("R", "R"): b, ("R", "B"): 0, ("B", "R"): 0, ("B", "B"): 1 - b},
        "YZ": {("R", "R"): 0, ("R", "B"): g, ("B", "R"): 1 - g, ("B", "B"): 0},
    }


def multi_space_from_tables(
    tables: Mapping[ContextId, Mapping[tuple[str, str], Real]],
    validate: bool = True,
) -> MultiProbabilitySpace:
    space = vorobev_space()
    base = make_multi_measurable(space, {c: cylinder_algebra(c) for c in CONTEXTS})
    measures = {}
    for c in CONTEXTS:
        measures[c] = Measure.from_atom_map(
            cylinder_algebra(c), {cylinder_event(c, cell): tables[c][cell] for cell in CELLS}
        )
    return make_multi_probability(base, measures, validate=validate)


def build_vorobev(p: VorobevParams, validate: bool = True) -> MultiProbabilitySpace:
    return multi_space_from_tables(pair_tables(p), validate=validate)


def pair_pmfs(mps: MultiProbabilitySpace) -> dict[ContextId, dict[tuple[str, str], Real]]:
    """Read the pair tables back out of a multi-probability space."""
    return {
        c: {cell: mps.prob(c, cylinder_event(c, cell)) for cell in CELLS} for c in CONTEXTS
    }


@dataclass(frozen=True)
class PairCorrelation:
    value: Real
    degenerate: bool = False


def _sqrt(x: Real) -> Real:
    if isinstance(x, Fraction):
        n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
        if n * n == x.numerator and d * d == x.denominator:
            return Fraction(n, d)
    return math.sqrt(x)


def pair_correlation(mps: MultiProbabilitySpace, context: ContextId) -> PairCorrelation:
    """Pearson correlation of the two visible colours, R = +1 and B = -1.

    A zero-variance coordinate gives ``PairCorrelation(0, degenerate=True)``.
    """
    sign = {"R": 1, "B": -1}
    ea = eb = eab = 0
    for cell in CELLS:
        m = mps.prob(context, cylinder_event(context, cell))
        sa, sb = sign[cell[0]], sign[cell[1]]
        ea += m * sa
        eb += m * sb
        eab += m * sa * sb
    var_a, var_b = 1 - ea * ea, 1 - eb * eb
    floor = 0 if is_exact(var_a) and is_exact(var_b) else 1e-15
    if var_a <= floor or var_b <= floor:
        return PairCorrelation(0, degenerate=True)
    return PairCorrelation((eab - ea * eb) / _sqrt(var_a * var_b))


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    witness: dict[str, Fraction] | None = None
    certificate: str = ""
    farkas: dict[str, Fraction] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.feasible != (self.witness is not None):
            raise ValueError("a feasible result must carry a witness and vice versa")


def _normalise_target(t) -> dict[tuple[str, str], Fraction]:
    if isinstance(t, Mapping):
        return {cell: Fraction(_coerce(t[cell])) for cell in CELLS}
    rows = [list(r) for r in t]
    return {
        (a, b): Fraction(_coerce(rows[i][j]))
        for i, a in enumerate(COLOURS)
        for j, b in enumerate(COLOURS)
    }


def marginalise(pmf: Mapping[str, Real], context: ContextId) -> dict[tuple[str, str], Real]:
    """Pair marginal of a pmf on the 8 triples, keyed by point label."""
    i, j = CONTEXTS[context]
    out = {cell: 0 for cell in CELLS}
    for label, m in pmf.items():
        colours = label.split(",")
        out[(colours[i], colours[j])] += m
    return out


def single_space_feasible(targets: Mapping[ContextId, object]) -> FeasibilityResult:
    """Is there one pmf on the 8 triples with all three pair marginals?

    Decided exactly: 8 nonnegative unknowns, 12 marginal equalities.
    Infeasibility comes with a verified Farkas certificate.
    """
    space = vorobev_space()
    goals = {c: _normalise_target(targets[c]) for c in CONTEXTS}
    names, A, b = [], [], []
    for c in CONTEXTS:
        for cell in CELLS:
            e = cylinder_event(c, cell)
            names.append(f"{c}:{cell[0]}{cell[1]}")
            A.append([1 if i in e else 0 for i in range(space.size)])
            b.append(goals[c][cell])
    result = solve_feasibility(A, b)
    if result.feasible:
        witness = dict(zip(space.labels, result.x))
        for c in CONTEXTS:
            if marginalise(witness, c) != goals[c]:
                raise AssertionError(f"witness fails the {c} marginal")
        return FeasibilityResult(True, witness=witness, certificate="witness verified")
    y = result.farkas
    if not verify_farkas(A, b, y):
        raise AssertionError("phase-one certificate failed verification")
    terms = " ".join(
        f"{'+' if v > 0 else '-'} {abs(v)}*[{n}]" for n, v in zip(names, y) if v != 0
    )
    rhs = sum(bi * yi for bi, yi in zip(b, y))
    certificate = (
        f"combination {terms.lstrip('+ ')} has nonpositive weight on every triple "
        f"but evaluates to {rhs} > 0 on the targets"
    )
    return FeasibilityResult(
        False, certificate=certificate, farkas={n: v for n, v in zip(names, y) if v != 0}
    )


def grid_values(step: Real | str) -> list[Fraction]:
    step = Fraction(_coerce(step))
    if step <= 0 or step > 1 or (1 / step).denominator != 1:
        raise ValueError(f"grid step {step} must divide 1")
    k = int(1 / step)
    return [step * i for i in range(k + 1)]


def consistent_parameters(grid_step: Real | str) -> list[VorobevParams]:
    """Grid points (lexicographic) whose multi-space passes the consistency check."""
    values = grid_values(grid_step)
    return [
        p
        for p in (VorobevParams(a, b, g) for a, b, g in product(values, repeat=3))
        # table entries are in [0, 1] with unit row sums by construction
        if check_consistency(build_vorobev(p, validate=False)).consistent
    ]


def colour_variables(ms: Metaspace) -> tuple[MetaRandomVariable, ...]:
    """Each sibling's colour, visible only in the two contexts they attend."""
    space = ms.space
    out = []
    for s, name in enumerate(SIBLINGS):
        raw = [colours_of(i)[s] for i in range(space.size)]
        visible = [c for c in CONTEXTS if name in c]
        out.append(lift_variable(raw, visible, ms, name=name))
    return tuple(out)


def swap_colours(label: str) -> str:
    return ",".join("B" if c == "R" else "R" for c in label.split(","))


def format_tables(tables: Mapping[ContextId, Mapping[tuple[str, str], Real]]) -> str:
    blocks = []
    for c, (i, j) in CONTEXTS.items():
        row, col = SIBLINGS[i], SIBLINGS[j]
        cells = tables[c]
        lines = [f"pi_{c:<4} | R_{col:<6} B_{col:<6}", "-" * 26]
        for a in COLOURS:
            lines.append(
                f"{a}_{row:<5} | {str(cells[(a, 'R')]):<8} {str(cells[(a, 'B')]):<8}"
            )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)

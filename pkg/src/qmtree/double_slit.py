"""Discretised double-slit example.

The screen domain is cut into a rectangular grid and every Borel set is
approximated by a union of cells.  Densities come from a stylised Fraunhofer
model: a squared-sinc envelope per slit, and for both slits open a centred
envelope times a squared-cosine fringe term.  The model only has to produce
regions where the two-slit density beats both single-slit densities; it makes
no claim of physical accuracy.  Fields can also be loaded from CSV.

Cells are indexed row-major: ``cell = iy * nx + ix``.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from numbers import Real
from pathlib import Path

import numpy as np
from scipy.optimize import nnls

from .context import (
    ContextId,
    Measure,
    MultiProbabilitySpace,
    make_multi_measurable,
    make_multi_probability,
)
from .metaspace import Metaspace, MetaEvent, build_metaspace, meta_probability
from .sets import Event, SampleSpace, SigmaAlgebra

SLIT_CONTEXTS: dict[ContextId, frozenset[str]] = {
    "L": frozenset({"L"}),
    "R": frozenset({"R"}),
    "LR": frozenset({"L", "R"}),
}
CSV_HEADER = ("x_index", "y_index", "x_center", "y_center", "mass")


@dataclass(frozen=True)
class SlitContext:
    name: ContextId
    open_slits: frozenset[str]

    def __post_init__(self) -> None:
        if SLIT_CONTEXTS.get(self.name) != self.open_slits:
            raise ValueError(f"context {self.name!r} does not match open slits {set(self.open_slits)}")

    @classmethod
    def named(cls, name: ContextId) -> SlitContext:
        return cls(name, SLIT_CONTEXTS[name])


@dataclass(frozen=True)
class ScreenGrid:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int
    ny: int

    def __post_init__(self) -> None:
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("grid bounds must satisfy min < max")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one cell in each direction")

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    def x_edges(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx + 1)

    def y_edges(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny + 1)

    def x_centers(self) -> np.ndarray:
        e = self.x_edges()
        return (e[:-1] + e[1:]) / 2

    def y_centers(self) -> np.ndarray:
        e = self.y_edges()
        return (e[:-1] + e[1:]) / 2

    def cell(self, ix: int, iy: int) -> int:
        if not (0 <= ix < self.nx and 0 <= iy < self.ny):
            raise IndexError(f"cell ({ix}, {iy}) outside {self.nx}x{self.ny} grid")
        return iy * self.nx + ix

    def cells_in_rectangle(self, x0: float, x1: float, y0: float = -math.inf, y1: float = math.inf) -> list[int]:
        """Cells whose centre lies in the closed rectangle ``[x0, x1] x [y0, y1]``."""
        xs = np.flatnonzero((self.x_centers() >= x0) & (self.x_centers() <= x1))
        ys = np.flatnonzero((self.y_centers() >= y0) & (self.y_centers() <= y1))
        return sorted(int(iy) * self.nx + int(ix) for iy in ys for ix in xs)

    def all_cells(self) -> range:
        return range(self.n_cells)


def make_grid(bounds: tuple[float, float, float, float], nx: int, ny: int) -> ScreenGrid:
    x_min, x_max, y_min, y_max = bounds
    return ScreenGrid(float(x_min), float(x_max), float(y_min), float(y_max), int(nx), int(ny))


@dataclass(frozen=True)
class SlitPhysicsParams:
    """Model units; ``slit_width`` must be below ``slit_separation``."""

    slit_separation: float = 1.0
    slit_width: float = 0.2
    wavelength: float = 0.5
    screen_distance: float = 10.0

    def __post_init__(self) -> None:
        for name in ("slit_separation", "slit_width", "wavelength", "screen_distance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.slit_width >= self.slit_separation:
            raise ValueError("slit width must be smaller than the slit separation")

    @property
    def fringe_spacing(self) -> float:
        return self.wavelength * self.screen_distance / self.slit_separation


def default_grid(params: SlitPhysicsParams, nx: int = 401, ny: int = 1, spacings: float = 5.0) -> ScreenGrid:
    """Screen truncated at +-``spacings`` fringe spacings, unit height."""
    half = spacings * params.fringe_spacing
    return make_grid((-half, half, 0.0, 1.0), nx, ny)


def single_slit_intensity(x: np.ndarray, center: float, p: SlitPhysicsParams) -> np.ndarray:
    u = p.slit_width * (x - center) / (p.wavelength * p.screen_distance)
    return np.sinc(u) ** 2


def double_slit_intensity(x: np.ndarray, p: SlitPhysicsParams) -> np.ndarray:
    phase = math.pi * p.slit_separation * x / (p.wavelength * p.screen_distance)
    return single_slit_intensity(x, 0.0, p) * np.cos(phase) ** 2


def intensity(context: ContextId, x: np.ndarray, p: SlitPhysicsParams) -> np.ndarray:
    if context == "L":
        return single_slit_intensity(x, -p.slit_separation / 2, p)
    if context == "R":
        return single_slit_intensity(x, p.slit_separation / 2, p)
    if context == "LR":
        return double_slit_intensity(x, p)
    raise KeyError(f"unknown slit context {context!r}")


@dataclass(frozen=True, eq=False)
class DensityField:
    grid: ScreenGrid
    masses: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        m = np.array(self.masses, dtype=np.float64)
        if m.shape != (self.grid.n_cells,):
            raise ValueError(f"expected {self.grid.n_cells} cell masses, got shape {m.shape}")
        if (m < 0).any():
            raise ValueError("cell masses must be nonnegative")
        total = math.fsum(m)
        if abs(total - 1) > 1e-9:
            raise ValueError(f"cell masses sum to {total}, not 1")
        m.flags.writeable = False
        object.__setattr__(self, "masses", m)

    def as_image(self) -> np.ndarray:
        """Masses as an ``(ny, nx)`` array."""
        return self.masses.reshape(self.grid.ny, self.grid.nx)


def _cell_integrals(grid: ScreenGrid, f, quad_points: int) -> np.ndarray:
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    edges = grid.x_edges()
    half = (edges[1:] - edges[:-1]) / 2
    mid = (edges[1:] + edges[:-1]) / 2
    x = mid[:, None] + half[:, None] * nodes[None, :]
    return (f(x) * weights[None, :]).sum(axis=1) * half


def density_fields(
    grid: ScreenGrid, params: SlitPhysicsParams, quad_points: int = 8
) -> dict[ContextId, DensityField]:
    """Cell masses of the three model densities, each normalised over the grid.

    The densities are uniform in y, so a cell's mass is its x-integral times
    its share of the screen height.
    """
    y_share = np.full(grid.ny, 1.0 / grid.ny)
    out = {}
    for c in SLIT_CONTEXTS:
        fx = _cell_integrals(grid, lambda x: intensity(c, x, params), quad_points)
        raw = np.outer(y_share, fx).ravel()
        out[c] = DensityField(grid, raw / math.fsum(raw))
    return out


def _check_cells(grid: ScreenGrid, cells: Iterable[int]) -> list[int]:
    out = sorted(set(int(i) for i in cells))
    if out and (out[0] < 0 or out[-1] >= grid.n_cells):
        raise IndexError(f"cell index outside grid of {grid.n_cells} cells")
    return out


def context_measure(field: DensityField, cells: Iterable[int]) -> float:
    """Mass of a union of cells, summed in ascending cell order."""
    masses = field.masses
    total = 0.0
    for i in _check_cells(field.grid, cells):
        total += float(masses[i])
    return total


@dataclass(frozen=True)
class SlitMetaspace(Metaspace):
    """A metaspace over (context, cell) pairs that also keeps its fields.

    Base point ``k * n_cells + cell`` stands for cell ``cell`` under the k-th
    context of ``L, R, LR``.  Context ``c``'s algebra separates the cells of
    its own slab and lumps every other point into one null atom.
    """

    grid: ScreenGrid | None = None
    fields: Mapping[ContextId, DensityField] | None = None

    def slab_event(self, context: ContextId, cells: Iterable[int]) -> Event:
        offset = list(SLIT_CONTEXTS).index(context) * self.grid.n_cells
        bits = 0
        for i in _check_cells(self.grid, cells):
            bits |= 1 << (offset + i)
        return Event(self.space, bits)

    def event_of(self, b_l: Iterable[int], b_r: Iterable[int], b_lr: Iterable[int]) -> MetaEvent:
        """The meta-event with cell sets ``b_l``, ``b_r``, ``b_lr`` in the three contexts."""
        return MetaEvent(
            {
                "L": self.slab_event("L", b_l),
                "R": self.slab_event("R", b_r),
                "LR": self.slab_event("LR", b_lr),
            }
        )


def slit_multi_space(fields: Mapping[ContextId, DensityField]) -> MultiProbabilitySpace:
    if set(fields) != set(SLIT_CONTEXTS):
        raise ValueError(f"need density fields for exactly {list(SLIT_CONTEXTS)}")
    grid = fields["L"].grid
    if any(f.grid != grid for f in fields.values()):
        raise ValueError("density fields must share one grid")
    n = grid.n_cells
    space = SampleSpace(tuple(f"{c}:{i}" for c in SLIT_CONTEXTS for i in range(n)))
    algebras, measures = {}, {}
    for k, c in enumerate(SLIT_CONTEXTS):
        slab = ((1 << n) - 1) << (k * n)
        atoms = [Event(space, 1 << (k * n + i)) for i in range(n)]
        atoms.append(Event(space, space.full_bits & ~slab))
        algebra = SigmaAlgebra.from_atoms(space, atoms)
        masses = [0.0] * algebra.n_atoms
        for j, atom in enumerate(algebra.atoms):
            lo = atom.lowest()
            if atom.bits & slab == atom.bits:
                masses[j] = float(fields[c].masses[lo - k * n])
        algebras[c] = algebra
        measures[c] = Measure(algebra, tuple(masses))
    return make_multi_probability(make_multi_measurable(space, algebras), measures)


def build_slit_metaspace(
    fields: Mapping[ContextId, DensityField], q: Mapping[ContextId, Real]
) -> SlitMetaspace:
    ms = build_metaspace(slit_multi_space(fields), q)
    return SlitMetaspace(ms.source, ms.q, grid=fields["L"].grid, fields=dict(fields))


def hat_space_probability(
    ms: SlitMetaspace, b_l: Iterable[int], b_r: Iterable[int], b_lr: Iterable[int]
) -> Real:
    """Probability in the space over (context, cell) with the algebra label dropped.

    Follows the same summation order as :func:`meta_probability` on
    ``ms.event_of(b_l, b_r, b_lr)``, so the two agree bit for bit.
    """
    total: Real = 0
    for c, cells in zip(SLIT_CONTEXTS, (b_l, b_r, b_lr)):
        total += ms.q[c] * context_measure(ms.fields[c], cells)
    return total


def slit_meta_probability(
    ms: SlitMetaspace, b_l: Iterable[int], b_r: Iterable[int], b_lr: Iterable[int]
) -> Real:
    return meta_probability(ms, ms.event_of(b_l, b_r, b_lr))


@dataclass(frozen=True)
class ViolationReport:
    violation_cells: tuple[int, ...]
    best_fit: tuple[float, float]
    residual: float
    relative_residual: float
    threshold: float

    @property
    def no_classical_mixture(self) -> bool:
        return self.relative_residual > self.threshold

    def to_json(self) -> dict:
        return {
            "violation_cells": list(self.violation_cells),
            "n_violation_cells": len(self.violation_cells),
            "best_fit": {"pi_L": self.best_fit[0], "pi_R": self.best_fit[1]},
            "residual": self.residual,
            "relative_residual": self.relative_residual,
            "threshold": self.threshold,
            "no_classical_mixture": self.no_classical_mixture,
        }


def interference_violation(
    fields: Mapping[ContextId, DensityField], threshold: float = 1e-6, margin: float = 1e-12
) -> ViolationReport:
    """Cells where the two-slit mass beats both single-slit masses, plus the
    best nonnegative mixture ``pi_L f_L + pi_R f_R`` of the two-slit field."""
    f_l, f_r, f_lr = (fields[c].masses for c in ("L", "R", "LR"))
    grid = fields["L"].grid
    if fields["R"].grid != grid or fields["LR"].grid != grid:
        raise ValueError("density fields must share one grid")
    cells = np.flatnonzero(f_lr > np.maximum(f_l, f_r) + margin)
    weights, residual = nnls(np.column_stack([f_l, f_r]), f_lr)
    norm = float(np.linalg.norm(f_lr))
    return ViolationReport(
        violation_cells=tuple(int(i) for i in cells),
        best_fit=(float(weights[0]), float(weights[1])),
        residual=float(residual),
        relative_residual=float(residual) / norm,
        threshold=threshold,
    )


def write_density_csv(field: DensityField, path: str | Path) -> None:
    grid = field.grid
    xc, yc = grid.x_centers(), grid.y_centers()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for iy in range(grid.ny):
            for ix in range(grid.nx):
                m = field.masses[iy * grid.nx + ix]
                w.writerow([ix, iy, f"{xc[ix]:.17g}", f"{yc[iy]:.17g}", f"{m:.17g}"])


def read_density_csv(path: str | Path, grid: ScreenGrid | None = None) -> DensityField:
    """Load a field written by :func:`write_density_csv`.

    Without ``grid`` the grid is inferred from the cell centres, assuming
    uniform spacing.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
    body = rows[1:]
    ix = [int(r[0]) for r in body]
    iy = [int(r[1]) for r in body]
    if grid is None:
        nx, ny = max(ix) + 1, max(iy) + 1
        xc = sorted({float(r[2]) for r in body})
        yc = sorted({float(r[3]) for r in body})
        dx = (xc[-1] - xc[0]) / (nx - 1) if nx > 1 else None
        dy = (yc[-1] - yc[0]) / (ny - 1) if ny > 1 else None
        if dx is None or dy is None:
            raise ValueError(f"{path}: cannot infer cell size from one column or row; pass grid")
        grid = make_grid((xc[0] - dx / 2, xc[-1] + dx / 2, yc[0] - dy / 2, yc[-1] + dy / 2), nx, ny)
    masses = np.zeros(grid.n_cells)
    seen = np.zeros(grid.n_cells, dtype=bool)
    for r, i, j in zip(body, ix, iy):
        k = grid.cell(i, j)
        masses[k] = float(r[4])
        seen[k] = True
    if not seen.all():
        raise ValueError(f"{path}: missing cells")
    return DensityField(grid, masses)


def mixture_fields(
    fields: Mapping[ContextId, DensityField], pi_l: float, pi_r: float
) -> dict[ContextId, DensityField]:
    """Replace the two-slit field by the mixture ``pi_l f_L + pi_r f_R``."""
    mix = pi_l * fields["L"].masses + pi_r * fields["R"].masses
    return {**fields, "LR": DensityField(fields["L"].grid, mix)}

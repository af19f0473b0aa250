from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from qmtree.double_slit import (
    SLIT_CONTEXTS,
    DensityField,
    ScreenGrid,
    SlitContext,
    SlitPhysicsParams,
    build_slit_metaspace,
    context_measure,
    default_grid,
    density_fields,
    hat_space_probability,
    interference_violation,
    make_grid,
    mixture_fields,
    read_density_csv,
    slit_meta_probability,
    write_density_csv,
)
from qmtree.metaspace import meta_probability, validate_metaspace

P = SlitPhysicsParams()


def oracle_intensity(context: str, x, d=1.0, w=0.2, lam=0.5, L=10.0):
    """Closed-form model written out independently of the library."""

    def sinc2(u):
        u = np.asarray(u, float)
        out = np.ones_like(u)
        nz = u != 0
        out[nz] = (np.sin(u[nz]) / u[nz]) ** 2
        return out

    k = math.pi / (lam * L)
    if context == "L":
        return sinc2(k * w * (x + d / 2))
    if context == "R":
        return sinc2(k * w * (x - d / 2))
    return sinc2(k * w * x) * np.cos(k * d * x) ** 2


def oracle_masses(context: str, grid: ScreenGrid, refine: int = 10) -> np.ndarray:
    """Midpoint rule on a grid ``refine`` times finer, summed back per cell."""
    fine = grid.nx * refine
    h = (grid.x_max - grid.x_min) / fine
    mids = grid.x_min + h * (np.arange(fine) + 0.5)
    per_cell = (oracle_intensity(context, mids) * h).reshape(grid.nx, refine).sum(axis=1)
    per_cell /= per_cell.sum()
    return np.tile(per_cell, grid.ny) / grid.ny


@pytest.fixture(scope="module")
def default_fields():
    return density_fields(default_grid(P), P)


class TestGrid:
    def test_single_cell(self):
        g = make_grid((-1, 1, -1, 1), 1, 1)
        assert g.n_cells == 1 and g.cells_in_rectangle(-1, 1) == [0]

    def test_one_dimensional_screen(self):
        g = make_grid((-5, 5, 0, 1), 401, 1)
        assert g.n_cells == 401 and g.dx == pytest.approx(10 / 401)

    @pytest.mark.parametrize("args", [((-1, 1, 0, 1), 0, 1), ((1, -1, 0, 1), 3, 1), ((0, 1, 1, 1), 3, 1)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            make_grid(*args)

    def test_centre_snapping(self):
        g = make_grid((0, 10, 0, 2), 10, 2)
        assert g.cells_in_rectangle(0.6, 2.4) == [1, 11]
        assert g.cells_in_rectangle(0.4, 2.6, 0, 1) == [0, 1, 2]

    def test_contexts(self):
        assert SlitContext.named("LR").open_slits == frozenset({"L", "R"})
        with pytest.raises(ValueError):
            SlitContext("LR", frozenset({"L"}))

    def test_params(self):
        with pytest.raises(ValueError):
            SlitPhysicsParams(slit_width=1.5)
        assert P.fringe_spacing == 5.0


class TestDensities:
    def test_mirror_symmetry(self, default_fields):
        assert np.allclose(default_fields["L"].masses, default_fields["R"].masses[::-1], atol=1e-9, rtol=0)

    def test_normalised(self):
        fields = density_fields(make_grid((-7, 3, 0, 2), 57, 3), SlitPhysicsParams(1.3, 0.4, 0.6, 8.0))
        for f in fields.values():
            assert abs(math.fsum(f.masses) - 1) <= 1e-9

    def test_matches_fine_midpoint_oracle(self, default_fields):
        grid = default_fields["L"].grid
        for c in SLIT_CONTEXTS:
            m = default_fields[c].masses
            coarse = np.abs(m - oracle_masses(c, grid)).max()
            fine = np.abs(m - oracle_masses(c, grid, refine=40)).max()
            assert coarse <= 1e-5 * m.max()
            # the oracle's O(h^2) error shrinks toward the library values
            assert fine < coarse / 10

    def test_central_fringe_beats_twice_single_slit(self):
        grid = make_grid((-5, 5, 0, 1), 401, 1)
        fields = density_fields(grid, P)
        centre = 200
        assert fields["LR"].masses[centre] > 2 * fields["L"].masses[centre]
        ref_lr, ref_l = oracle_masses("LR", grid), oracle_masses("L", grid)
        assert ref_lr[centre] > 2 * ref_l[centre]

    def test_density_field_validation(self):
        g = make_grid((0, 1, 0, 1), 2, 1)
        with pytest.raises(ValueError):
            DensityField(g, np.array([0.5, 0.4]))
        with pytest.raises(ValueError):
            DensityField(g, np.array([1.5, -0.5]))
        f = DensityField(g, np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            f.masses[0] = 1.0


class TestContextMeasure:
    def test_all_and_nothing(self, default_fields):
        f = default_fields["LR"]
        assert context_measure(f, f.grid.all_cells()) == pytest.approx(1, abs=1e-12)
        assert context_measure(f, []) == 0

    def test_left_half_of_symmetric_field(self):
        fields = density_fields(default_grid(P, nx=400), P)
        g = fields["LR"].grid
        assert abs(context_measure(fields["LR"], g.cells_in_rectangle(g.x_min, 0.0)) - 0.5) <= 1e-6

    def test_out_of_grid(self, default_fields):
        with pytest.raises(IndexError):
            context_measure(default_fields["L"], [10_000])

    def test_refinement(self):
        """Halving the cell width moves a fixed rectangle's mass by O(width)."""
        x0, x1 = -3.3, 4.1
        norm = quad(lambda x: oracle_intensity("LR", np.array([x]))[0], -25, 25, limit=400)[0]
        fmax = 1.0 / norm
        exact = quad(lambda x: oracle_intensity("LR", np.array([x]))[0], x0, x1, limit=200)[0] / norm
        values, widths = [], []
        for nx in (100, 200, 400):
            fields = density_fields(default_grid(P, nx=nx), P)
            g = fields["LR"].grid
            values.append(context_measure(fields["LR"], g.cells_in_rectangle(x0, x1)))
            widths.append(g.dx)
            assert abs(values[-1] - exact) <= 2 * fmax * g.dx
        for k in range(2):
            assert abs(values[k + 1] - values[k]) <= 2 * fmax * widths[k]


@pytest.fixture(scope="module")
def small_fields():
    return density_fields(default_grid(P, nx=41), P)


class TestSlitMetaspace:
    def test_only_two_slit_context(self, small_fields):
        ms = build_slit_metaspace(small_fields, {"L": 0, "R": 0, "LR": 1})
        cells = list(range(5, 17))
        assert slit_meta_probability(ms, range(41), range(41), cells) == context_measure(small_fields["LR"], cells)

    def test_everything(self, small_fields):
        ms = build_slit_metaspace(small_fields, {c: 1 / 3 for c in SLIT_CONTEXTS})
        assert slit_meta_probability(ms, range(41), range(41), range(41)) == pytest.approx(1, abs=1e-12)

    def test_weighted_example(self, small_fields):
        ms = build_slit_metaspace(small_fields, {"L": 0.25, "R": 0.25, "LR": 0.5})
        g = small_fields["L"].grid
        left = g.cells_in_rectangle(g.x_min, 0.0)
        got = slit_meta_probability(ms, left, [], g.all_cells())
        expected = 0.25 * math.fsum(small_fields["L"].masses[left]) + 0.5 * math.fsum(small_fields["LR"].masses)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_hat_space_edge_cases(self, small_fields):
        ms = build_slit_metaspace(small_fields, {"L": 0.2, "R": 0.3, "LR": 0.5})
        assert hat_space_probability(ms, [], [], []) == 0
        assert hat_space_probability(ms, range(41), range(41), range(41)) == pytest.approx(1, abs=1e-12)

    def test_bad_q(self, small_fields):
        with pytest.raises(ValueError, match="q not on simplex"):
            build_slit_metaspace(small_fields, {"L": 0.5, "R": 0.5, "LR": 0.5})

    def test_contextual_algebras_are_not_nested(self, small_fields):
        ms = build_slit_metaspace(small_fields, {c: 1 / 3 for c in SLIT_CONTEXTS})
        rng = random.Random(3)
        for c in SLIT_CONTEXTS:
            for other in SLIT_CONTEXTS:
                if other == c:
                    continue
                assert not ms.algebra(c).is_refined_by(ms.algebra(other))
                for _ in range(50):
                    cells = [i for i in range(41) if rng.random() < 0.3] or [20]
                    e = ms.slab_event(c, cells)
                    if ms.source.prob(c, e) > 0:
                        assert not ms.algebra(other).contains(e)

    def test_axioms(self, small_fields):
        ms = build_slit_metaspace(small_fields, {"L": 0.1, "R": 0.6, "LR": 0.3})
        assert validate_metaspace(ms)


cell_sets = st.lists(st.integers(0, 40), max_size=41).map(sorted)


@given(st.lists(st.floats(0, 1), min_size=3, max_size=3).filter(lambda w: sum(w) > 0.01), cell_sets, cell_sets, cell_sets, cell_sets)
def test_slit_compound_measure(small_fields, w, b_l, b_r, b_lr, extra):
    q = dict(zip(SLIT_CONTEXTS, (x / sum(w) for x in w)))
    if abs(sum(q.values()) - 1) > 1e-12:
        return
    ms = build_slit_metaspace(small_fields, q)
    a = ms.event_of(b_l, b_r, b_lr)
    rest = [sorted(set(extra) - set(b)) for b in (b_l, b_r, b_lr)]
    b = ms.event_of(*rest)
    assert a.isdisjoint(b)
    pa, pb = meta_probability(ms, a), meta_probability(ms, b)
    assert pa >= 0 and pb >= 0
    assert abs(meta_probability(ms, a | b) - (pa + pb)) <= 1e-12
    assert hat_space_probability(ms, b_l, b_r, b_lr) == pa


class TestViolation:
    def test_default_params(self, default_fields):
        report = interference_violation(default_fields)
        assert report.violation_cells
        assert 200 in report.violation_cells
        assert report.relative_residual > 1e-3 and report.no_classical_mixture
        grid = default_fields["L"].grid
        ref = {c: oracle_masses(c, grid) for c in SLIT_CONTEXTS}
        assert ref["LR"][200] > max(ref["L"][200], ref["R"][200])

    def test_synthetic_half_mixture(self, default_fields):
        report = interference_violation(mixture_fields(default_fields, 0.5, 0.5))
        assert report.residual < 1e-12
        assert report.best_fit == pytest.approx((0.5, 0.5), abs=1e-9)
        assert not report.violation_cells and not report.no_classical_mixture

    def test_two_slit_equal_to_left(self, default_fields):
        report = interference_violation({**default_fields, "LR": default_fields["L"]})
        assert report.residual < 1e-12
        assert report.best_fit == pytest.approx((1.0, 0.0), abs=1e-9)

    def test_report_json(self, default_fields):
        body = interference_violation(default_fields).to_json()
        assert list(body)[:2] == ["violation_cells", "n_violation_cells"]
        assert set(body["best_fit"]) == {"pi_L", "pi_R"}


class TestCsv:
    def test_bit_exact_round_trip(self, tmp_path, default_fields):
        for c, f in default_fields.items():
            path = tmp_path / f"{c}.csv"
            write_density_csv(f, path)
            back = read_density_csv(path, f.grid)
            assert np.array_equal(back.masses, f.masses)
            assert path.read_text().splitlines()[0] == "x_index,y_index,x_center,y_center,mass"

    def test_grid_inference(self, tmp_path):
        g = make_grid((-2, 2, 0, 1), 8, 2)
        f = density_fields(g, P)["LR"]
        write_density_csv(f, tmp_path / "f.csv")
        back = read_density_csv(tmp_path / "f.csv")
        assert back.grid.nx == 8 and back.grid.ny == 2
        assert back.grid.x_min == pytest.approx(-2) and back.grid.y_max == pytest.approx(1)
        assert np.array_equal(back.masses, f.masses)

    def test_bad_header(self, tmp_path):
        (tmp_path / "bad.csv").write_text("a,b\n")
        with pytest.raises(ValueError):
            read_density_csv(tmp_path / "bad.csv")

"""JSON measurement-tree files.

A file names a finite sample space (explicit labels, a product of named
factors, or a screen grid), one entry per context with its algebra and
measure, the first-stage distribution ``q`` and optional meta-variables.
Masses written as strings (``"1/3"``, ``"0.25"``) are read as exact
fractions; JSON numbers stay floats.

Parsing runs a JSON-schema pass for shape and then a semantic pass that
builds the metaspace; every problem found is reported with its JSON path.
"""

from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from numbers import Real
from pathlib import Path
from typing import Any

from jsonschema import Draft202012Validator

from .context import Measure, make_multi_measurable, make_multi_probability, validate_measure
from .double_slit import SLIT_CONTEXTS, ScreenGrid, build_slit_metaspace, read_density_csv
from .errors import MeasurabilityError
from .metaspace import Metaspace, MetaRandomVariable, build_metaspace, lift_variable, uniform_q
from .sets import Event, SampleSpace, SigmaAlgebra, generate_sigma_algebra

SCHEMA_VERSION = 1

_mass = {"oneOf": [{"type": "number", "minimum": 0}, {"type": "string", "pattern": r"^\s*\d+(\.\d+)?(/\d+)?\s*$"}]}
_labels = {"type": "array", "items": {"type": "string"}}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "sample_space", "contexts"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "sample_space": {
            "type": "object",
            "minProperties": 1,
            "maxProperties": 1,
            "additionalProperties": False,
            "properties": {
                "labels": {**_labels, "minItems": 1},
                "factors": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["name", "values"],
                        "additionalProperties": False,
                        "properties": {
                            "name": {"type": "string", "minLength": 1},
                            "values": {**_labels, "minItems": 1},
                        },
                    },
                },
                "grid": {
                    "type": "object",
                    "required": ["x_min", "x_max", "y_min", "y_max", "nx", "ny"],
                    "additionalProperties": False,
                    "properties": {
                        "x_min": {"type": "number"},
                        "x_max": {"type": "number"},
                        "y_min": {"type": "number"},
                        "y_max": {"type": "number"},
                        "nx": {"type": "integer", "minimum": 1},
                        "ny": {"type": "integer", "minimum": 1},
                    },
                },
            },
        },
        "contexts": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "cylinder": {**_labels, "minItems": 1},
                    "generators": {"type": "array", "items": _labels},
                    "pmf": {"type": "object", "additionalProperties": _mass},
                    "atom_masses": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["points", "mass"],
                            "additionalProperties": False,
                            "properties": {"points": _labels, "mass": _mass},
                        },
                    },
                    "density_csv": {"type": "string"},
                },
            },
        },
        "q": {"type": "object", "additionalProperties": _mass},
        "variables": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "visible"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "visible": _labels,
                    "factor": {"type": "string"},
                    "raw": {"type": "object", "additionalProperties": {"type": "string"}},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class SpecIssue:
    path: str
    message: str
    line: int | None = None

    def __str__(self) -> str:
        where = self.path if self.line is None else f"{self.path} (line {self.line})"
        return f"{where}: {self.message}"


class SpecError(ValueError):
    def __init__(self, issues: list[SpecIssue]):
        self.issues = list(issues)
        super().__init__("\n".join(str(i) for i in self.issues))


@dataclass(frozen=True)
class ContextSpec:
    name: str
    cylinder: tuple[str, ...] | None = None
    generators: tuple[tuple[str, ...], ...] | None = None
    pmf: Mapping[str, Real] | None = None
    atom_masses: tuple[tuple[tuple[str, ...], Real], ...] | None = None
    density_csv: str | None = None


@dataclass(frozen=True)
class VariableSpec:
    name: str
    visible: tuple[str, ...]
    factor: str | None = None
    raw: Mapping[str, str] | None = None


@dataclass(frozen=True)
class MeasurementTreeSpec:
    labels: tuple[str, ...] | None = None
    factors: tuple[tuple[str, tuple[str, ...]], ...] | None = None
    grid: ScreenGrid | None = None
    contexts: tuple[ContextSpec, ...] = ()
    q: Mapping[str, Real] | None = None
    variables: tuple[VariableSpec, ...] = ()
    base_dir: Path | None = field(default=None, compare=False, repr=False)

    def sample_space(self) -> SampleSpace | None:
        if self.labels is not None:
            return SampleSpace(self.labels)
        if self.factors is not None:
            values = [v for _, v in self.factors]
            return SampleSpace(tuple(",".join(t) for t in product(*values)))
        return None

    def build(self) -> BuiltTree:
        issues: list[SpecIssue] = []
        built = _build(self, issues)
        if issues:
            raise SpecError(issues)
        return built


@dataclass(frozen=True)
class BuiltTree:
    metaspace: Metaspace
    variables: Mapping[str, MetaRandomVariable]


def _mass_value(x: Any) -> Real:
    return Fraction(x.strip()) if isinstance(x, str) else x


def _mass_json(x: Real) -> Any:
    return str(x) if isinstance(x, Fraction) else x


def _line_of(text: str, path: list) -> int | None:
    """Best-effort line of the last object key on ``path``."""
    keys = [p for p in path if isinstance(p, str)]
    if not keys:
        return None
    needle = json.dumps(keys[-1]) + ":"
    for n, line in enumerate(text.splitlines(), 1):
        if needle in line.replace('" :', '":'):
            return n
    return None


def _json_path(path) -> str:
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def parse_tree_spec(text: str, base_dir: str | Path | None = None) -> MeasurementTreeSpec:
    """Parse and fully validate a tree file; raises SpecError listing every issue."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError([SpecIssue("$", f"syntax error: {exc.msg} (column {exc.colno})", exc.lineno)]) from None
    errors = sorted(Draft202012Validator(SCHEMA).iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise SpecError(
            [SpecIssue(_json_path(e.absolute_path), e.message, _line_of(text, list(e.absolute_path))) for e in errors]
        )
    spec = spec_from_json(data, base_dir)
    spec.build()
    return spec


def load_tree_spec(path: str | Path) -> MeasurementTreeSpec:
    path = Path(path)
    return parse_tree_spec(path.read_text(encoding="utf-8"), base_dir=path.parent)


def spec_from_json(data: Mapping[str, Any], base_dir: str | Path | None = None) -> MeasurementTreeSpec:
    ss = data["sample_space"]
    grid = None
    if "grid" in ss:
        g = ss["grid"]
        grid = ScreenGrid(float(g["x_min"]), float(g["x_max"]), float(g["y_min"]), float(g["y_max"]), g["nx"], g["ny"])
    contexts = []
    for c in data["contexts"]:
        contexts.append(
            ContextSpec(
                name=c["name"],
                cylinder=tuple(c["cylinder"]) if "cylinder" in c else None,
                generators=tuple(tuple(g) for g in c["generators"]) if "generators" in c else None,
                pmf={k: _mass_value(v) for k, v in c["pmf"].items()} if "pmf" in c else None,
                atom_masses=tuple((tuple(a["points"]), _mass_value(a["mass"])) for a in c["atom_masses"])
                if "atom_masses" in c
                else None,
                density_csv=c.get("density_csv"),
            )
        )
    variables = tuple(
        VariableSpec(
            name=v["name"],
            visible=tuple(v["visible"]),
            factor=v.get("factor"),
            raw=dict(v["raw"]) if "raw" in v else None,
        )
        for v in data.get("variables", [])
    )
    return MeasurementTreeSpec(
        labels=tuple(ss["labels"]) if "labels" in ss else None,
        factors=tuple((f["name"], tuple(f["values"])) for f in ss["factors"]) if "factors" in ss else None,
        grid=grid,
        contexts=tuple(contexts),
        q={k: _mass_value(v) for k, v in data["q"].items()} if "q" in data else None,
        variables=variables,
        base_dir=Path(base_dir) if base_dir is not None else None,
    )


def spec_to_json(spec: MeasurementTreeSpec) -> dict[str, Any]:
    """Canonical JSON form; keys in a fixed order."""
    if spec.labels is not None:
        ss: dict[str, Any] = {"labels": list(spec.labels)}
    elif spec.factors is not None:
        ss = {"factors": [{"name": n, "values": list(v)} for n, v in spec.factors]}
    else:
        g = spec.grid
        ss = {"grid": {"x_min": g.x_min, "x_max": g.x_max, "y_min": g.y_min, "y_max": g.y_max, "nx": g.nx, "ny": g.ny}}
    contexts = []
    for c in spec.contexts:
        entry: dict[str, Any] = {"name": c.name}
        if c.cylinder is not None:
            entry["cylinder"] = list(c.cylinder)
        if c.generators is not None:
            entry["generators"] = [list(g) for g in c.generators]
        if c.pmf is not None:
            entry["pmf"] = {k: _mass_json(v) for k, v in c.pmf.items()}
        if c.atom_masses is not None:
            entry["atom_masses"] = [{"points": list(p), "mass": _mass_json(m)} for p, m in c.atom_masses]
        if c.density_csv is not None:
            entry["density_csv"] = c.density_csv
        contexts.append(entry)
    out: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "sample_space": ss, "contexts": contexts}
    if spec.q is not None:
        out["q"] = {k: _mass_json(v) for k, v in spec.q.items()}
    if spec.variables:
        variables = []
        for v in spec.variables:
            entry = {"name": v.name, "visible": list(v.visible)}
            if v.factor is not None:
                entry["factor"] = v.factor
            if v.raw is not None:
                entry["raw"] = dict(v.raw)
            variables.append(entry)
        out["variables"] = variables
    return out


def dumps_tree_spec(spec: MeasurementTreeSpec) -> str:
    return json.dumps(spec_to_json(spec), indent=2) + "\n"


def _build(spec: MeasurementTreeSpec, issues: list[SpecIssue]) -> BuiltTree | None:
    def fail(path: str, msg: str) -> None:
        issues.append(SpecIssue(path, msg))

    names = [c.name for c in spec.contexts]
    for i, n in enumerate(names):
        if n in names[:i]:
            fail(f"$.contexts[{i}].name", f"duplicate context {n!r}")

    if spec.grid is not None:
        ms = _build_grid(spec, fail)
    else:
        ms = _build_finite(spec, fail)
    if ms is None or issues:
        return None

    variables = {}
    for i, v in enumerate(spec.variables):
        path = f"$.variables[{i}]"
        unknown = [c for c in v.visible if c not in names]
        if unknown:
            fail(f"{path}.visible", f"unknown context reference {unknown}")
            continue
        raw = _variable_raw(spec, v, path, fail)
        if raw is None:
            continue
        try:
            variables[v.name] = lift_variable(raw, v.visible, ms, name=v.name)
        except (MeasurabilityError, ValueError) as exc:
            fail(path, str(exc))
    return BuiltTree(ms, variables)


def _variable_raw(spec, v: VariableSpec, path: str, fail):
    if (v.factor is None) == (v.raw is None):
        fail(path, "give exactly one of 'factor' or 'raw'")
        return None
    if spec.grid is not None:
        fail(path, "variables are not supported on grid sample spaces")
        return None
    space = spec.sample_space()
    if v.factor is not None:
        names = [n for n, _ in spec.factors or ()]
        if v.factor not in names:
            fail(f"{path}.factor", f"unknown factor {v.factor!r}")
            return None
        k = names.index(v.factor)
        return [label.split(",")[k] for label in space.labels]
    missing = [lab for lab in space.labels if lab not in v.raw]
    extra = [lab for lab in v.raw if lab not in space.labels]
    if missing or extra:
        fail(f"{path}.raw", f"raw map must cover exactly the sample space (missing {missing}, unknown {extra})")
        return None
    return dict(v.raw)


def _resolve_q(spec: MeasurementTreeSpec, contexts: list[str], fail) -> dict[str, Real] | None:
    if spec.q is None:
        return uniform_q(contexts)
    unknown = [c for c in spec.q if c not in contexts]
    if unknown:
        fail("$.q", f"unknown context reference {unknown}")
        return None
    q = {c: spec.q.get(c, 0) for c in contexts}
    total = sum(q.values())
    if any(v < 0 for v in q.values()) or abs(total - 1) > 1e-12:
        fail("$.q", f"q not on simplex (entries sum to {total})")
        return None
    return q


def _build_grid(spec: MeasurementTreeSpec, fail) -> Metaspace | None:
    names = [c.name for c in spec.contexts]
    if sorted(names) != sorted(SLIT_CONTEXTS):
        fail("$.contexts", f"grid sample spaces need exactly the contexts {list(SLIT_CONTEXTS)}")
        return None
    fields = {}
    for i, c in enumerate(spec.contexts):
        if c.density_csv is None or any(x is not None for x in (c.cylinder, c.generators, c.pmf, c.atom_masses)):
            fail(f"$.contexts[{i}]", "grid contexts take only 'density_csv'")
            continue
        path = Path(c.density_csv)
        if not path.is_absolute() and spec.base_dir is not None:
            path = spec.base_dir / path
        try:
            fields[c.name] = read_density_csv(path, spec.grid)
        except (OSError, ValueError, IndexError) as exc:
            fail(f"$.contexts[{i}].density_csv", str(exc))
    if len(fields) != 3:
        return None
    q = _resolve_q(spec, list(SLIT_CONTEXTS), fail)
    if q is None:
        return None
    return build_slit_metaspace(fields, q)


def _build_finite(spec: MeasurementTreeSpec, fail) -> Metaspace | None:
    try:
        space = spec.sample_space()
    except ValueError as exc:
        fail("$.sample_space", str(exc))
        return None
    factor_names = [n for n, _ in spec.factors or ()]
    if len(set(factor_names)) != len(factor_names):
        fail("$.sample_space.factors", "duplicate factor names")
        return None
    algebras, measures = {}, {}
    for i, c in enumerate(spec.contexts):
        path = f"$.contexts[{i}]"
        if c.density_csv is not None:
            fail(path, "'density_csv' needs a grid sample space")
            continue
        if c.cylinder is not None and c.generators is None and c.atom_masses is None:
            built = _cylinder_context(spec, space, c, path, fail)
        elif c.generators is not None and c.cylinder is None and c.pmf is None:
            built = _generated_context(space, c, path, fail)
        else:
            fail(path, "use either 'cylinder' with 'pmf' or 'generators' with 'atom_masses'")
            continue
        if built is None:
            continue
        algebra, measure = built
        check = validate_measure(algebra, measure)
        if not check:
            fail(path, f"invalid measure ({check.axiom}: {check.detail})")
            continue
        algebras[c.name], measures[c.name] = algebra, measure
    if len(algebras) != len(spec.contexts):
        return None
    mps = make_multi_probability(make_multi_measurable(space, algebras), measures, validate=False)
    q = _resolve_q(spec, list(mps.contexts), fail)
    if q is None:
        return None
    return build_metaspace(mps, q)


def _cylinder_context(spec, space: SampleSpace, c: ContextSpec, path: str, fail):
    if spec.factors is None:
        fail(f"{path}.cylinder", "'cylinder' needs a factor sample space")
        return None
    names = [n for n, _ in spec.factors]
    unknown = [f for f in c.cylinder if f not in names]
    if unknown or len(set(c.cylinder)) != len(c.cylinder):
        fail(f"{path}.cylinder", f"unknown or repeated factors {unknown or list(c.cylinder)}")
        return None
    if c.pmf is None:
        fail(path, "cylinder context needs a 'pmf'")
        return None
    idx = [names.index(f) for f in c.cylinder]
    split = [label.split(",") for label in space.labels]
    cells: dict[str, int] = {}
    for i, parts in enumerate(split):
        key = ",".join(parts[k] for k in idx)
        cells[key] = cells.get(key, 0) | 1 << i
    unknown_keys = [k for k in c.pmf if k not in cells]
    if unknown_keys:
        fail(f"{path}.pmf", f"unknown cells {unknown_keys}; expected keys like {next(iter(cells))!r}")
        return None

    algebra = SigmaAlgebra.from_atoms(space, (Event(space, b) for b in cells.values()))
    masses = {Event(space, b): c.pmf.get(k, 0) for k, b in cells.items()}
    return algebra, Measure.from_atom_map(algebra, masses)


def _generated_context(space: SampleSpace, c: ContextSpec, path: str, fail):
    try:
        gens = [space.event(g) for g in c.generators]
    except KeyError as exc:
        fail(f"{path}.generators", str(exc.args[0]))
        return None
    algebra = generate_sigma_algebra(space, gens)
    masses = {}
    for j, (points, m) in enumerate(c.atom_masses or ()):
        try:
            e = space.event(points)
        except KeyError as exc:
            fail(f"{path}.atom_masses[{j}]", str(exc.args[0]))
            return None
        if e not in algebra.atoms:
            fail(f"{path}.atom_masses[{j}]", f"{e!r} is not an atom of the generated algebra")
            return None
        masses[e] = m
    return algebra, Measure.from_atom_map(algebra, masses)


def bundled_spec_path(name: str = "vorobev_half.json") -> Path:
    return Path(__file__).parent / "data" / name

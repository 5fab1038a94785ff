"""Versioned JSON problem files.

Every file is an object with ``version`` (currently 1) and ``kind``, one of
``localization``, ``contribution``, ``verification``, ``global`` or ``cc``.
Scalars are strings (``"p/q"`` or ``"a/b+c/d i"``); floats are refused.
A file may instead reference a programmatic builder:
``{"version": 1, "kind": "contribution", "generator": {"name": "example_5_2_M1", "k": 3}}``.
README_PROBLEM_FORMAT.md documents the layout with examples.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from charcycle import EmbeddedComplex, TestFunction
from conic import ConicSheaf, Equivariant
from errors import LefschetzError, ProblemFormatError
from euler import CellComplex, CellularSheafModel, ConstructibleFn, FixedCellData
from exact import matrix, rational
from fan import Cone, Fan, build_fan, cone_map_analysis, cross_fan, line_fan, sector_fan
from lefschetz import CellFiber, ComponentEmbedding, FixedComponentModel
from spectral import RationalMatrix, Subspace

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
KINDS = ("localization", "contribution", "verification", "global", "cc")


# ---------------------------------------------------------------------------
# Problem records
# ---------------------------------------------------------------------------

@dataclass
class LocalizationProblem:
    sheaf: ConicSheaf
    equivariant: Equivariant
    expanding: Optional[Subspace] = None
    shrinking: Optional[Subspace] = None
    name: str = ""

    kind = "localization"

    def to_dict(self) -> Dict[str, Any]:
        return {"version": SCHEMA_VERSION, "kind": self.kind, "name": self.name, **_fiber_to_dict(self.as_fiber())}

    def as_fiber(self) -> CellFiber:
        return CellFiber(self.equivariant.matrix, self.sheaf, self.equivariant, self.expanding, self.shrinking)


@dataclass
class ContributionProblem:
    model: FixedComponentModel

    kind = "contribution"

    @property
    def name(self) -> str:
        return self.model.name

    def to_dict(self) -> Dict[str, Any]:
        return {"version": SCHEMA_VERSION, "kind": self.kind, "component": _component_to_dict(self.model)}


@dataclass
class GlobalTraceProblem:
    model: CellularSheafModel

    kind = "global"

    @property
    def name(self) -> str:
        return self.model.name

    def to_dict(self) -> Dict[str, Any]:
        return {"version": SCHEMA_VERSION, "kind": self.kind, "global": _global_to_dict(self.model)}


@dataclass
class VerificationProblem:
    global_model: CellularSheafModel
    components: List[FixedComponentModel]
    name: str = ""

    kind = "verification"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": SCHEMA_VERSION,
            "kind": self.kind,
            "name": self.name,
            "global": _global_to_dict(self.global_model),
            "components": [_component_to_dict(m) for m in self.components],
        }


@dataclass
class CharacteristicCycleProblem:
    embedded: EmbeddedComplex
    function: ConstructibleFn
    test_functions: Dict[str, TestFunction] = field(default_factory=dict)
    name: str = ""

    kind = "cc"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": SCHEMA_VERSION,
            "kind": self.kind,
            "name": self.name,
            "complex": self.embedded.to_dict(),
            "function": self.function.to_dict(),
            "test_functions": {key: f.to_dict() for key, f in self.test_functions.items()},
        }


Problem = Union[LocalizationProblem, ContributionProblem, GlobalTraceProblem, VerificationProblem, CharacteristicCycleProblem]


# ---------------------------------------------------------------------------
# Small helpers
# ---------------------------------------------------------------------------

def _require(data: Mapping[str, Any], key: str, where: str) -> Any:
    if not isinstance(data, Mapping):
        raise ProblemFormatError(f"{where} must be an object", element=where)
    if key not in data:
        raise ProblemFormatError(f"{where} is missing '{key}'", element=where)
    return data[key]


def parse_cone(label: Union[str, List[int]]) -> Cone:
    """``"{0,1}"``, ``"{}"`` or a list of ray indices."""
    if isinstance(label, list):
        return frozenset(int(i) for i in label)
    text = str(label).strip()
    if not (text.startswith("{") and text.endswith("}")):
        raise ProblemFormatError(f"malformed cone label {label!r}", element=label)
    inner = text[1:-1].strip()
    try:
        return frozenset(int(part) for part in inner.split(",")) if inner else frozenset()
    except ValueError:
        raise ProblemFormatError(f"malformed cone label {label!r}", element=label)


def _degree_dims(data: Mapping[str, Any], where: str) -> Dict[int, int]:
    try:
        return {int(d): int(n) for d, n in data.items()}
    except (TypeError, ValueError, AttributeError):
        raise ProblemFormatError(f"stalk dimensions of {where} must map degrees to integers", element=where)


def parse_matrix(rows: Any, where: str = "map") -> RationalMatrix:
    if not isinstance(rows, list) or not rows:
        raise ProblemFormatError(f"{where} must be a non-empty list of rows", element=where)
    return RationalMatrix.from_rows(rows)


def _parse_block(rows: Any, shape: Tuple[int, int], where: str):
    if not isinstance(rows, list):
        raise ProblemFormatError(f"{where} must be a list of rows", element=where)
    if 0 in shape:
        return matrix(rows, shape=shape)
    return matrix(rows)


# ---------------------------------------------------------------------------
# Fans, sheaves, fibers
# ---------------------------------------------------------------------------

_FAN_GENERATORS = {"line": lambda k: line_fan(), "cross": lambda k: cross_fan(), "sector": sector_fan}


def parse_fan(data: Mapping[str, Any]) -> Fan:
    if isinstance(data, Mapping) and "generator" in data:
        name = data["generator"]
        if name not in _FAN_GENERATORS:
            raise ProblemFormatError(f"unknown fan generator {name!r}", element=name)
        return _FAN_GENERATORS[name](int(data.get("k", 3)))
    rays = _require(data, "rays", "fan")
    cones = _require(data, "cones", "fan")
    return build_fan(rays, cones, name=str(data.get("name", "")))


def parse_sheaf(data: Mapping[str, Any], fan: Fan) -> ConicSheaf:
    """Explicit stalks and generizations, a preset, or a constant sheaf on listed cones."""
    if not isinstance(data, Mapping):
        raise ProblemFormatError("sheaf must be an object", element="sheaf")
    degree = int(data.get("degree", 0))
    rank = int(data.get("rank", 1))
    if "preset" in data:
        preset = data["preset"]
        if preset == "constant":
            return ConicSheaf.constant(fan, degree, rank)
        if preset == "skyscraper":
            return ConicSheaf.skyscraper(fan, degree, rank)
        if preset == "zero":
            return ConicSheaf.zero(fan)
        raise ProblemFormatError(f"unknown sheaf preset {preset!r}", element=preset)
    if "support" in data:
        cones = [parse_cone(c) for c in data["support"]]
        return ConicSheaf.supported_on(fan, cones, degree, rank, name=str(data.get("name", "")))

    stalks = {}
    for label, dims in _require(data, "stalks", "sheaf").items():
        stalks[parse_cone(label)] = _degree_dims(dims, label)
    sheaf = ConicSheaf(fan, stalks, {}, str(data.get("name", "")))
    generization = {}
    for relation, maps in data.get("generization", {}).items():
        if "->" not in relation:
            raise ProblemFormatError(f"generization key {relation!r} must read '<cone>-><cone>'", element=relation)
        lower, upper = (parse_cone(part) for part in relation.split("->", 1))
        generization[(lower, upper)] = {
            int(d): _parse_block(rows, (sheaf.stalk_dim(upper, int(d)), sheaf.stalk_dim(lower, int(d))), relation)
            for d, rows in maps.items()
        }
    return ConicSheaf(fan, stalks, generization, sheaf.name).validate()


def parse_equivariance(data: Any, sheaf: ConicSheaf, A: RationalMatrix) -> Equivariant:
    analysis = cone_map_analysis(sheaf.fan, A)
    if data is None or data == "identity":
        return Equivariant.identity(sheaf, analysis)
    if isinstance(data, Mapping) and "scalar" in data:
        return Equivariant.scalar(sheaf, analysis, data["scalar"])
    if not isinstance(data, Mapping):
        raise ProblemFormatError("equivariance must be 'identity', {scalar} or per-cone maps", element="equivariance")
    eta = {}
    for label, maps in data.items():
        cone = parse_cone(label)
        if not sheaf.fan.has_cone(cone):
            raise ProblemFormatError(f"equivariance given on {label}, which is not a cone", element=label)
        image = analysis.image(cone)
        eta[cone] = {
            int(d): _parse_block(rows, (sheaf.stalk_dim(image, int(d)), sheaf.stalk_dim(cone, int(d))), label)
            for d, rows in maps.items()
        }
    return Equivariant(sheaf, analysis, eta).validate()


def parse_subspace(data: Any, ambient_dim: int, default_label: str) -> Subspace:
    if isinstance(data, Mapping):
        return Subspace.span(data.get("basis", []), ambient_dim, str(data.get("label", default_label)))
    if isinstance(data, list):
        return Subspace.span(data, ambient_dim, default_label)
    raise ProblemFormatError(f"{default_label} subbundle must be a list of vectors", element=default_label)


def _subspace_to_dict(S: Subspace) -> Dict[str, Any]:
    if not S.is_exact:
        raise ProblemFormatError("floating subbundles cannot be written to a problem file", element=S.label or None)
    return {"basis": S.to_dict().get("basis", []), "label": S.label}


def parse_fiber(data: Mapping[str, Any], where: str = "fiber") -> CellFiber:
    try:
        fan = parse_fan(_require(data, "fan", where))
        sheaf = parse_sheaf(_require(data, "sheaf", where), fan)
        A = parse_matrix(_require(data, "map", where), f"{where}.map")
        equivariant = parse_equivariance(data.get("equivariance", "identity"), sheaf, A)
    except LefschetzError as exc:
        if exc.element is None:
            exc.element = where
        raise
    expanding = parse_subspace(data["expanding"], A.dim, "expanding") if "expanding" in data else None
    shrinking = parse_subspace(data["shrinking"], A.dim, "shrinking") if "shrinking" in data else None
    return CellFiber(A, sheaf, equivariant, expanding, shrinking)


def _fiber_to_dict(fiber: CellFiber) -> Dict[str, Any]:
    sheaf = fiber.sheaf.to_dict()
    data: Dict[str, Any] = {
        "fan": fiber.sheaf.fan.to_dict(),
        "sheaf": {"name": sheaf["name"], "stalks": sheaf["stalks"], "generization": sheaf["generization"]},
        "map": fiber.normal_map.rows(),
        "equivariance": fiber.equivariant.to_dict()["eta"],
    }
    if fiber.expanding is not None:
        data["expanding"] = _subspace_to_dict(fiber.expanding)
    if fiber.shrinking is not None:
        data["shrinking"] = _subspace_to_dict(fiber.shrinking)
    return data


# ---------------------------------------------------------------------------
# Complexes, functions, models
# ---------------------------------------------------------------------------

def parse_complex(data: Mapping[str, Any]) -> CellComplex:
    name = str(data.get("name", "")) if isinstance(data, Mapping) else ""
    if isinstance(data, Mapping) and "simplices" in data:
        return CellComplex.from_simplices(data["simplices"], name=name)
    cells = _require(data, "cells", "complex")
    try:
        ids = [str(cell["id"]) for cell in cells]
        dims = {str(cell["id"]): int(cell["dim"]) for cell in cells}
    except (KeyError, TypeError, ValueError):
        raise ProblemFormatError("complex cells must be objects with 'id' and integer 'dim'", element=name or "complex")
    covers = [tuple(pair) for pair in data.get("covers", [])]
    if any(len(pair) != 2 for pair in covers):
        raise ProblemFormatError("cover relations must be [face, coface] pairs", element=name or "complex")
    return CellComplex(ids, dims, covers, bool(data.get("compact", True)), name)


def parse_embedded(data: Mapping[str, Any]) -> EmbeddedComplex:
    vertices = _require(data, "vertices", "complex")
    cells = _require(data, "cells", "complex")
    return EmbeddedComplex(vertices, cells, bool(data.get("compact", True)), str(data.get("name", "")))


def parse_function(data: Any, complex_: CellComplex) -> ConstructibleFn:
    if isinstance(data, Mapping) and "constant" in data:
        return ConstructibleFn.constant(complex_, data["constant"])
    if not isinstance(data, Mapping):
        raise ProblemFormatError("function must map cells to values", element="function")
    unknown = [c for c in data if c not in complex_.dims]
    if unknown:
        raise ProblemFormatError(f"function value on unknown cell {unknown[0]}", element=unknown[0])
    return ConstructibleFn(complex_, dict(data))


def parse_test_function(data: Mapping[str, Any], X: EmbeddedComplex, default_name: str) -> TestFunction:
    name = str(data.get("name", default_name)) if isinstance(data, Mapping) else default_name
    if isinstance(data, Mapping) and "linear" in data:
        return TestFunction.linear(X, data["linear"], name)
    if isinstance(data, Mapping) and "covectors" in data:
        covectors = {str(c): tuple(rational(v) for v in xi) for c, xi in data["covectors"].items()}
        return TestFunction(covectors, name)
    raise ProblemFormatError("test function needs 'linear' or 'covectors'", element=default_name)


def _parse_test_functions(data: Mapping[str, Any], X: EmbeddedComplex) -> Dict[str, TestFunction]:
    functions = {}
    if "test_function" in data:
        single = parse_test_function(data["test_function"], X, "f")
        functions[single.name] = single
    for key, spec in data.get("test_functions", {}).items():
        functions[key] = parse_test_function(spec, X, key)
    return functions


def parse_component(data: Mapping[str, Any]) -> FixedComponentModel:
    name = str(_require(data, "name", "component"))
    component = parse_complex(_require(data, "complex", name))
    shared = {key: parse_fiber(spec, key) for key, spec in data.get("fiber_types", {}).items()}
    fibers = {}
    for cell, spec in _require(data, "fibers", name).items():
        if isinstance(spec, str):
            if spec not in shared:
                raise ProblemFormatError(f"cell {cell} refers to unknown fiber type {spec}", element=cell)
            fibers[cell] = shared[spec]
        else:
            fibers[cell] = parse_fiber(spec, cell)
    embedding = None
    if "embedding" in data:
        spec = data["embedding"]
        embedded = parse_embedded(_require(spec, "complex", f"{name}.embedding"))
        parent = {str(c): str(p) for c, p in _require(spec, "parent", f"{name}.embedding").items()}
        embedding = ComponentEmbedding(embedded, parent, _parse_test_functions(spec, embedded))
    return FixedComponentModel(name, component, fibers, embedding).validate()


def _component_to_dict(model: FixedComponentModel) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "name": model.name,
        "complex": model.component.to_dict(),
        "fibers": {cell: _fiber_to_dict(model.fibers[cell]) for cell in model.component.cells},
    }
    if model.embedding is not None:
        data["embedding"] = {
            "complex": model.embedding.embedded.to_dict(),
            "parent": dict(model.embedding.parent),
            "test_functions": {key: f.to_dict() for key, f in model.embedding.test_functions.items()},
        }
    return data


def parse_global(data: Mapping[str, Any]) -> CellularSheafModel:
    complex_ = parse_complex(_require(data, "complex", "global"))
    stalks = {str(c): _degree_dims(dims, str(c)) for c, dims in _require(data, "stalks", "global").items()}
    cell_map = data.get("map", "identity")
    name = str(data.get("name", complex_.name))
    if cell_map in (None, "identity"):
        cell_map = None
    elif not isinstance(cell_map, Mapping):
        raise ProblemFormatError("global map must be 'identity' or a cell -> cell object", element="global.map")
    if "fixed" not in data:
        if cell_map is not None:
            raise ProblemFormatError("a non-identity global map needs trace data under 'fixed'", element="global.fixed")
        return CellularSheafModel.identity(complex_, stalks, name=name)
    fixed = {}
    for cell, spec in data["fixed"].items():
        fixed[str(cell)] = FixedCellData(int(spec.get("sign", 1)), dict(spec.get("traces", {})))
    return CellularSheafModel(complex_, stalks, fixed, dict(cell_map) if cell_map else None, name)


def _global_to_dict(model: CellularSheafModel) -> Dict[str, Any]:
    data = model.to_dict()
    data["map"] = "identity" if model.cell_map is None else dict(model.cell_map)
    return data


# ---------------------------------------------------------------------------
# Problem files
# ---------------------------------------------------------------------------

def _from_generator(kind: str, spec: Mapping[str, Any], k: Optional[int]) -> Problem:
    from fixtures import GENERATORS

    name = _require(spec, "name", "generator")
    if name not in GENERATORS:
        raise ProblemFormatError(f"unknown generator {name!r}", element=name)
    k_value = k if k is not None else spec.get("k")
    built = GENERATORS[name](None if k_value is None else int(k_value))
    logger.debug(f"Generator {name} built with k={k_value}")
    if kind == "contribution" and isinstance(built, FixedComponentModel):
        return ContributionProblem(built)
    if kind == "global" and isinstance(built, CellularSheafModel):
        return GlobalTraceProblem(built)
    if kind == "verification" and isinstance(built, tuple):
        global_model, components = built
        return VerificationProblem(global_model, list(components), name)
    raise ProblemFormatError(f"generator {name} does not produce a {kind} problem", element=name)


def parse_problem(data: Mapping[str, Any], k: Optional[int] = None) -> Problem:
    if not isinstance(data, Mapping):
        raise ProblemFormatError("problem file must hold a JSON object")
    version = data.get("version")
    if version != SCHEMA_VERSION:
        raise ProblemFormatError(f"unsupported problem version {version!r}, expected {SCHEMA_VERSION}", element="version")
    kind = data.get("kind")
    if kind not in KINDS:
        raise ProblemFormatError(f"unknown problem kind {kind!r}", element="kind")
    if "generator" in data:
        return _from_generator(kind, data["generator"], k)
    if k is not None:
        logger.warning("--k only applies to generator fixtures; ignoring it")

    if kind == "localization":
        fiber = parse_fiber(data, "problem")
        fiber.validate()
        return LocalizationProblem(fiber.sheaf, fiber.equivariant, fiber.expanding, fiber.shrinking, str(data.get("name", "")))
    if kind == "contribution":
        return ContributionProblem(parse_component(_require(data, "component", "problem")))
    if kind == "global":
        return GlobalTraceProblem(parse_global(_require(data, "global", "problem")))
    if kind == "verification":
        components = [parse_component(c) for c in _require(data, "components", "problem")]
        return VerificationProblem(parse_global(_require(data, "global", "problem")), components, str(data.get("name", "")))
    embedded = parse_embedded(_require(data, "complex", "problem"))
    function = parse_function(_require(data, "function", "problem"), embedded.complex)
    return CharacteristicCycleProblem(embedded, function, _parse_test_functions(data, embedded), str(data.get("name", "")))


def load_problem(path: Union[str, Path], k: Optional[int] = None) -> Problem:
    """Read and validate a problem file."""
    path = Path(path)
    if not path.exists():
        raise ProblemFormatError(f"problem file {path} does not exist", element=str(path))
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ProblemFormatError(f"problem file is not valid JSON: {e}", element=str(path))
    problem = parse_problem(data, k=k)
    logger.info(f"Loaded {problem.kind} problem from {path}")
    return problem


def dump_problem(problem: Problem) -> Dict[str, Any]:
    return problem.to_dict()


def save_problem(problem: Problem, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(dump_problem(problem), f, indent=2)
    logger.debug(f"Saved {problem.kind} problem to {path}")
    return path

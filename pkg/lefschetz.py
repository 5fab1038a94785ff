"""Local trace functions, local contributions and the fixed point formula.

A fixed component M is modelled cell by cell: along each cell of M the normal
map and the conic sheaf data on the normal fiber are constant. The local
trace function takes on each cell the common value of the two hyperbolic
localizations of that fiber; its Euler integral over M is the local
contribution of M.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, TypeVar, Union

import pandas as pd
import sympy

from charcycle import EmbeddedComplex, TestFunction, microlocal_index
from conic import ConicSheaf, Equivariant, LocalizationResult, localization_trace
from errors import DegenerateNormalMap, LefschetzError, NotCompact, ProblemFormatError
from euler import CellComplex, CellularSheafModel, ConstructibleFn, euler_integral, hopf_global_trace
from exact import Scalar, ScalarLike, format_scalar, rational, sum_scalars
from fan import cone_map_analysis
from spectral import RationalMatrix, Subspace, check_nondegenerate

logger = logging.getLogger(__name__)

T = TypeVar("T")


def _at_cell(cell: str, action: Callable[[], T]) -> T:
    """Run ``action`` and tag any domain error with the cell it happened on."""
    try:
        return action()
    except LefschetzError as exc:
        if exc.element is None:
            exc.element = cell
        elif exc.element != cell and not str(exc.element).startswith(f"{cell}:"):
            exc.element = f"{cell}:{exc.element}"
        raise


@dataclass
class CellFiber:
    """Normal map and conic sheaf data along one cell of a fixed component."""

    normal_map: RationalMatrix
    sheaf: ConicSheaf
    equivariant: Equivariant
    expanding: Optional[Subspace] = None
    shrinking: Optional[Subspace] = None

    @property
    def ambient_dim(self) -> int:
        return self.normal_map.dim

    def validate(self) -> "CellFiber":
        if self.equivariant.matrix != self.normal_map:
            raise ProblemFormatError("equivariant structure is built over a different normal map")
        if not check_nondegenerate(self.normal_map):
            raise DegenerateNormalMap(f"1 is an eigenvalue of {self.normal_map}")
        self.sheaf.validate()
        self.equivariant.validate()
        return self

    def localize(self, element: Optional[str] = None) -> LocalizationResult:
        return localization_trace(self.sheaf, self.equivariant, self.expanding, self.shrinking, element=element)


@dataclass
class ComponentEmbedding:
    """An embedded refinement of a component, used to evaluate microlocal indices."""

    embedded: EmbeddedComplex
    parent: Dict[str, str]
    test_functions: Dict[str, TestFunction] = field(default_factory=dict)


@dataclass
class FixedComponentModel:
    name: str
    component: CellComplex
    fibers: Dict[str, CellFiber]
    embedding: Optional[ComponentEmbedding] = None

    def validate(self) -> "FixedComponentModel":
        if not self.component.compact:
            raise NotCompact(f"component {self.name} is not compact", element=self.name)
        missing = [c for c in self.component.cells if c not in self.fibers]
        if missing:
            raise ProblemFormatError(f"cell {missing[0]} of {self.name} has no fiber data", element=missing[0])
        dims = {self.fibers[c].ambient_dim for c in self.component.cells}
        if len(dims) > 1:
            raise ProblemFormatError(f"normal fiber dimension varies along {self.name}: {sorted(dims)}", element=self.name)
        for cell in self.component.cells:
            _at_cell(cell, self.fibers[cell].validate)
        if self.embedding is not None:
            unknown = sorted(set(self.embedding.parent.values()) - set(self.component.cells))
            if unknown:
                raise ProblemFormatError(f"embedding maps onto unknown cell {unknown[0]}", element=unknown[0])
            for cell in self.embedding.embedded.cells:
                if cell not in self.embedding.parent:
                    raise ProblemFormatError(f"embedded cell {cell} has no parent", element=cell)
        return self


@dataclass
class ContributionReport:
    global_value: Scalar
    local_values: Dict[str, Scalar]
    residual: Scalar
    passed: bool

    def to_dict(self) -> Dict[str, object]:
        return {
            "global": format_scalar(self.global_value),
            "locals": {name: format_scalar(v) for name, v in self.local_values.items()},
            "residual": format_scalar(self.residual),
            "verdict": "PASS" if self.passed else "FAIL",
        }

    def to_frame(self) -> pd.DataFrame:
        rows = [{"component": name, "contribution": format_scalar(v)} for name, v in self.local_values.items()]
        rows.append({"component": "sum", "contribution": format_scalar(sum_scalars(self.local_values.values()))})
        rows.append({"component": "global", "contribution": format_scalar(self.global_value)})
        return pd.DataFrame(rows)

    def summary(self) -> str:
        locals_text = ", ".join(format_scalar(v) for v in self.local_values.values())
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"global = {format_scalar(self.global_value)}, locals = [{locals_text}], "
            f"residual = {format_scalar(self.residual)}, {verdict}"
        )


def localize_cells(model: FixedComponentModel) -> Dict[str, LocalizationResult]:
    model.validate()
    results = {}
    for cell in model.component.cells:
        results[cell] = _at_cell(cell, lambda: model.fibers[cell].localize(element=cell))
        logger.debug(f"{model.name}: theta({cell}) = {format_scalar(results[cell].value)}")
    return results


def local_trace_function(model: FixedComponentModel) -> ConstructibleFn:
    """Value of both localizations on each cell of the component."""
    results = localize_cells(model)
    return ConstructibleFn(model.component, {cell: result.value for cell, result in results.items()})


def local_contribution(model: FixedComponentModel) -> Scalar:
    value = euler_integral(local_trace_function(model))
    logger.info(f"Local contribution of {model.name}: {format_scalar(value)}")
    return value


def verify_fixed_point_formula(
    global_model: CellularSheafModel, components: Sequence[FixedComponentModel]
) -> ContributionReport:
    """Compare the global trace with the sum of local contributions."""
    global_value = hopf_global_trace(global_model)
    local_values: Dict[str, Scalar] = {}
    for model in components:
        if model.name in local_values:
            raise ProblemFormatError(f"duplicate component name {model.name}", element=model.name)
        local_values[model.name] = local_contribution(model)
    residual = sympy.expand(global_value - sum_scalars(local_values.values()))
    report = ContributionReport(global_value, local_values, residual, residual == 0)
    logger.info(f"Fixed point formula: {report.summary()}")
    return report


def pipeline_index(model: FixedComponentModel, test_function: Union[str, TestFunction, None] = None) -> Scalar:
    """Microlocal index of the local trace function, pulled back to the embedded refinement."""
    if model.embedding is None:
        raise ProblemFormatError(f"component {model.name} has no embedded refinement", element=model.name)
    embedding = model.embedding
    if test_function is None or isinstance(test_function, str):
        if not embedding.test_functions:
            raise ProblemFormatError(f"component {model.name} ships no test functions", element=model.name)
        key = test_function or next(iter(embedding.test_functions))
        if key not in embedding.test_functions:
            raise ProblemFormatError(f"unknown test function {key}", element=key)
        test_function = embedding.test_functions[key]
    theta = local_trace_function(model)
    pulled = theta.pullback(embedding.embedded.complex, embedding.parent)
    return microlocal_index(embedding.embedded, pulled, test_function)


def scaled_model(model: FixedComponentModel, t: ScalarLike) -> FixedComponentModel:
    """The same model with every normal map A replaced by tA (t > 0)."""
    factor = rational(t)
    if factor <= 0:
        raise ProblemFormatError(f"scaling factor must be positive, got {factor}")
    fibers = {}
    for cell, fiber in model.fibers.items():
        scaled = fiber.normal_map.scaled(factor)
        analysis = _at_cell(cell, lambda: cone_map_analysis(fiber.sheaf.fan, scaled))
        if analysis.ray_permutation != fiber.equivariant.analysis.ray_permutation:
            raise ProblemFormatError(f"scaling changed the ray permutation on {cell}", element=cell)
        equivariant = Equivariant(fiber.sheaf, analysis, dict(fiber.equivariant.eta))
        fibers[cell] = CellFiber(scaled, fiber.sheaf, equivariant, fiber.expanding, fiber.shrinking)
    return FixedComponentModel(f"{model.name}*{factor}", model.component, fibers, model.embedding)


def direct_sum_models(first: FixedComponentModel, second: FixedComponentModel) -> FixedComponentModel:
    """Fiberwise direct sum of the conic data of two models over the same component and maps."""
    if first.component.cells != second.component.cells:
        raise ProblemFormatError("direct sum of models over different components")
    fibers = {}
    for cell in first.component.cells:
        a, b = first.fibers[cell], second.fibers[cell]
        if a.normal_map != b.normal_map:
            raise ProblemFormatError(f"normal maps differ on {cell}", element=cell)
        fibers[cell] = CellFiber(a.normal_map, a.sheaf.direct_sum(b.sheaf), a.equivariant.direct_sum(b.equivariant))
    return FixedComponentModel(f"{first.name}+{second.name}", first.component, fibers, first.embedding)


def theta_table(model: FixedComponentModel) -> pd.DataFrame:
    """Per-cell table of both localization values and the chosen subbundles."""
    rows = []
    for cell, result in localize_cells(model).items():
        rows.append({
            "cell": cell,
            "dim": model.component.dim(cell),
            "theta": format_scalar(result.value),
            "expanding": format_scalar(result.expanding_value),
            "shrinking": format_scalar(result.shrinking_value),
            "dim E": result.expanding.dim,
            "dim S": result.shrinking.dim,
            "t": str(result.perturbation),
        })
    return pd.DataFrame(rows)

"""Cell complexes, constructible functions and Euler integration.

Cells are relatively open; the face relation is generated by codimension-one
cover pairs (face, coface). Euler integration weights the indicator of an
open cell by (-1)^dim, i.e. the compactly supported Euler characteristic.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx
import pandas as pd
import sympy

from errors import InvalidComplex, MissingFixedCellData, NonIdentityMap, NotCompact, ProblemFormatError
from exact import ZERO, Scalar, ScalarLike, format_scalar, gaussian, sum_scalars

logger = logging.getLogger(__name__)


@dataclass
class CellComplex:
    cells: List[str]
    dims: Dict[str, int]
    covers: List[Tuple[str, str]] = field(default_factory=list)
    compact: bool = True
    name: str = ""

    def __post_init__(self):
        self.cells = [str(c) for c in self.cells]
        self.covers = sorted({(str(a), str(b)) for a, b in self.covers})
        if len(set(self.cells)) != len(self.cells):
            raise InvalidComplex("duplicate cell names", element=self.name or None)
        known = set(self.cells)
        for cell in self.cells:
            if cell not in self.dims:
                raise InvalidComplex(f"cell {cell} has no dimension", element=cell)
            if int(self.dims[cell]) < 0:
                raise InvalidComplex(f"cell {cell} has negative dimension", element=cell)
        self.dims = {c: int(self.dims[c]) for c in self.cells}
        for face, coface in self.covers:
            if face not in known or coface not in known:
                missing = face if face not in known else coface
                raise InvalidComplex(f"cover relation mentions unknown cell {missing}", element=missing)
            if self.dims[coface] != self.dims[face] + 1:
                raise InvalidComplex(
                    f"cover {face} < {coface} does not raise dimension by one", element=f"{face}<{coface}"
                )
        self._poset = nx.DiGraph()
        self._poset.add_nodes_from(self.cells)
        self._poset.add_edges_from(self.covers)

    # structure -----------------------------------------------------------

    @property
    def dimension(self) -> int:
        return max(self.dims.values(), default=-1)

    def dim(self, cell: str) -> int:
        return self.dims[cell]

    def cells_of_dim(self, d: int) -> List[str]:
        return [c for c in self.cells if self.dims[c] == d]

    def faces(self, cell: str) -> Set[str]:
        """Cells in the boundary of ``cell``."""
        return set(nx.ancestors(self._poset, cell))

    def cofaces(self, cell: str) -> Set[str]:
        return set(nx.descendants(self._poset, cell))

    def closure(self, cell: str) -> Set[str]:
        return self.faces(cell) | {cell}

    def is_face(self, face: str, cell: str) -> bool:
        return face != cell and nx.has_path(self._poset, face, cell)

    def is_closed(self, cells: Iterable[str]) -> bool:
        chosen = set(cells)
        return all(self.faces(c) <= chosen for c in chosen)

    def regularity_defect(self) -> Optional[str]:
        """First violation of the face-poset conditions of a regular CW complex, or None.

        Checked: positive-dimensional cells have a boundary, closed edges have two
        endpoints, and every length-two interval of the face poset has exactly two
        middle cells.
        """
        for cell in self.cells:
            below = list(self._poset.predecessors(cell))
            d = self.dims[cell]
            if d >= 1 and self.compact and not below:
                return f"cell {cell} has an empty boundary"
            if d == 1 and self.compact and len(below) != 2:
                return f"edge {cell} has {len(below)} endpoint(s)"
            if d < 2:
                continue
            middle_counts: Dict[str, int] = {}
            for face in below:
                for lower in self._poset.predecessors(face):
                    middle_counts[lower] = middle_counts.get(lower, 0) + 1
            for lower, count in sorted(middle_counts.items()):
                if count != 2:
                    return f"interval {lower} < {cell} has {count} middle cell(s)"
        return None

    def is_regular(self) -> bool:
        return self.regularity_defect() is None

    def euler_characteristic(self) -> int:
        return sum((-1) ** d for d in self.dims.values())

    def subcomplex(self, cells: Iterable[str], name: str = "") -> "CellComplex":
        chosen = [c for c in self.cells if c in set(cells)]
        covers = [(a, b) for a, b in self.covers if a in chosen and b in chosen]
        return CellComplex(chosen, {c: self.dims[c] for c in chosen}, covers, self.is_closed(chosen), name)

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "cells": [{"id": c, "dim": self.dims[c]} for c in self.cells],
            "covers": [list(pair) for pair in self.covers],
            "compact": self.compact,
        }

    # builders ------------------------------------------------------------

    @classmethod
    def from_simplices(cls, simplices: Iterable[Sequence[object]], name: str = "") -> "CellComplex":
        """Closed simplicial complex generated by the given vertex tuples."""
        faces: Set[Tuple[str, ...]] = set()
        for simplex in simplices:
            vertices = tuple(sorted({str(v) for v in simplex}))
            if not vertices:
                raise InvalidComplex("empty simplex")
            for size in range(1, len(vertices) + 1):
                faces.update(itertools.combinations(vertices, size))
        ordered = sorted(faces, key=lambda f: (len(f), f))
        label = {f: "-".join(f) for f in ordered}
        covers = [
            (label[f[:i] + f[i + 1:]], label[f])
            for f in ordered if len(f) > 1
            for i in range(len(f))
        ]
        return cls([label[f] for f in ordered], {label[f]: len(f) - 1 for f in ordered}, covers, True, name)

    def product(self, other: "CellComplex", name: str = "") -> "CellComplex":
        def pair(a: str, b: str) -> str:
            return f"{a}*{b}"

        cells = [pair(a, b) for a in self.cells for b in other.cells]
        dims = {pair(a, b): self.dims[a] + other.dims[b] for a in self.cells for b in other.cells}
        covers = [(pair(a, b), pair(c, b)) for a, c in self.covers for b in other.cells]
        covers += [(pair(a, b), pair(a, d)) for a in self.cells for b, d in other.covers]
        return CellComplex(cells, dims, covers, self.compact and other.compact, name or f"{self.name}*{other.name}")

    def barycentric_subdivision(self) -> Tuple["CellComplex", Dict[str, str]]:
        """Order complex of the face poset, with the map chain -> its top cell.

        Euler integrals are preserved for regular complexes (closed cells are balls
        whose boundary is a union of cells), so other complexes are refused.
        """
        defect = self.regularity_defect()
        if defect is not None:
            raise InvalidComplex(f"cannot subdivide {self.name or 'complex'}: {defect}", element=self.name or None)
        closure_graph = nx.transitive_closure_dag(self._poset)
        chains: List[Tuple[str, ...]] = []

        def extend(chain: Tuple[str, ...]):
            chains.append(chain)
            for nxt in sorted(closure_graph.successors(chain[-1])):
                extend(chain + (nxt,))

        for cell in self.cells:
            extend((cell,))
        label = {chain: "<".join(chain) for chain in chains}
        covers = [
            (label[chain[:i] + chain[i + 1:]], label[chain])
            for chain in chains if len(chain) > 1
            for i in range(len(chain))
        ]
        refined = CellComplex(
            [label[c] for c in chains],
            {label[c]: len(c) - 1 for c in chains},
            covers,
            self.compact,
            f"sd({self.name})",
        )
        parent = {label[c]: c[-1] for c in chains}
        logger.debug(f"Subdivided {self.name or 'complex'}: {len(self.cells)} -> {len(chains)} cells")
        return refined, parent


@dataclass
class ConstructibleFn:
    complex: CellComplex
    values: Dict[str, Scalar] = field(default_factory=dict)

    def __post_init__(self):
        known = set(self.complex.cells)
        for cell in self.values:
            if cell not in known:
                raise ProblemFormatError(f"value given on unknown cell {cell}", element=cell)
        self.values = {c: gaussian(self.values.get(c, 0)) for c in self.complex.cells}

    def __call__(self, cell: str) -> Scalar:
        return self.values[cell]

    @classmethod
    def constant(cls, complex_: CellComplex, value: ScalarLike = 1) -> "ConstructibleFn":
        return cls(complex_, {c: value for c in complex_.cells})

    @classmethod
    def indicator(cls, complex_: CellComplex, cells: Iterable[str]) -> "ConstructibleFn":
        return cls(complex_, {c: 1 for c in cells})

    @classmethod
    def zero(cls, complex_: CellComplex) -> "ConstructibleFn":
        return cls(complex_, {})

    def _check_same(self, other: "ConstructibleFn") -> None:
        if other.complex is not self.complex and other.complex.cells != self.complex.cells:
            raise ProblemFormatError("constructible functions live on different complexes")

    def __add__(self, other: "ConstructibleFn") -> "ConstructibleFn":
        self._check_same(other)
        return ConstructibleFn(self.complex, {c: sympy.expand(self(c) + other(c)) for c in self.complex.cells})

    def __sub__(self, other: "ConstructibleFn") -> "ConstructibleFn":
        return self + other.scale(-1)

    def __neg__(self) -> "ConstructibleFn":
        return self.scale(-1)

    def scale(self, factor: ScalarLike) -> "ConstructibleFn":
        a = gaussian(factor)
        return ConstructibleFn(self.complex, {c: sympy.expand(a * v) for c, v in self.values.items()})

    def __rmul__(self, factor: ScalarLike) -> "ConstructibleFn":
        return self.scale(factor)

    def pullback(self, finer: CellComplex, parent: Mapping[str, str]) -> "ConstructibleFn":
        """Function on ``finer`` taking on each cell the value of its parent cell."""
        values = {}
        for cell in finer.cells:
            if cell not in parent:
                raise ProblemFormatError(f"cell {cell} has no parent cell", element=cell)
            values[cell] = self(parent[cell])
        return ConstructibleFn(finer, values)

    def support(self) -> List[str]:
        return [c for c in self.complex.cells if self.values[c] != 0]

    def to_dict(self) -> Dict[str, str]:
        return {c: format_scalar(v) for c, v in self.values.items()}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{"cell": c, "dim": self.complex.dim(c), "value": format_scalar(self(c))} for c in self.complex.cells]
        )


def euler_integral(phi: ConstructibleFn) -> Scalar:
    """Sum over cells of phi(cell) * (-1)^dim."""
    if not phi.complex.compact:
        raise NotCompact(f"complex {phi.complex.name or '<anonymous>'} is not compact", element=phi.complex.name or None)
    return sum_scalars((-1) ** phi.complex.dim(c) * phi(c) for c in phi.complex.cells)


# ---------------------------------------------------------------------------
# Cellular sheaf models
# ---------------------------------------------------------------------------

@dataclass
class FixedCellData:
    sign: int = 1
    traces: Dict[int, Scalar] = field(default_factory=dict)

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ProblemFormatError(f"orientation sign must be +1 or -1, got {self.sign}")
        self.traces = {int(d): gaussian(v) for d, v in self.traces.items()}

    def alternating_trace(self) -> Scalar:
        return sum_scalars(v if d % 2 == 0 else -v for d, v in self.traces.items())

    def to_dict(self) -> Dict[str, object]:
        return {"sign": self.sign, "traces": {str(d): format_scalar(v) for d, v in sorted(self.traces.items())}}


@dataclass
class CellularSheafModel:
    """Stalk dimensions on a complex plus the trace data of a cellular self-map.

    ``cell_map`` sends each cell to the cell it is mapped onto (None means the
    identity). ``fixed`` holds orientation sign and per-degree endomorphism
    traces for cells mapped isomorphically onto themselves; cells collapsed or
    moved contribute nothing.
    """

    complex: CellComplex
    stalks: Dict[str, Dict[int, int]]
    fixed: Dict[str, FixedCellData] = field(default_factory=dict)
    cell_map: Optional[Dict[str, str]] = None
    name: str = ""

    def __post_init__(self):
        known = set(self.complex.cells)
        for cell in list(self.stalks) + list(self.fixed):
            if cell not in known:
                raise ProblemFormatError(f"sheaf data on unknown cell {cell}", element=cell)
        self.stalks = {c: {int(d): int(n) for d, n in dims.items() if int(n)} for c, dims in self.stalks.items()}
        if self.cell_map is not None:
            for source, target in self.cell_map.items():
                if source not in known or target not in known:
                    raise ProblemFormatError(f"cell map {source} -> {target} mentions an unknown cell", element=source)

    @property
    def is_identity(self) -> bool:
        return self.cell_map is None or all(self.cell_map.get(c, c) == c for c in self.complex.cells)

    def fixed_cells(self) -> List[str]:
        if self.cell_map is None:
            return list(self.complex.cells)
        return [c for c in self.complex.cells if self.cell_map.get(c) == c]

    def has_stalk(self, cell: str) -> bool:
        return bool(self.stalks.get(cell))

    def data_for(self, cell: str) -> Optional[FixedCellData]:
        if cell in self.fixed:
            return self.fixed[cell]
        if self.has_stalk(cell):
            raise MissingFixedCellData(f"fixed cell {cell} has a stalk but no trace data", element=cell)
        return None

    @classmethod
    def identity(
        cls,
        complex_: CellComplex,
        stalks: Mapping[str, Mapping[int, int]],
        traces: Optional[Mapping[str, Mapping[int, ScalarLike]]] = None,
        name: str = "",
    ) -> "CellularSheafModel":
        """Identity map; traces default to the stalk dimensions (identity on stalks)."""
        fixed = {}
        for cell, dims in stalks.items():
            given = (traces or {}).get(cell)
            fixed[cell] = FixedCellData(1, dict(given) if given is not None else dict(dims))
        return cls(complex_, {c: dict(d) for c, d in stalks.items()}, fixed, None, name)

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "complex": self.complex.to_dict(),
            "stalks": {c: {str(d): n for d, n in sorted(dims.items())} for c, dims in self.stalks.items()},
            "map": self.cell_map,
            "fixed": {c: data.to_dict() for c, data in self.fixed.items()},
        }


def pointwise_trace_function(model: CellularSheafModel) -> ConstructibleFn:
    """Alternating stalk trace at each cell, for the identity map."""
    if not model.is_identity:
        moved = next(c for c in model.complex.cells if model.cell_map.get(c, c) != c)
        raise NonIdentityMap(f"cell {moved} is not fixed; pointwise traces need the identity map", element=moved)
    values = {}
    for cell in model.complex.cells:
        data = model.data_for(cell)
        values[cell] = ZERO if data is None else data.alternating_trace()
    return ConstructibleFn(model.complex, values)


def hopf_global_trace(model: CellularSheafModel) -> Scalar:
    """Sum over fixed cells of (-1)^dim * sign * alternating trace."""
    if not model.complex.compact:
        raise NotCompact(f"global complex {model.complex.name} is not compact", element=model.complex.name or None)
    terms = []
    for cell in model.fixed_cells():
        data = model.data_for(cell)
        if data is None:
            continue
        terms.append((-1) ** model.complex.dim(cell) * data.sign * data.alternating_trace())
    total = sum_scalars(terms)
    logger.debug(f"Hopf trace of {model.name or 'model'}: {format_scalar(total)}")
    return total

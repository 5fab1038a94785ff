"""Programmatic builders for the shipped examples.

The ``example_5_1`` builders model the map [x:y:z] -> [x:2y:z] (and its
inverse) on the real projective plane with the constant sheaf on the three
coordinate lines. The ``example_5_2`` builders model the family of components
M1 with a k-sector normal fan at one point and a rotation on the rest of the
circle.
"""

from __future__ import annotations

import logging
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from charcycle import EmbeddedComplex, TestFunction
from conic import ConicSheaf, Equivariant
from errors import ProblemFormatError
from euler import CellComplex, CellularSheafModel
from fan import ORIGIN, Fan, cone_map_analysis, cross_fan, line_fan, sector_fan
from lefschetz import CellFiber, ComponentEmbedding, FixedComponentModel
from spectral import RationalMatrix

logger = logging.getLogger(__name__)


def fiber(sheaf: ConicSheaf, A: RationalMatrix, scalar=1) -> CellFiber:
    """Fiber whose structure maps are ``scalar`` times the identity."""
    analysis = cone_map_analysis(sheaf.fan, A)
    return CellFiber(A, sheaf, Equivariant.scalar(sheaf, analysis, scalar))


def coordinate_axes_sheaf(fan: Optional[Fan] = None) -> ConicSheaf:
    """Constant sheaf on the union of the two coordinate axes of the plane."""
    fan = fan or cross_fan()
    support = [ORIGIN] + [frozenset({i}) for i in range(len(fan.rays))]
    return ConicSheaf.supported_on(fan, support, name="axes")


def ray_complement_sheaf(fan: Fan, removed_rays: Iterable[int]) -> ConicSheaf:
    """Constant sheaf on the plane minus the origin and the given rays."""
    removed = {ORIGIN} | {frozenset({i}) for i in removed_rays}
    support = [c for c in fan.cones if c not in removed]
    return ConicSheaf.supported_on(fan, support, name="ray-complement")


# ---------------------------------------------------------------------------
# Coordinate lines of the projective plane
# ---------------------------------------------------------------------------

_RP2_ARCS = {
    "x0_pos": ("Y", "Zv"), "x0_neg": ("Y", "Zv"),
    "y0_pos": ("X", "Zv"), "y0_neg": ("X", "Zv"),
    "z0_pos": ("X", "Y"), "z0_neg": ("X", "Y"),
}

_RP2_TRIANGLES = {
    "T_ppp": ("x0_pos", "y0_pos", "z0_pos"),
    "T_ppm": ("x0_neg", "y0_neg", "z0_pos"),
    "T_pmp": ("x0_neg", "y0_pos", "z0_neg"),
    "T_mpp": ("x0_pos", "y0_neg", "z0_neg"),
}


def projective_plane() -> CellComplex:
    """Cellular real projective plane cut by the three coordinate lines."""
    cells = ["X", "Y", "Zv"] + list(_RP2_ARCS) + list(_RP2_TRIANGLES)
    dims = {c: 0 for c in ("X", "Y", "Zv")}
    dims.update({a: 1 for a in _RP2_ARCS})
    dims.update({t: 2 for t in _RP2_TRIANGLES})
    covers = [(v, arc) for arc, ends in _RP2_ARCS.items() for v in ends]
    covers += [(arc, tri) for tri, arcs in _RP2_TRIANGLES.items() for arc in arcs]
    return CellComplex(cells, dims, covers, True, "RP2")


def example_5_1_global() -> CellularSheafModel:
    """Constant sheaf on {xyz = 0} with the identity action on stalks."""
    plane = projective_plane()
    stalks = {c: {0: 1} for c in ["X", "Y", "Zv"] + list(_RP2_ARCS)}
    return CellularSheafModel.identity(plane, stalks, name="C_Z on RP2")


def _projective_line_embedding() -> ComponentEmbedding:
    embedded = EmbeddedComplex(
        vertices={"v100": (0, 0), "p1": (1, 0), "v001": (1, 1), "p2": (0, 1)},
        cells={
            "v100": ("v100",), "p1": ("p1",), "v001": ("v001",), "p2": ("p2",),
            "e1": ("v100", "p1"), "e2": ("p1", "v001"), "e3": ("v001", "p2"), "e4": ("p2", "v100"),
        },
        name="square",
    )
    parent = {
        "v100": "X", "v001": "Zv", "p1": "y0_pos", "p2": "y0_neg",
        "e1": "y0_pos", "e2": "y0_pos", "e3": "y0_neg", "e4": "y0_neg",
    }
    tests = {
        "x+2y": TestFunction.linear(embedded, (1, 2), "x+2y"),
        "2x+y": TestFunction.linear(embedded, (2, 1), "2x+y"),
        "-x+3y": TestFunction.linear(embedded, (-1, 3), "-x+3y"),
    }
    return ComponentEmbedding(embedded, parent, tests)


def _point_embedding(cell: str) -> ComponentEmbedding:
    embedded = EmbeddedComplex(vertices={cell: (0,)}, cells={cell: (cell,)}, name=cell)
    return ComponentEmbedding(embedded, {cell: cell}, {"x": TestFunction.linear(embedded, (1,), "x")})


def example_5_1_components(which: str = "phi") -> List[FixedComponentModel]:
    """Fixed components {y = 0} and [0:1:0] of the map ``phi`` (y -> 2y) or its inverse ``psi``."""
    if which not in ("phi", "psi"):
        raise ProblemFormatError(f"the projective plane fixture has maps 'phi' and 'psi', not {which!r}")
    normal_scale, point_scale = (2, "1/2") if which == "phi" else ("1/2", 2)

    line = line_fan()
    A_line = RationalMatrix.diagonal(normal_scale)
    vertex_fiber = fiber(ConicSheaf.constant(line), A_line)
    arc_fiber = fiber(ConicSheaf.skyscraper(line), A_line)
    projective_line = CellComplex(
        ["X", "Zv", "y0_pos", "y0_neg"],
        {"X": 0, "Zv": 0, "y0_pos": 1, "y0_neg": 1},
        [("X", "y0_pos"), ("Zv", "y0_pos"), ("X", "y0_neg"), ("Zv", "y0_neg")],
        True,
        "y=0",
    )
    line_model = FixedComponentModel(
        "y=0",
        projective_line,
        {"X": vertex_fiber, "Zv": vertex_fiber, "y0_pos": arc_fiber, "y0_neg": arc_fiber},
        _projective_line_embedding(),
    )

    point = CellComplex(["Y"], {"Y": 0}, [], True, "[0:1:0]")
    point_fiber = fiber(coordinate_axes_sheaf(), RationalMatrix.diagonal(point_scale, point_scale))
    point_model = FixedComponentModel("[0:1:0]", point, {"Y": point_fiber}, _point_embedding("Y"))
    return [line_model, point_model]


def example_5_1(which: str = "phi") -> Tuple[CellularSheafModel, List[FixedComponentModel]]:
    return example_5_1_global(), example_5_1_components(which)


# ---------------------------------------------------------------------------
# Meridian family M1(k)
# ---------------------------------------------------------------------------

def sector_data(k: int) -> Tuple[Fan, List[int]]:
    """Normal fan at the special point and the rays carrying the k meridians."""
    if k < 1:
        raise ProblemFormatError(f"k must be a positive integer, got {k}")
    if k == 1:
        return sector_fan(3), [0]
    if k == 2:
        return sector_fan(4), [0, 2]
    fan = sector_fan(k)
    return fan, list(range(k))


def _triangle_embedding() -> ComponentEmbedding:
    embedded = EmbeddedComplex(
        vertices={"t0": (0, 0), "t1": (2, 1), "t2": (1, 3)},
        cells={
            "t0": ("t0",), "t1": ("t1",), "t2": ("t2",),
            "s01": ("t0", "t1"), "s12": ("t1", "t2"), "s20": ("t2", "t0"),
        },
        name="triangle boundary",
    )
    parent = {cell: "arc" for cell in embedded.cells}
    parent["t0"] = "theta0"
    tests = {
        "y": TestFunction.linear(embedded, (0, 1), "y"),
        "x": TestFunction.linear(embedded, (1, 0), "x"),
    }
    return ComponentEmbedding(embedded, parent, tests)


def example_5_2_M1(k: int = 3) -> FixedComponentModel:
    fan, meridians = sector_data(k)
    vertex_fiber = fiber(ray_complement_sheaf(fan, meridians), RationalMatrix.diagonal(2, 2))
    arc_fiber = fiber(ConicSheaf.constant(cross_fan()), RationalMatrix.from_rows([[0, -2], [2, 0]]))
    circle = CellComplex(["theta0", "arc"], {"theta0": 0, "arc": 1}, [("theta0", "arc")], True, "M1")
    return FixedComponentModel(f"M1(k={k})", circle, {"theta0": vertex_fiber, "arc": arc_fiber}, _triangle_embedding())


def capped_disk(k: int) -> CellComplex:
    """Closed disk: center N, k radial arcs, k boundary points and arcs, k sectors."""
    cells = ["N"]
    dims = {"N": 0}
    covers = []
    for j in range(k):
        nxt = (j + 1) % k
        cells += [f"r{j}", f"b{j}", f"e{j}", f"s{j}"]
        dims.update({f"r{j}": 1, f"b{j}": 0, f"e{j}": 1, f"s{j}": 2})
        covers += [("N", f"r{j}"), (f"b{j}", f"r{j}"), (f"b{j}", f"e{j}"), (f"b{nxt}", f"e{j}")]
        covers += [(f"r{j}", f"s{j}"), (f"r{nxt}", f"s{j}"), (f"e{j}", f"s{j}")]
    return CellComplex(cells, dims, covers, True, f"disk({k})")


def example_5_2_pair(k: int) -> Tuple[CellComplex, List[str], List[str]]:
    """Compact cellular model of the pair (Y, Z) for the k-meridian example."""
    circle = CellComplex(["v", "a"], {"v": 0, "a": 1}, [("v", "a")], True, "S1")
    total = circle.product(capped_disk(k), name=f"S1*disk({k})")
    interior = ["N"] + [f"r{j}" for j in range(k)] + [f"s{j}" for j in range(k)]
    Y = [f"{c}*{d}" for c in ("v", "a") for d in interior]
    Z = ["v*N"] + [f"v*r{j}" for j in range(k)]
    return total, Y, Z


def example_5_2_global(k: int) -> CellularSheafModel:
    """Identity model with a rank-one stalk on Y minus Z."""
    total, Y, Z = example_5_2_pair(k)
    stalks = {cell: {0: 1} for cell in Y if cell not in Z}
    return CellularSheafModel.identity(total, stalks, name=f"Y-Z({k})")


# ---------------------------------------------------------------------------
# Embedded complexes for index checks
# ---------------------------------------------------------------------------

def interval_complex() -> EmbeddedComplex:
    return EmbeddedComplex({"a": (0,), "b": (1,)}, {"a": ("a",), "b": ("b",), "e": ("a", "b")}, name="interval")


def square_circle() -> EmbeddedComplex:
    vertices = {"q0": (0, 0), "q1": (1, 0), "q2": (1, 1), "q3": (0, 1)}
    cells = {v: (v,) for v in vertices}
    cells.update({"f01": ("q0", "q1"), "f12": ("q1", "q2"), "f23": ("q2", "q3"), "f30": ("q3", "q0")})
    return EmbeddedComplex(vertices, cells, name="circle")


def filled_triangle() -> EmbeddedComplex:
    vertices = {"t0": (0, 0), "t1": (2, 1), "t2": (1, 3)}
    cells = {v: (v,) for v in vertices}
    cells.update({"s01": ("t0", "t1"), "s12": ("t1", "t2"), "s20": ("t2", "t0"), "face": ("t0", "t1", "t2")})
    return EmbeddedComplex(vertices, cells, name="triangle")


def local_line() -> EmbeddedComplex:
    """Neighbourhood of 0 in the line: strata {0}, (0, 1), (-1, 0) and their far endpoints."""
    vertices = {"o": (0,), "p": (1,), "m": (-1,)}
    cells = {"o": ("o",), "p": ("p",), "m": ("m",), "pos": ("o", "p"), "neg": ("m", "o")}
    return EmbeddedComplex(vertices, cells, name="line")


def local_half_planes() -> EmbeddedComplex:
    """Square [-1, 1]^2 cut along the x-axis into an upper and a lower rectangle."""
    vertices = {
        "w": (-1, 0), "e": (1, 0),
        "nw": (-1, 1), "ne": (1, 1), "sw": (-1, -1), "se": (1, -1),
    }
    cells = {v: (v,) for v in vertices}
    cells.update({
        "axis": ("w", "e"),
        "top": ("nw", "ne"), "bottom": ("sw", "se"),
        "west_up": ("w", "nw"), "east_up": ("e", "ne"),
        "west_down": ("w", "sw"), "east_down": ("e", "se"),
        "upper": ("w", "e", "ne", "nw"),
        "lower": ("w", "e", "se", "sw"),
    })
    return EmbeddedComplex(vertices, cells, name="half-planes")


def index_fixtures() -> Dict[str, Tuple[EmbeddedComplex, Dict[str, TestFunction]]]:
    """Compact embedded complexes with admissible test functions."""
    interval = interval_complex()
    circle = square_circle()
    triangle = filled_triangle()
    return {
        "interval": (interval, {"x": TestFunction.linear(interval, (1,), "x"), "-x": TestFunction.linear(interval, (-1,), "-x")}),
        "circle": (circle, {"x+2y": TestFunction.linear(circle, (1, 2), "x+2y"), "2x-y": TestFunction.linear(circle, (2, -1), "2x-y")}),
        "triangle": (triangle, {"y": TestFunction.linear(triangle, (0, 1), "y"), "x": TestFunction.linear(triangle, (1, 0), "x")}),
    }


GENERATORS: Dict[str, Callable[..., object]] = {
    "example_5_1_phi": lambda k=None: example_5_1("phi"),
    "example_5_1_psi": lambda k=None: example_5_1("psi"),
    "example_5_2_M1": lambda k=None: example_5_2_M1(3 if k is None else k),
    "example_5_2_global": lambda k=None: example_5_2_global(3 if k is None else k),
}

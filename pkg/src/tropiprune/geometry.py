"""Exact 2-D polytope machinery: hulls, Minkowski sums, zonotopes, duals.

Everything here works on plain float tuples so that integer-coordinate
inputs (exponent vectors, dyadic test data) stay exact.  Higher-dimensional
zonotopes are handled by projecting generator matrices down to two chosen
coordinates first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tropical import TropicalPolynomial, newton_points

Point = tuple[float, float]

#: Vertex-enumeration cap for zonotopes (2**m subset sums).
MAX_ZONOTOPE_GENERATORS = 20

#: Samples per edge when estimating Hausdorff distances.
EDGE_SAMPLES = 64


@dataclass(frozen=True)
class Polytope2D:
    """Convex polygon as a canonical CCW vertex tuple.

    The first vertex is the lexicographically smallest and edge-interior
    points are dropped, so equal regions compare equal.  Construct through
    convex_hull_2d to keep the representation canonical.
    """

    vertices: tuple[Point, ...]

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class Zonotope:
    """Generator representation: all sums of scaled generators plus a shift."""

    generators: tuple[tuple[float, ...], ...]
    shift: tuple[float, ...]

    def __post_init__(self) -> None:
        gens = tuple(tuple(float(v) for v in g) for g in self.generators)
        shift = tuple(float(v) for v in self.shift)
        if any(len(g) != len(shift) for g in gens):
            raise ValueError("generator dimensions must match the shift")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "shift", shift)

    @property
    def dim(self) -> int:
        return len(self.shift)


def _cross(o: Point, a: Point, b: Point) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(points: Sequence[Sequence[float]]) -> Polytope2D:
    """Monotone-chain hull with strictly convex corners only.

    Args:
        points: at least one 2-D point; duplicates are fine.

    Returns:
        Canonical CCW polytope.  Collinear input degenerates to a segment,
        coincident input to a single point.
    """
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if not pts:
        raise ValueError("cannot take the hull of no points")
    if len(pts) == 1:
        return Polytope2D((pts[0],))
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if not hull:
        # fully collinear: keep the two extreme points
        hull = [pts[0], pts[-1]]
    return Polytope2D(tuple(hull))


def minkowski_sum(p1: Polytope2D, p2: Polytope2D) -> Polytope2D:
    """Hull of all pairwise vertex sums of the two polytopes."""
    if not p1.vertices or not p2.vertices:
        raise ValueError("polytopes must be non-empty")
    sums = [(a[0] + b[0], a[1] + b[1]) for a in p1.vertices for b in p2.vertices]
    return convex_hull_2d(sums)


def zonotope_vertices(z: Zonotope) -> Polytope2D:
    """Hull of all subset sums of the generators, translated by the shift.

    Only 2-D zonotopes are enumerated; the generator count is capped at
    MAX_ZONOTOPE_GENERATORS because the sweep is over 2**m corner points.
    """
    if z.dim != 2:
        raise ValueError(f"vertex enumeration needs 2-D generators, got dim {z.dim}")
    m = len(z.generators)
    if m > MAX_ZONOTOPE_GENERATORS:
        raise ValueError(f"{m} generators exceed the enumeration bound "
                         f"{MAX_ZONOTOPE_GENERATORS}; project or sample instead")
    sums = [(z.shift[0], z.shift[1])]
    for gx, gy in z.generators:
        sums += [(x + gx, y + gy) for x, y in sums]
    return convex_hull_2d(sums)


def dual_subdivision_points(p: TropicalPolynomial) -> Polytope2D:
    """Hull of the exponent vectors of a 2-variable polynomial.

    For bias-free models this hull is the dual object of the polynomial's
    non-linearity locus, which is what the pruning objective preserves.
    """
    if p.dim != 2:
        raise ValueError(f"dual subdivision implemented for 2 variables, got {p.dim}")
    return convex_hull_2d([(float(a), float(b)) for a, b in newton_points(p)])


def project_generators(g: np.ndarray, dims: tuple[int, int]) -> Zonotope:
    """Zonotope from two chosen columns of a generator matrix, zero shift."""
    mat = np.asarray(g, dtype=float)
    if mat.ndim != 2:
        raise ValueError("generator matrix must be 2-D")
    a, b = int(dims[0]), int(dims[1])
    if not (0 <= a < mat.shape[1] and 0 <= b < mat.shape[1]):
        raise ValueError(f"projection dims {dims} out of range for {mat.shape[1]} columns")
    gens = tuple((float(row[a]), float(row[b])) for row in mat)
    return Zonotope(gens, (0.0, 0.0))


def _point_segment_distance(p: Point, a: Point, b: Point) -> float:
    ax, ay = a
    vx, vy = b[0] - ax, b[1] - ay
    wx, wy = p[0] - ax, p[1] - ay
    vv = vx * vx + vy * vy
    t = 0.0 if vv == 0.0 else max(0.0, min(1.0, (wx * vx + wy * vy) / vv))
    dx, dy = wx - t * vx, wy - t * vy
    return math.hypot(dx, dy)


def _contains(poly: Polytope2D, p: Point) -> bool:
    verts = poly.vertices
    if len(verts) < 3:
        return False
    n = len(verts)
    return all(_cross(verts[i], verts[(i + 1) % n], p) >= -1e-12 for i in range(n))


def point_to_polytope(p: Point, poly: Polytope2D) -> float:
    """Euclidean distance from a point to a convex region (0 inside)."""
    verts = poly.vertices
    if len(verts) == 1:
        return math.hypot(p[0] - verts[0][0], p[1] - verts[0][1])
    if _contains(poly, p):
        return 0.0
    n = len(verts)
    return min(_point_segment_distance(p, verts[i], verts[(i + 1) % n]) for i in range(n))


def _boundary_samples(poly: Polytope2D) -> list[Point]:
    verts = poly.vertices
    if len(verts) == 1:
        return [verts[0]]
    samples: list[Point] = []
    n = len(verts)
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        for k in range(EDGE_SAMPLES):
            t = k / EDGE_SAMPLES
            samples.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
    return samples


def hausdorff_distance(p1: Polytope2D, p2: Polytope2D) -> float:
    """Symmetric Hausdorff distance between two convex regions.

    Boundaries are densified with EDGE_SAMPLES points per edge; adequate as a
    diagnostic and exact whenever the extremes sit on vertices.
    """
    if not p1.vertices or not p2.vertices:
        raise ValueError("polytopes must be non-empty")
    d12 = max(point_to_polytope(s, p2) for s in _boundary_samples(p1))
    d21 = max(point_to_polytope(s, p1) for s in _boundary_samples(p2))
    return max(d12, d21)

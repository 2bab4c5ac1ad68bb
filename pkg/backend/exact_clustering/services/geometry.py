"""
Exact rational geometry: moment-curve points, circumspheres, sphere-side and
simple-polygon predicates.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import reduce
from math import lcm
from typing import Iterable, List, Sequence, Tuple

from sympy import Matrix

from .errors import DimensionError, DomainError, PreconditionError, SingularSystemError
from .radical_sum import RadicalSum

logger = logging.getLogger(__name__)

SUPPORTED_DIMENSIONS = (2, 3, 4)


def to_fraction(value) -> Fraction:
    if isinstance(value, float):
        raise DomainError(f"float coordinate {value!r}; use a rational string or int")
    return Fraction(value)


@dataclass(frozen=True)
class Point:
    coords: Tuple[Fraction, ...]

    def __post_init__(self):
        coords = tuple(to_fraction(c) for c in self.coords)
        if len(coords) not in SUPPORTED_DIMENSIONS:
            raise DimensionError(f"unsupported dimension {len(coords)}")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def of(cls, *values) -> "Point":
        return cls(tuple(values))

    @property
    def dimension(self) -> int:
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, index):
        return self.coords[index]

    def __len__(self):
        return len(self.coords)

    def __add__(self, other: "Point") -> "Point":
        _same_dimension(self, other)
        return Point(tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other: "Point") -> "Point":
        _same_dimension(self, other)
        return Point(tuple(a - b for a, b in zip(self, other)))

    def scaled(self, factor) -> "Point":
        factor = to_fraction(factor)
        return Point(tuple(c * factor for c in self))

    def dot(self, other: "Point") -> Fraction:
        _same_dimension(self, other)
        return sum((a * b for a, b in zip(self, other)), Fraction(0))

    def __str__(self) -> str:
        return "(" + ", ".join(str(c) for c in self.coords) + ")"


@dataclass(frozen=True)
class Sphere:
    center: Point
    squared_radius: Fraction

    def __post_init__(self):
        radius = to_fraction(self.squared_radius)
        if radius <= 0:
            raise DomainError(f"squared radius must be positive, got {radius}")
        object.__setattr__(self, "squared_radius", radius)

    @property
    def dimension(self) -> int:
        return self.center.dimension

    @property
    def radius(self) -> RadicalSum:
        return RadicalSum.sqrt(self.squared_radius)


class Side(Enum):
    INSIDE = "inside"
    ON = "on"
    OUTSIDE = "outside"


def _same_dimension(p: Point, q: Point):
    if p.dimension != q.dimension:
        raise DimensionError(f"dimension mismatch: {p.dimension} vs {q.dimension}")


def squared_distance(p: Point, q: Point) -> Fraction:
    _same_dimension(p, q)
    return sum(((a - b) ** 2 for a, b in zip(p, q)), Fraction(0))


def distance(p: Point, q: Point) -> RadicalSum:
    return RadicalSum.sqrt(squared_distance(p, q))


def moment_point(t, d: int) -> Point:
    """Point (t, t^2, ..., t^d) on the moment curve."""
    t = to_fraction(t)
    if d not in SUPPORTED_DIMENSIONS:
        raise DimensionError(f"unsupported dimension {d}")
    if t <= 0:
        raise DomainError(f"moment parameter must be positive, got {t}")
    return Point(tuple(t ** i for i in range(1, d + 1)))


def _integer_rows(rows: List[List[Fraction]]) -> List[List[int]]:
    scaled = []
    for row in rows:
        scale = reduce(lcm, (v.denominator for v in row), 1)
        scaled.append([int(v * scale) for v in row])
    return scaled


def _bareiss_det(rows: List[List[int]]) -> int:
    return int(Matrix(rows).det(method="bareiss"))


def circumsphere(points: Sequence[Point]) -> Sphere:
    """
    Sphere through d+1 affinely independent points in dimension d.

    Solves the perpendicular-bisector system 2(p_i - p_0).x = |p_i|^2 - |p_0|^2
    with Cramer's rule over integer rows (Bareiss determinants).
    """
    if not points:
        raise DimensionError("no points given")
    d = points[0].dimension
    if len(points) != d + 1:
        raise DimensionError(f"need {d + 1} points in dimension {d}, got {len(points)}")
    for p in points[1:]:
        _same_dimension(points[0], p)
    base = points[0]
    base_norm = base.dot(base)
    augmented = []
    for p in points[1:]:
        row = [2 * (a - b) for a, b in zip(p, base)]
        row.append(p.dot(p) - base_norm)
        augmented.append(row)
    # row scaling changes both sides equally, so Cramer's ratios are unaffected
    integer_rows = _integer_rows(augmented)
    system = [row[:d] for row in integer_rows]
    rhs = [row[d] for row in integer_rows]
    determinant = _bareiss_det(system)
    if determinant == 0:
        raise SingularSystemError(f"points {[str(p) for p in points]} are affinely dependent")
    coords = []
    for j in range(d):
        replaced = [row[:j] + [rhs[i]] + row[j + 1:] for i, row in enumerate(system)]
        coords.append(Fraction(_bareiss_det(replaced), determinant))
    center = Point(tuple(coords))
    return Sphere(center, squared_distance(center, base))


def sphere_side(sphere: Sphere, p: Point) -> Side:
    _same_dimension(sphere.center, p)
    gap = squared_distance(sphere.center, p) - sphere.squared_radius
    if gap < 0:
        return Side.INSIDE
    if gap == 0:
        return Side.ON
    return Side.OUTSIDE


def moment_sphere_polynomial(sphere: Sphere) -> List[Fraction]:
    """Coefficients, highest degree first, of |m(t) - center|^2 - r^2 along the moment curve."""
    d = sphere.dimension
    coeffs = [Fraction(0)] * (2 * d + 1)
    for i, c in enumerate(sphere.center, start=1):
        coeffs[2 * d - 2 * i] += 1
        coeffs[2 * d - i] += -2 * c
    coeffs[2 * d] += sphere.center.dot(sphere.center) - sphere.squared_radius
    return coeffs


def sign_changes(coeffs: Iterable[Fraction]) -> int:
    signs = [c > 0 for c in coeffs if c != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


# Planar predicates

def _require_planar(*points: Point):
    for p in points:
        if p.dimension != 2:
            raise DimensionError(f"planar predicate got a {p.dimension}D point")


def orientation(a: Point, b: Point, c: Point) -> int:
    """+1 for a left turn a->b->c, -1 for a right turn, 0 when collinear."""
    cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return (cross > 0) - (cross < 0)


def on_segment(p: Point, a: Point, b: Point) -> bool:
    if orientation(a, b, p) != 0:
        return False
    return (min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))


def segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool:
    """True when closed segments ab and cd share at least one point."""
    o1, o2 = orientation(a, b, c), orientation(a, b, d)
    o3, o4 = orientation(c, d, a), orientation(c, d, b)
    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        return True
    return (on_segment(c, a, b) or on_segment(d, a, b)
            or on_segment(a, c, d) or on_segment(b, c, d))


def folds_back(a: Point, b: Point, c: Point) -> bool:
    """Adjacent segments ab, bc overlap beyond their shared vertex b."""
    return on_segment(c, a, b) or on_segment(a, b, c)


def _check_polygon(vertices: Sequence[Point]):
    if len(vertices) < 3:
        raise PreconditionError(f"a polygon needs at least 3 vertices, got {len(vertices)}")
    _require_planar(*vertices)
    for i, v in enumerate(vertices):
        if v == vertices[i - 1]:
            raise PreconditionError(f"consecutive repeated vertex {v}")


def polyline_is_simple(vertices: Sequence[Point]) -> bool:
    _check_polygon(vertices)
    n = len(vertices)
    edges = [(vertices[i], vertices[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        a, b = edges[i]
        if folds_back(a, b, edges[(i + 1) % n][1]):
            return False
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if segments_intersect(a, b, *edges[j]):
                return False
    return True


def locate(polygon: Sequence[Point], p: Point) -> Side:
    """Classify p against a polygon already known to be simple."""
    n = len(polygon)
    for i in range(n):
        if on_segment(p, polygon[i - 1], polygon[i]):
            return Side.ON
    px, py = p
    inside = False
    x0, y0 = polygon[-1]
    above0 = y0 >= py
    for x1, y1 in polygon:
        above1 = y1 >= py
        if above0 != above1 and ((y1 - py) * (x0 - x1) >= (x1 - px) * (y0 - y1)) == above1:
            inside = not inside
        above0, x0, y0 = above1, x1, y1
    return Side.INSIDE if inside else Side.OUTSIDE


def point_vs_polygon(polygon: Sequence[Point], p: Point) -> Side:
    if not polyline_is_simple(polygon):
        raise PreconditionError("polygon is not simple")
    _require_planar(p)
    return locate(polygon, p)


def winding_number(polygon: Sequence[Point], p: Point) -> int:
    """Winding number of a closed polygon around p (p must not lie on it)."""
    _require_planar(p, *polygon)
    winding = 0
    n = len(polygon)
    for i in range(n):
        a, b = polygon[i], polygon[(i + 1) % n]
        if a[1] <= p[1]:
            if b[1] > p[1] and orientation(a, b, p) > 0:
                winding += 1
        elif b[1] <= p[1] and orientation(a, b, p) < 0:
            winding -= 1
    return winding


def cocircular(a: Point, b: Point, c: Point, d: Point) -> bool:
    """Exact incircle determinant test; four collinear points also count."""
    _require_planar(a, b, c, d)
    rows = []
    for p in (a, b, c):
        dx, dy = p[0] - d[0], p[1] - d[1]
        rows.append((dx, dy, dx * dx + dy * dy))
    (a1, a2, a3), (b1, b2, b3), (c1, c2, c3) = rows
    det = (a1 * (b2 * c3 - b3 * c2)
           - a2 * (b1 * c3 - b3 * c1)
           + a3 * (b1 * c2 - b2 * c1))
    return det == 0


class IndexedPredicates:
    """Planar predicates over a fixed point list, addressed by index and memoized."""

    def __init__(self, points: Sequence[Point]):
        _require_planar(*points)
        self.points = list(points)
        self._orientations = {}

    def orient(self, i: int, j: int, m: int) -> int:
        # orientation is alternating in its arguments; cache on the sorted triple
        parity = 1
        if i > j:
            i, j, parity = j, i, -parity
        if j > m:
            j, m, parity = m, j, -parity
        if i > j:
            i, j, parity = j, i, -parity
        key = (i, j, m)
        value = self._orientations.get(key)
        if value is None:
            if i == j or j == m:
                value = 0
            else:
                value = orientation(self.points[i], self.points[j], self.points[m])
            self._orientations[key] = value
        return value * parity

    def on_segment(self, x: int, a: int, b: int) -> bool:
        if self.orient(a, b, x) != 0:
            return False
        p, q, r = self.points[x], self.points[a], self.points[b]
        return min(q[0], r[0]) <= p[0] <= max(q[0], r[0]) and min(q[1], r[1]) <= p[1] <= max(q[1], r[1])

    def segments_intersect(self, a: int, b: int, c: int, d: int) -> bool:
        o1, o2 = self.orient(a, b, c), self.orient(a, b, d)
        o3, o4 = self.orient(c, d, a), self.orient(c, d, b)
        if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
            return True
        return (self.on_segment(c, a, b) or self.on_segment(d, a, b)
                or self.on_segment(a, c, d) or self.on_segment(b, c, d))

    def folds_back(self, a: int, b: int, c: int) -> bool:
        return self.on_segment(c, a, b) or self.on_segment(a, b, c)

    def locate(self, cycle: Sequence[int], x: int) -> Side:
        """Same crossing test as ``locate`` with the edge products read from the cache."""
        py = self.points[x][1]
        inside = False
        previous = cycle[-1]
        above_previous = self.points[previous][1] >= py
        for current in cycle:
            above_current = self.points[current][1] >= py
            turn = self.orient(previous, current, x)
            if turn == 0 and self.on_segment(x, previous, current):
                return Side.ON
            if above_previous != above_current and (turn >= 0) == above_current:
                inside = not inside
            previous, above_previous = current, above_current
        return Side.INSIDE if inside else Side.OUTSIDE

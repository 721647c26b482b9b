"""Exact Newton/Hodge polygon geometry over the rationals."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, NamedTuple


class _Infinity:
    """Ordinate of a vanishing coefficient."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_frac(s) -> Fraction:
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    return Fraction(str(s))


@dataclass(frozen=True)
class Polygon:
    """Lower convex chain starting at (0, 0).

    ``vertices`` keeps only the corners; ``truncated`` records that trailing
    points with infinite ordinate were dropped by :func:`lower_hull`.
    """

    vertices: tuple[tuple[int, Fraction], ...]
    truncated: bool = field(default=False, compare=False)

    def __post_init__(self):
        vs = tuple((int(x), Fraction(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", vs)
        if not vs or vs[0] != (0, 0):
            raise ValueError("polygon must start at (0, 0)")
        for (x0, _), (x1, _) in zip(vs, vs[1:]):
            if x1 <= x0:
                raise ValueError("vertex abscissae must be strictly increasing")
        seg = self.segment_slopes
        for s0, s1 in zip(seg, seg[1:]):
            if s1 <= s0:
                raise ValueError(f"not strictly convex at slopes {s0}, {s1}")

    @property
    def segment_slopes(self) -> list[Fraction]:
        vs = self.vertices
        return [(y1 - y0) / (x1 - x0) for (x0, y0), (x1, y1) in zip(vs, vs[1:])]

    @property
    def slopes(self) -> list[Fraction]:
        """One slope per unit x-interval, non-decreasing."""
        out = []
        vs = self.vertices
        for (x0, y0), (x1, y1) in zip(vs, vs[1:]):
            out.extend([(y1 - y0) / (x1 - x0)] * (x1 - x0))
        return out

    @property
    def length(self) -> int:
        return self.vertices[-1][0]

    @property
    def endpoint(self) -> tuple[int, Fraction]:
        return self.vertices[-1]

    def ordinate(self, x: int) -> Fraction:
        vs = self.vertices
        if not 0 <= x <= vs[-1][0]:
            raise ValueError(f"abscissa {x} outside [0, {vs[-1][0]}]")
        for (x0, y0), (x1, y1) in zip(vs, vs[1:]):
            if x0 <= x <= x1:
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        return vs[0][1]

    def ordinates(self) -> list[Fraction]:
        return [self.ordinate(x) for x in range(self.length + 1)]

    def to_json(self) -> dict:
        return {
            "vertices": [[x, frac_str(y)] for x, y in self.vertices],
            "slopes": [frac_str(s) for s in self.slopes],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Polygon":
        try:
            verts = [(int(x), parse_frac(y)) for x, y in data["vertices"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed polygon JSON: {exc}") from None
        poly = lower_hull(verts)
        if poly.vertices != tuple(_strip_collinear(verts)):
            raise ValueError("polygon JSON vertices are not a convex chain")
        return poly

    def __str__(self) -> str:
        return "[" + ", ".join(f"({x}, {y})" for x, y in self.vertices) + "]"


def _cross(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _strip_collinear(points) -> list[tuple[int, Fraction]]:
    pts = [(int(x), Fraction(y)) for x, y in points]
    out: list[tuple[int, Fraction]] = []
    for pt in pts:
        while len(out) >= 2 and _cross(out[-2], out[-1], pt) == 0:
            out.pop()
        out.append(pt)
    return out


def lower_hull(points: Iterable[tuple[int, object]]) -> Polygon:
    """Lower convex hull of ``(n, ordinate)`` points; ``INF`` ordinates never support it."""
    pts = list(points)
    if not pts:
        raise ValueError("lower_hull of an empty point set")
    xs = [int(x) for x, _ in pts]
    if len(set(xs)) != len(xs):
        raise ValueError("abscissae must be distinct")
    by_x = dict(zip(xs, (y for _, y in pts)))
    if 0 not in by_x:
        raise ValueError("points must include abscissa 0")
    if by_x[0] is INF or Fraction(by_x[0]) != 0:
        raise ValueError("ordinate at abscissa 0 must be 0")
    finite = sorted((x, Fraction(y)) for x, y in by_x.items() if y is not INF)
    truncated = finite[-1][0] != max(xs)
    hull: list[tuple[int, Fraction]] = []
    for pt in finite:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], pt) <= 0:
            hull.pop()
        hull.append(pt)
    return Polygon(tuple(hull), truncated=truncated)


def hodge_polygon(d: int) -> Polygon:
    """Hull of (n, n(n+1)/2d) for 0 <= n <= d-1."""
    if d < 3:
        raise ValueError("Hodge polygon needs d >= 3")
    return lower_hull([(n, Fraction(n * (n + 1), 2 * d)) for n in range(d)])


class Comparison(NamedTuple):
    holds: bool
    witness: int | None

    def __bool__(self) -> bool:
        return self.holds


def lies_above(P: Polygon, Q: Polygon) -> Comparison:
    """Whether P >= Q at every integer abscissa; witness is the first violation."""
    if P.length != Q.length:
        raise ValueError(f"polygon spans differ: {P.length} vs {Q.length}")
    for x in range(P.length + 1):
        if P.ordinate(x) < Q.ordinate(x):
            return Comparison(False, x)
    return Comparison(True, None)


def dilate(P: Polygon, k: int) -> Polygon:
    if k < 1:
        raise ValueError("dilation factor must be positive")
    return Polygon(tuple((k * x, k * y) for x, y in P.vertices), truncated=P.truncated)


def pointwise_min(polys: Iterable[Polygon]) -> Polygon:
    """Lower hull of the pointwise minimum of equal-length polygons."""
    polys = list(polys)
    if not polys:
        raise ValueError("no polygons")
    n = polys[0].length
    mins = [min(P.ordinate(x) for P in polys) for x in range(n + 1)]
    return lower_hull(list(enumerate(mins)))

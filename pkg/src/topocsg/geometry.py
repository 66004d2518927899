"""CSG solids over signed scalar fields in a bounded universe.

A solid is an immutable expression tree: leaves are analytic primitives,
inner nodes are Boolean operators.  Every solid evaluates to a field f with

* f(p) < 0 strictly inside, f(p) > 0 strictly outside,
* |f(p) - f(q)| <= |p - q|  (Lipschitz bound 1).

For primitives the field is the exact Euclidean signed distance (the convex
polytope underestimates distance near edges but keeps the sign and the
Lipschitz bound).  Compound fields combine children with min/max/negation
and are generally not exact distances; the interval tests in `octree` rely
only on the sign and the Lipschitz bound, never on exactness.

Points are plain 3-sequences; vectorized evaluation takes arrays of shape
(..., 3) with the coordinate axis last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

Vec3 = tuple[float, float, float]
Bounds = tuple[Vec3, Vec3]

# Stack-machine opcodes shared with the compiled kernels.
OP_BOX = 0
OP_SPHERE = 1
OP_CAPSULE = 2
OP_SLAB = 3
OP_HALF = 4
OP_MIN = 5
OP_MAX = 6
OP_NEG = 7

_PARAM_WIDTH = 7
_UNIT_TOL = 1e-6


class GeometryError(ValueError):
    """Invalid geometric input (bad parameters, malformed operands)."""


class DomainError(GeometryError):
    """A point or operand lies outside the universe the query assumes."""


def _vec3(value, name: str) -> Vec3:
    try:
        x, y, z = (float(c) for c in value)
    except (TypeError, ValueError) as exc:
        raise GeometryError(f"{name} must be a 3-sequence of numbers") from exc
    if not all(math.isfinite(c) for c in (x, y, z)):
        raise GeometryError(f"{name} must be finite, got {value!r}")
    return (x, y, z)


def _scalar(value, name: str, *, positive: bool = False) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError) as exc:
        raise GeometryError(f"{name} must be a number") from exc
    if not math.isfinite(v):
        raise GeometryError(f"{name} must be finite")
    if positive and v <= 0.0:
        raise GeometryError(f"{name} must be > 0, got {v}")
    return v


def _unit(normal, name: str) -> Vec3:
    n = _vec3(normal, name)
    length = math.sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2])
    if abs(length - 1.0) > _UNIT_TOL:
        raise GeometryError(f"{name} must be a unit vector, |{name}| = {length:.9g}")
    # renormalize so downstream dot products are exact to float precision
    return (n[0] / length, n[1] / length, n[2] / length)


@dataclass(frozen=True)
class Universe:
    """Closed axis-aligned world box; every query is interpreted inside it."""

    min_corner: Vec3
    max_corner: Vec3

    def __post_init__(self):
        object.__setattr__(self, "min_corner", _vec3(self.min_corner, "min_corner"))
        object.__setattr__(self, "max_corner", _vec3(self.max_corner, "max_corner"))
        for lo, hi in zip(self.min_corner, self.max_corner):
            if not lo < hi:
                raise GeometryError(
                    f"universe must have positive extent on every axis, "
                    f"got {self.min_corner} .. {self.max_corner}"
                )

    @cached_property
    def extent(self) -> float:
        """Longest edge of the universe box."""
        return max(hi - lo for lo, hi in zip(self.min_corner, self.max_corner))

    @property
    def edges(self) -> Vec3:
        return tuple(hi - lo for lo, hi in zip(self.min_corner, self.max_corner))

    def contains(self, point) -> bool:
        p = _vec3(point, "point")
        return all(
            lo <= c <= hi
            for c, lo, hi in zip(p, self.min_corner, self.max_corner)
        )

    def strictly_contains_bounds(self, lo, hi) -> bool:
        return all(a > u for a, u in zip(lo, self.min_corner)) and all(
            b < u for b, u in zip(hi, self.max_corner)
        )

    def bounds(self) -> Bounds:
        return self.min_corner, self.max_corner


@dataclass(frozen=True)
class HalfSpace:
    """Points p with dot(p, normal) <= offset; the normal points outward."""

    normal: Vec3
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "normal", _unit(self.normal, "normal"))
        object.__setattr__(self, "offset", _scalar(self.offset, "offset"))


@dataclass(frozen=True, eq=False)
class SdfProgram:
    """A solid flattened to postfix form for the stack-machine kernels.

    Compares by identity: programs are cached per solid instance.
    """

    ops: np.ndarray      # int32, shape (n,)
    params: np.ndarray   # float64, shape (n, 7)
    stack_need: int


class Solid:
    """Base class for CSG nodes.  Instances are immutable and hashable."""

    def values(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized field evaluation; pts has shape (..., 3)."""
        raise NotImplementedError

    def _emit(self, ops: list[int], params: list[list[float]]) -> None:
        raise NotImplementedError

    def primitives(self) -> Iterator["Solid"]:
        """Yield the primitive leaves of the expression tree."""
        yield self

    @cached_property
    def program(self) -> SdfProgram:
        ops: list[int] = []
        params: list[list[float]] = []
        self._emit(ops, params)
        depth = 0
        max_depth = 0
        for op in ops:
            if op in (OP_BOX, OP_SPHERE, OP_CAPSULE, OP_SLAB, OP_HALF):
                depth += 1
            elif op in (OP_MIN, OP_MAX):
                depth -= 1
            max_depth = max(max_depth, depth)
        assert depth == 1, "program must leave exactly one value on the stack"
        return SdfProgram(
            ops=np.asarray(ops, dtype=np.int32),
            params=np.asarray(params, dtype=np.float64).reshape(len(ops), _PARAM_WIDTH),
            stack_need=max_depth,
        )


def _pad(*vals: float) -> list[float]:
    row = list(vals)
    row.extend(0.0 for _ in range(_PARAM_WIDTH - len(row)))
    return row


@dataclass(frozen=True)
class Box(Solid):
    min_corner: Vec3
    max_corner: Vec3

    def values(self, pts):
        pts = np.asarray(pts, dtype=float)
        c = 0.5 * (np.asarray(self.min_corner) + np.asarray(self.max_corner))
        h = 0.5 * (np.asarray(self.max_corner) - np.asarray(self.min_corner))
        q = np.abs(pts - c) - h
        outside = np.sqrt(np.sum(np.square(np.maximum(q, 0.0)), axis=-1))
        inside = np.minimum(np.max(q, axis=-1), 0.0)
        return outside + inside

    def _emit(self, ops, params):
        ops.append(OP_BOX)
        params.append(_pad(*self.min_corner, *self.max_corner))


@dataclass(frozen=True)
class Sphere(Solid):
    center: Vec3
    radius: float

    def values(self, pts):
        pts = np.asarray(pts, dtype=float)
        d = pts - np.asarray(self.center)
        return np.sqrt(np.sum(np.square(d), axis=-1)) - self.radius

    def _emit(self, ops, params):
        ops.append(OP_SPHERE)
        params.append(_pad(*self.center, self.radius))


@dataclass(frozen=True)
class Capsule(Solid):
    """All points within `radius` of the segment p0..p1."""

    p0: Vec3
    p1: Vec3
    radius: float

    def values(self, pts):
        pts = np.asarray(pts, dtype=float)
        a = np.asarray(self.p0)
        ab = np.asarray(self.p1) - a
        denom = float(np.dot(ab, ab))
        t = np.clip(np.sum((pts - a) * ab, axis=-1) / denom, 0.0, 1.0)
        closest = a + t[..., None] * ab
        d = pts - closest
        return np.sqrt(np.sum(np.square(d), axis=-1)) - self.radius

    def _emit(self, ops, params):
        ops.append(OP_CAPSULE)
        params.append(_pad(*self.p0, *self.p1, self.radius))


@dataclass(frozen=True)
class Slab(Solid):
    """Points within `half_thickness` of the plane through `point`.

    Unbounded in-plane; bound it with an intersection before using it as a
    relation operand or scene object.
    """

    point: Vec3
    normal: Vec3
    half_thickness: float

    def values(self, pts):
        pts = np.asarray(pts, dtype=float)
        n = np.asarray(self.normal)
        d = float(np.dot(np.asarray(self.point), n))
        return np.abs(pts @ n - d) - self.half_thickness

    def _emit(self, ops, params):
        n = self.normal
        d = n[0] * self.point[0] + n[1] * self.point[1] + n[2] * self.point[2]
        ops.append(OP_SLAB)
        params.append(_pad(*n, d, self.half_thickness))


@dataclass(frozen=True)
class ConvexPolytope(Solid):
    """Intersection of half-spaces, evaluated as max of plane distances.

    The field is the exact distance inside and near faces but underestimates
    the distance outside near edges and corners; the sign and Lipschitz
    bound still hold, which is all the interval tests need.
    """

    halfspaces: tuple[HalfSpace, ...]

    def values(self, pts):
        pts = np.asarray(pts, dtype=float)
        vals = [pts @ np.asarray(h.normal) - h.offset for h in self.halfspaces]
        out = vals[0]
        for v in vals[1:]:
            out = np.maximum(out, v)
        return out

    def _emit(self, ops, params):
        for i, h in enumerate(self.halfspaces):
            ops.append(OP_HALF)
            params.append(_pad(*h.normal, h.offset))
            if i:
                ops.append(OP_MAX)
                params.append(_pad())


@dataclass(frozen=True)
class Union(Solid):
    parts: tuple[Solid, ...]

    def values(self, pts):
        out = self.parts[0].values(pts)
        for part in self.parts[1:]:
            out = np.minimum(out, part.values(pts))
        return out

    def _emit(self, ops, params):
        for i, part in enumerate(self.parts):
            part._emit(ops, params)
            if i:
                ops.append(OP_MIN)
                params.append(_pad())

    def primitives(self):
        for part in self.parts:
            yield from part.primitives()


@dataclass(frozen=True)
class Intersection(Solid):
    parts: tuple[Solid, ...]

    def values(self, pts):
        out = self.parts[0].values(pts)
        for part in self.parts[1:]:
            out = np.maximum(out, part.values(pts))
        return out

    def _emit(self, ops, params):
        for i, part in enumerate(self.parts):
            part._emit(ops, params)
            if i:
                ops.append(OP_MAX)
                params.append(_pad())

    def primitives(self):
        for part in self.parts:
            yield from part.primitives()


@dataclass(frozen=True)
class Difference(Solid):
    """Regularized left minus right: f = max(f_left, -f_right)."""

    left: Solid
    right: Solid

    def values(self, pts):
        return np.maximum(self.left.values(pts), -self.right.values(pts))

    def _emit(self, ops, params):
        self.left._emit(ops, params)
        self.right._emit(ops, params)
        ops.append(OP_NEG)
        params.append(_pad())
        ops.append(OP_MAX)
        params.append(_pad())

    def primitives(self):
        yield from self.left.primitives()
        yield from self.right.primitives()


@dataclass(frozen=True)
class Complement(Solid):
    part: Solid

    def values(self, pts):
        return -self.part.values(pts)

    def _emit(self, ops, params):
        self.part._emit(ops, params)
        ops.append(OP_NEG)
        params.append(_pad())

    def primitives(self):
        yield from self.part.primitives()


@dataclass(frozen=True)
class Clip(Solid):
    """Solid restricted to one side of a plane: f = max(f_part, plane)."""

    part: Solid
    plane: HalfSpace

    def values(self, pts):
        pts = np.asarray(pts, dtype=float)
        n = np.asarray(self.plane.normal)
        return np.maximum(self.part.values(pts), pts @ n - self.plane.offset)

    def _emit(self, ops, params):
        self.part._emit(ops, params)
        ops.append(OP_HALF)
        params.append(_pad(*self.plane.normal, self.plane.offset))
        ops.append(OP_MAX)
        params.append(_pad())

    def primitives(self):
        yield from self.part.primitives()


# ---------------------------------------------------------------------------
# constructors

def box(min_corner, max_corner) -> Box:
    lo = _vec3(min_corner, "min_corner")
    hi = _vec3(max_corner, "max_corner")
    for a, b in zip(lo, hi):
        if not a < b:
            raise GeometryError(f"box must satisfy min < max per axis, got {lo} .. {hi}")
    return Box(lo, hi)


def sphere(center, radius) -> Sphere:
    return Sphere(_vec3(center, "center"), _scalar(radius, "radius", positive=True))


def capsule(p0, p1, radius) -> Capsule:
    a = _vec3(p0, "p0")
    b = _vec3(p1, "p1")
    if a == b:
        raise GeometryError("capsule endpoints must be distinct")
    return Capsule(a, b, _scalar(radius, "radius", positive=True))


def slab(point, normal, half_thickness) -> Slab:
    return Slab(
        _vec3(point, "point"),
        _unit(normal, "normal"),
        _scalar(half_thickness, "half_thickness", positive=True),
    )


def halfspace(normal, offset) -> HalfSpace:
    return HalfSpace(_unit(normal, "normal"), _scalar(offset, "offset"))


def convex_polytope(halfspaces: Sequence) -> ConvexPolytope:
    planes = []
    for h in halfspaces:
        if isinstance(h, HalfSpace):
            planes.append(h)
        else:
            try:
                n, d = h
            except (TypeError, ValueError) as exc:
                raise GeometryError(
                    "halfspaces must be HalfSpace or (normal, offset) pairs"
                ) from exc
            planes.append(HalfSpace(_unit(n, "normal"), _scalar(d, "offset")))
    if not planes:
        raise GeometryError("convex polytope needs at least one half-space")
    return ConvexPolytope(tuple(planes))


def thicken_line(p0, p1, delta) -> Capsule:
    """Dilate the segment p0..p1 into a solid of radius delta."""
    return capsule(p0, p1, _scalar(delta, "delta", positive=True))


def thicken_plane(point, normal, delta) -> Slab:
    """Dilate the plane (point, unit normal) into a slab of half-width delta."""
    return slab(point, normal, _scalar(delta, "delta", positive=True))


def union(*parts: Solid) -> Union:
    if len(parts) < 2:
        raise GeometryError("union takes at least two solids")
    _check_solids(parts)
    return Union(tuple(parts))


def intersection(*parts: Solid) -> Intersection:
    if len(parts) < 2:
        raise GeometryError("intersection takes at least two solids")
    _check_solids(parts)
    return Intersection(tuple(parts))


def difference(left: Solid, right: Solid) -> Difference:
    _check_solids((left, right))
    return Difference(left, right)


def complement(part: Solid) -> Complement:
    _check_solids((part,))
    return Complement(part)


def clip(part: Solid, plane) -> Clip:
    _check_solids((part,))
    if not isinstance(plane, HalfSpace):
        n, d = plane
        plane = HalfSpace(_unit(n, "normal"), _scalar(d, "offset"))
    return Clip(part, plane)


def _check_solids(parts):
    for p in parts:
        if not isinstance(p, Solid):
            raise GeometryError(f"expected a Solid, got {type(p).__name__}")


# ---------------------------------------------------------------------------
# evaluation

def signed_value(solid: Solid, point, universe: Universe) -> float:
    """Field value of `solid` at `point`; the point must lie in the universe."""
    p = _vec3(point, "point")
    if not universe.contains(p):
        raise DomainError(f"point {p} lies outside the universe")
    return float(solid.values(np.asarray(p, dtype=float)))


def signed_values(solid: Solid, pts: np.ndarray) -> np.ndarray:
    """Vectorized field evaluation without a domain check (oracle use)."""
    return solid.values(np.asarray(pts, dtype=float))


# ---------------------------------------------------------------------------
# conservative support bounds

def _convex_sublevel_bounds(poly: ConvexPolytope, margin: float) -> Optional[Bounds]:
    """Axis bounds of {p : all plane distances <= margin} via 6 LPs.

    Returns None when the offset polytope is unbounded (or infeasible along
    some axis, which callers treat as unbounded-conservative).
    """
    from scipy.optimize import linprog

    A = np.asarray([h.normal for h in poly.halfspaces], dtype=float)
    b = np.asarray([h.offset + margin for h in poly.halfspaces], dtype=float)
    lo = [0.0] * 3
    hi = [0.0] * 3
    for axis in range(3):
        c = np.zeros(3)
        for sign, out in ((1.0, lo), (-1.0, hi)):
            c[axis] = sign
            res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * 3, method="highs")
            if res.status != 0:
                return None
            out[axis] = sign * res.fun
        c[axis] = 0.0
    return tuple(lo), tuple(hi)


@lru_cache(maxsize=200_000)
def sublevel_bounds(solid: Solid, margin: float) -> Optional[Bounds]:
    """A box guaranteed to contain {p : f(p) <= margin}, or None if unbounded.

    margin 0 gives a conservative support box of the closed solid; margin
    delta gives a box containing the delta-sublevel set, which also contains
    the shell {|f| <= delta}.  Soundness follows by induction: min <= m
    forces some child <= m (hull), max <= m forces every child <= m
    (intersection), and negation yields no bound (None).
    """
    if isinstance(solid, Box):
        return (
            tuple(c - margin for c in solid.min_corner),
            tuple(c + margin for c in solid.max_corner),
        )
    if isinstance(solid, Sphere):
        r = solid.radius + margin
        return (
            tuple(c - r for c in solid.center),
            tuple(c + r for c in solid.center),
        )
    if isinstance(solid, Capsule):
        r = solid.radius + margin
        return (
            tuple(min(a, b) - r for a, b in zip(solid.p0, solid.p1)),
            tuple(max(a, b) + r for a, b in zip(solid.p0, solid.p1)),
        )
    if isinstance(solid, Slab):
        return None
    if isinstance(solid, ConvexPolytope):
        return _convex_sublevel_bounds(solid, float(margin))
    if isinstance(solid, Union):
        los, his = [], []
        for part in solid.parts:
            b = sublevel_bounds(part, margin)
            if b is None:
                return None
            los.append(b[0])
            his.append(b[1])
        return (
            tuple(min(v) for v in zip(*los)),
            tuple(max(v) for v in zip(*his)),
        )
    if isinstance(solid, Intersection):
        lo, hi = None, None
        for part in solid.parts:
            b = sublevel_bounds(part, margin)
            if b is None:
                continue
            lo = b[0] if lo is None else tuple(map(max, lo, b[0]))
            hi = b[1] if hi is None else tuple(map(min, hi, b[1]))
        return None if lo is None else (lo, hi)
    if isinstance(solid, Difference):
        return sublevel_bounds(solid.left, margin)
    if isinstance(solid, Complement):
        return None
    if isinstance(solid, Clip):
        return sublevel_bounds(solid.part, margin)
    raise TypeError(f"unknown solid node {type(solid).__name__}")


def support_bounds(solid: Solid, universe: Universe) -> Bounds:
    """Support box clipped to the universe; may be inverted when empty."""
    u_lo, u_hi = universe.bounds()
    b = sublevel_bounds(solid, 0.0)
    if b is None:
        return u_lo, u_hi
    return tuple(map(max, b[0], u_lo)), tuple(map(min, b[1], u_hi))

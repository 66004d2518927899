"""Scene files: JSON documents carrying a universe and named solids.

A scene is one JSON object:

    {
      "universe": {"min": [0, 0, 0], "max": [100, 100, 100]},
      "objects": [
        {"id": "b1", "classes": ["Building"], "data": {"hasHeight": 12.0},
         "geometry": {"prim": "box", "min": [1, 1, 0], "max": [5, 5, 12]}},
        {"id": "note1", "classes": ["Annotation"]}
      ]
    }

Geometry nodes are CSG trees: each leaf is a primitive and each inner node
a Boolean operation.

    {"prim": "box", "min": [...], "max": [...]}
    {"prim": "sphere", "center": [...], "radius": r}
    {"prim": "capsule", "p0": [...], "p1": [...], "radius": r}
    {"prim": "slab", "point": [...], "normal": [...], "half_thickness": t}
    {"prim": "convex", "planes": [{"normal": [...], "offset": d}, ...]}
    {"op": "union" | "intersection", "args": [node, node, ...]}
    {"op": "difference", "args": [left, right]}
    {"op": "complement", "args": [node]}
    {"op": "clip", "args": [node], "normal": [...], "offset": d}

"geometry" is optional: objects without it are purely symbolic and take no
part in topological computation.  Every solid must be non-empty at the
working resolution and keep its support strictly inside the universe.
Unbounded shapes (slab, convex with an open polytope, complement) are
legal as sub-expressions but must be cut down to a bounded region by an
enclosing intersection or clip before registration.  The support check is
conservative: it uses the analytic support box, so a shape is rejected
unless that box is strictly interior.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import geometry as G
from .geometry import GeometryError, Solid, Universe
from .kb import Individual, KnowledgeBase
from .octree import DEFAULT_MAX_DEPTH, check_epsilon, default_epsilon, is_empty

__all__ = ["SceneError", "SceneObject", "SceneDocument", "load_scene", "loads_scene"]

_ID_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*\Z")
_NAME_RE = re.compile(
    r"[A-Za-z_][A-Za-z0-9_.\-]*(?::[A-Za-z_][A-Za-z0-9_.\-]*)?\Z"
)


class SceneError(ValueError):
    """Malformed or invalid scene document; message carries the JSON path."""


def _fail(path: str, message: str) -> "NoReturn":  # noqa: F821
    raise SceneError(f"{path}: {message}")


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        _fail(path, f"missing required key {key!r}")
    return obj[key]


def _check_keys(obj: dict, allowed: set, path: str) -> None:
    extra = set(obj) - allowed
    if extra:
        _fail(path, f"unknown key(s) {', '.join(sorted(repr(k) for k in extra))}")


def _vec(value, path: str) -> tuple:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 3
        or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in value)
    ):
        _fail(path, f"expected a list of three numbers, got {value!r}")
    return tuple(float(c) for c in value)


def _num(value, path: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        _fail(path, f"expected a number, got {value!r}")
    return float(value)


_PRIM_KEYS = {
    "box": {"prim", "min", "max"},
    "sphere": {"prim", "center", "radius"},
    "capsule": {"prim", "p0", "p1", "radius"},
    "slab": {"prim", "point", "normal", "half_thickness"},
    "convex": {"prim", "planes"},
}
_OPS = {"union", "intersection", "difference", "complement", "clip"}


def _build_geometry(node, path: str) -> Solid:
    if not isinstance(node, dict):
        _fail(path, f"geometry node must be an object, got {type(node).__name__}")
    if ("prim" in node) == ("op" in node):
        _fail(path, "geometry node needs exactly one of 'prim' or 'op'")
    try:
        if "prim" in node:
            return _build_primitive(node, path)
        return _build_operation(node, path)
    except GeometryError as exc:
        _fail(path, str(exc))


def _build_primitive(node: dict, path: str) -> Solid:
    name = node["prim"]
    if name not in _PRIM_KEYS:
        _fail(path, f"unknown primitive {name!r}; expected one of {sorted(_PRIM_KEYS)}")
    _check_keys(node, _PRIM_KEYS[name], path)
    if name == "box":
        return G.box(
            _vec(_require(node, "min", path), path + ".min"),
            _vec(_require(node, "max", path), path + ".max"),
        )
    if name == "sphere":
        return G.sphere(
            _vec(_require(node, "center", path), path + ".center"),
            _num(_require(node, "radius", path), path + ".radius"),
        )
    if name == "capsule":
        return G.capsule(
            _vec(_require(node, "p0", path), path + ".p0"),
            _vec(_require(node, "p1", path), path + ".p1"),
            _num(_require(node, "radius", path), path + ".radius"),
        )
    if name == "slab":
        return G.slab(
            _vec(_require(node, "point", path), path + ".point"),
            _vec(_require(node, "normal", path), path + ".normal"),
            _num(_require(node, "half_thickness", path), path + ".half_thickness"),
        )
    planes = _require(node, "planes", path)
    if not isinstance(planes, list) or not planes:
        _fail(path + ".planes", "expected a non-empty list of planes")
    built = []
    for i, plane in enumerate(planes):
        p_path = f"{path}.planes[{i}]"
        if not isinstance(plane, dict):
            _fail(p_path, "expected an object with 'normal' and 'offset'")
        _check_keys(plane, {"normal", "offset"}, p_path)
        built.append(
            (
                _vec(_require(plane, "normal", p_path), p_path + ".normal"),
                _num(_require(plane, "offset", p_path), p_path + ".offset"),
            )
        )
    return G.convex_polytope(built)


def _build_operation(node: dict, path: str) -> Solid:
    op = node["op"]
    if op not in _OPS:
        _fail(path, f"unknown operation {op!r}; expected one of {sorted(_OPS)}")
    allowed = {"op", "args"} | ({"normal", "offset"} if op == "clip" else set())
    _check_keys(node, allowed, path)
    args = _require(node, "args", path)
    if not isinstance(args, list):
        _fail(path + ".args", "expected a list of geometry nodes")
    parts = [
        _build_geometry(child, f"{path}.args[{i}]") for i, child in enumerate(args)
    ]
    if op in ("union", "intersection"):
        if len(parts) < 2:
            _fail(path, f"{op} takes at least two args, got {len(parts)}")
        return G.union(*parts) if op == "union" else G.intersection(*parts)
    if op == "difference":
        if len(parts) != 2:
            _fail(path, f"difference takes exactly two args, got {len(parts)}")
        return G.difference(parts[0], parts[1])
    if op == "complement":
        if len(parts) != 1:
            _fail(path, f"complement takes exactly one arg, got {len(parts)}")
        return G.complement(parts[0])
    if len(parts) != 1:
        _fail(path, f"clip takes exactly one arg, got {len(parts)}")
    plane = (
        _vec(_require(node, "normal", path), path + ".normal"),
        _num(_require(node, "offset", path), path + ".offset"),
    )
    return G.clip(parts[0], plane)


@dataclass
class SceneObject:
    id: str
    classes: tuple[str, ...] = ()
    data: dict[str, object] = field(default_factory=dict)
    solid: Optional[Solid] = None


@dataclass
class SceneDocument:
    universe: Universe
    objects: list[SceneObject]
    epsilon: float

    def build_kb(self) -> KnowledgeBase:
        """A fresh knowledge base holding the scene's individuals."""
        kb = KnowledgeBase(self.universe)
        for obj in self.objects:
            kb.add_individual(
                Individual(obj.id, set(obj.classes), dict(obj.data), obj.solid)
            )
        return kb


def _parse_object(raw, index: int) -> tuple[str, tuple, dict, Optional[dict]]:
    path = f"objects[{index}]"
    if not isinstance(raw, dict):
        _fail(path, f"expected an object, got {type(raw).__name__}")
    _check_keys(raw, {"id", "classes", "data", "geometry"}, path)
    obj_id = _require(raw, "id", path)
    if not isinstance(obj_id, str) or not _ID_RE.match(obj_id):
        _fail(
            path + ".id",
            f"ids are letters, digits, '_', '.', '-', starting with a letter "
            f"or '_'; got {obj_id!r}",
        )
    classes = raw.get("classes", [])
    if not isinstance(classes, list):
        _fail(path + ".classes", "expected a list of class names")
    for i, cls in enumerate(classes):
        if not isinstance(cls, str) or not _NAME_RE.match(cls):
            _fail(f"{path}.classes[{i}]", f"invalid class name {cls!r}")
    data = raw.get("data", {})
    if not isinstance(data, dict):
        _fail(path + ".data", "expected an object of property values")
    parsed_data: dict[str, object] = {}
    for key, value in data.items():
        if not _NAME_RE.match(key):
            _fail(path + ".data", f"invalid property name {key!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            _fail(
                f"{path}.data.{key}",
                f"data values are numbers or strings, got {value!r}",
            )
        parsed_data[key] = float(value) if isinstance(value, (int, float)) else value
    return obj_id, tuple(classes), parsed_data, raw.get("geometry")


def loads_scene(
    text: str,
    *,
    epsilon: Optional[float] = None,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> SceneDocument:
    """Parse and validate a scene document from JSON text.

    Validation registers each solid only if it is non-empty at the working
    resolution epsilon (default: universe extent / 2^10) and its support
    box is strictly inside the universe.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        _fail("$", "scene document must be a JSON object")
    _check_keys(data, {"universe", "objects"}, "$")
    u_raw = _require(data, "universe", "$")
    if not isinstance(u_raw, dict):
        _fail("universe", "expected an object with 'min' and 'max'")
    _check_keys(u_raw, {"min", "max"}, "universe")
    try:
        universe = Universe(
            _vec(_require(u_raw, "min", "universe"), "universe.min"),
            _vec(_require(u_raw, "max", "universe"), "universe.max"),
        )
    except GeometryError as exc:
        _fail("universe", str(exc))
    eps = default_epsilon(universe) if epsilon is None else epsilon
    try:
        eps = check_epsilon(eps, universe, max_depth)
    except GeometryError as exc:
        _fail("$", str(exc))

    raw_objects = data.get("objects", [])
    if not isinstance(raw_objects, list):
        _fail("objects", "expected a list")
    objects: list[SceneObject] = []
    seen: set[str] = set()
    for index, raw in enumerate(raw_objects):
        obj_id, classes, obj_data, geo_node = _parse_object(raw, index)
        if obj_id in seen:
            _fail(f"objects[{index}].id", f"duplicate id {obj_id!r}")
        seen.add(obj_id)
        solid = None
        if geo_node is not None:
            geo_path = f"objects[{index}].geometry"
            solid = _build_geometry(geo_node, geo_path)
            lo_hi = G.sublevel_bounds(solid, 0.0)
            if lo_hi is None or not universe.strictly_contains_bounds(*lo_hi):
                _fail(
                    geo_path,
                    f"support of {obj_id!r} is not strictly inside the "
                    "universe; shrink it, or bound slab/convex/complement "
                    "shapes with an intersection or clip",
                )
            if is_empty(solid, eps, universe, max_depth=max_depth):
                _fail(
                    geo_path,
                    f"{obj_id!r} is empty at resolution {eps:g}; thinner than "
                    "the working resolution counts as empty",
                )
        objects.append(SceneObject(obj_id, classes, obj_data, solid))
    return SceneDocument(universe, objects, eps)


def load_scene(
    path,
    *,
    epsilon: Optional[float] = None,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> SceneDocument:
    """Read and validate the scene file at `path`."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneError(f"cannot read scene file {path}: {exc}") from None
    return loads_scene(text, epsilon=epsilon, max_depth=max_depth)

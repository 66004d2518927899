"""Qualitative topological relations between two solids.

The relation of a pair (A, B) is read off a four-bit mask of region
non-emptiness tests: interior(A) with interior(B), interior(A) with
exterior(B), exterior(A) with interior(B), and exterior(A) with
exterior(B).  This is the interior/exterior reduction of the classic
9-intersection scheme: with both operands bounded, regular, and strictly
inside the universe, the boundary rows add nothing to the five base
relations, and only five of the sixteen bit patterns can occur:

    (ii, ie, ei, ee)
    (0, 1, 1, 1)  disjoint
    (1, 1, 0, 1)  contains
    (1, 0, 1, 1)  inside
    (1, 0, 0, 1)  equals
    (1, 1, 1, 1)  overlaps

Boundary contact is finer than the mask can see; the optional refinement
step tests whether the delta-shells of the two boundaries share volume and
sharpens disjoint to meet, contains to covers, and inside to coveredBy.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

from .geometry import DomainError, GeometryError, Solid, Universe, support_bounds
from .octree import (
    DEFAULT_MAX_DEPTH,
    MODE_SINGLE,
    default_delta,
    mask_bits,
    pair_nonempty,
    shell_contact,
)

__all__ = [
    "DegenerateOperandError",
    "FourIMask",
    "TopoRelation",
    "UnclassifiableMaskError",
    "classify",
    "four_im_mask",
    "relate",
]


class DegenerateOperandError(GeometryError):
    """A relation operand is empty at the working resolution."""


class UnclassifiableMaskError(GeometryError):
    """The four-bit mask matches none of the five base relations."""


class TopoRelation(enum.Enum):
    DISJOINT = "disjoint"
    MEET = "meet"
    OVERLAPS = "overlaps"
    EQUALS = "equals"
    CONTAINS = "contains"
    INSIDE = "inside"
    COVERS = "covers"
    COVERED_BY = "coveredBy"

    def __str__(self) -> str:
        return self.value

    @property
    def inverse(self) -> "TopoRelation":
        return _INVERSE[self]

    @classmethod
    def from_name(cls, name: str) -> "TopoRelation":
        for rel in cls:
            if rel.value == name:
                return rel
        raise ValueError(f"unknown relation name {name!r}")


_INVERSE = {
    TopoRelation.DISJOINT: TopoRelation.DISJOINT,
    TopoRelation.MEET: TopoRelation.MEET,
    TopoRelation.OVERLAPS: TopoRelation.OVERLAPS,
    TopoRelation.EQUALS: TopoRelation.EQUALS,
    TopoRelation.CONTAINS: TopoRelation.INSIDE,
    TopoRelation.INSIDE: TopoRelation.CONTAINS,
    TopoRelation.COVERS: TopoRelation.COVERED_BY,
    TopoRelation.COVERED_BY: TopoRelation.COVERS,
}

# Relations whose shell contact sharpens to a finer label.
_REFINEMENT = {
    TopoRelation.DISJOINT: TopoRelation.MEET,
    TopoRelation.CONTAINS: TopoRelation.COVERS,
    TopoRelation.INSIDE: TopoRelation.COVERED_BY,
}


@dataclass(frozen=True)
class FourIMask:
    """Non-emptiness bits of the four interior/exterior region tests."""

    ii: bool  # interior(A) n interior(B)
    ie: bool  # interior(A) n exterior(B)
    ei: bool  # exterior(A) n interior(B)
    ee: bool  # exterior(A) n exterior(B)

    def bits(self) -> tuple[int, int, int, int]:
        return (int(self.ii), int(self.ie), int(self.ei), int(self.ee))

    def __str__(self) -> str:
        return "({}, {}; {}, {})".format(*self.bits())


_CLASSIFICATION = {
    (0, 1, 1, 1): TopoRelation.DISJOINT,
    (1, 1, 0, 1): TopoRelation.CONTAINS,
    (1, 0, 1, 1): TopoRelation.INSIDE,
    (1, 0, 0, 1): TopoRelation.EQUALS,
    (1, 1, 1, 1): TopoRelation.OVERLAPS,
}


# Cached per operand: relation sweeps re-check the same solids constantly.
# Returns (error_kind, message) or None when the operand is valid.
@lru_cache(maxsize=65536)
def _operand_problem(solid: Solid, epsilon: float, universe: Universe,
                     max_depth: int):
    lo, hi = support_bounds(solid, universe)
    if not universe.strictly_contains_bounds(lo, hi):
        return (
            DomainError,
            f"is not strictly inside the universe (support {lo} .. {hi})",
        )
    if not pair_nonempty(solid, None, MODE_SINGLE, epsilon, universe,
                         max_depth=max_depth):
        return (
            DegenerateOperandError,
            f"is empty at resolution epsilon={epsilon:g}",
        )
    return None


def _check_operand(solid: Solid, label: str, epsilon: float, universe: Universe,
                   max_depth: int) -> None:
    problem = _operand_problem(solid, epsilon, universe, max_depth)
    if problem is not None:
        kind, message = problem
        raise kind(f"operand {label} {message}")


def four_im_mask(
    a: Solid,
    b: Solid,
    epsilon: float,
    universe: Universe,
    *,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> FourIMask:
    """Compute the four-bit intersection mask of two solids.

    Both operands must be non-empty at epsilon and strictly inside the
    universe; the exterior tests are taken relative to the universe box.
    """
    _check_operand(a, "A", epsilon, universe, max_depth)
    _check_operand(b, "B", epsilon, universe, max_depth)
    bits = mask_bits(a, b, epsilon, universe, max_depth)
    return FourIMask(
        ii=bool(bits & 1),
        ie=bool(bits & 2),
        ei=bool(bits & 4),
        ee=bool(bits & 8),
    )


def classify(mask: FourIMask) -> TopoRelation:
    """Map a mask to its base relation; unknown patterns raise."""
    try:
        return _CLASSIFICATION[mask.bits()]
    except KeyError:
        raise UnclassifiableMaskError(
            f"mask {mask} (ii={mask.bits()[0]}, ie={mask.bits()[1]}, "
            f"ei={mask.bits()[2]}, ee={mask.bits()[3]}) matches no relation; "
            "operands may violate the boundedness or regularity assumptions"
        ) from None


def relate(
    a: Solid,
    b: Solid,
    epsilon: float,
    universe: Universe,
    *,
    refine: bool = False,
    delta: float | None = None,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> TopoRelation:
    """Base relation of (A, B), optionally sharpened by boundary contact.

    With refine=True, pairs whose base relation admits a contact variant
    (disjoint, contains, inside) additionally run the delta-shell overlap
    test and upgrade to meet, covers, or coveredBy when it fires.
    """
    rel = classify(four_im_mask(a, b, epsilon, universe, max_depth=max_depth))
    if refine and rel in _REFINEMENT:
        d = default_delta(universe) if delta is None else float(delta)
        if shell_contact(a, b, d, epsilon, universe, max_depth=max_depth):
            rel = _REFINEMENT[rel]
    return rel

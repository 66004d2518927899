"""Conservative emptiness and contact decisions via adaptive subdivision.

Cells are octree cells of the universe box.  A cell is certified FULL_IN
when the center value v satisfies v < -R (R = half-diagonal), FULL_OUT when
v > R, and is MIXED otherwise; the Lipschitz bound of the fields makes both
certificates sound.  A region is reported empty when no cell can be
certified FULL_IN before subdivision bottoms out at edge length < epsilon
(or the depth cap).  Regions of measure zero, such as a shared face, are
therefore empty: emptiness here means "no interior ball at the working
resolution", which is the regularized reading all relation tests use.

For speed the search does not start at the universe cell: it starts at the
few universe-aligned cells covering a conservative bounding box of the
queried region.  Ancestors of those cells can never be FULL_IN without a
descendant also being FULL_IN (R exactly halves per level), and pruned
cells cannot meet the region, so the answer is identical to the search
from the universe cell.
"""

from __future__ import annotations

import enum
import math
from functools import lru_cache

import numpy as np

from . import _kernels
from ._kernels import (
    MODE_EE,
    MODE_EI,
    MODE_II,
    MODE_IE,
    MODE_SHELL,
    MODE_SINGLE,
)
from .geometry import (
    GeometryError,
    Solid,
    Universe,
    sublevel_bounds,
)

DEFAULT_MAX_DEPTH = 12

__all__ = [
    "CellClass",
    "classify_cell",
    "default_delta",
    "default_epsilon",
    "is_empty",
    "pair_nonempty",
    "shell_contact",
    "DEFAULT_MAX_DEPTH",
]


class CellClass(enum.Enum):
    FULL_IN = enum.auto()
    FULL_OUT = enum.auto()
    MIXED = enum.auto()


def default_epsilon(universe: Universe) -> float:
    """Default resolution floor: universe extent / 2**10."""
    return universe.extent / 2**10


def default_delta(universe: Universe) -> float:
    """Default shell half-width for contact refinement: 1e-3 x extent."""
    return 1e-3 * universe.extent


@lru_cache(maxsize=1024)
def check_epsilon(epsilon: float, universe: Universe, max_depth: int) -> float:
    eps = float(epsilon)
    if not (eps > 0.0) or not math.isfinite(eps):
        raise GeometryError(f"epsilon must be a positive number, got {epsilon!r}")
    floor = universe.extent / 2**max_depth
    if eps < floor:
        raise GeometryError(
            f"epsilon {eps:g} is below the resolution floor extent/2^{max_depth} "
            f"= {floor:g}"
        )
    return eps


def classify_cell(solid: Solid, cell_min, cell_max) -> CellClass:
    """Conservative classification of one axis-aligned cell."""
    lo = np.asarray(cell_min, dtype=float)
    hi = np.asarray(cell_max, dtype=float)
    if lo.shape != (3,) or hi.shape != (3,) or np.any(hi <= lo):
        raise GeometryError("cell must be a non-degenerate axis box")
    half = 0.5 * (hi - lo)
    center = lo + half
    radius = float(np.sqrt(np.sum(half * half)))
    value = float(solid.values(center))
    if value < -radius:
        return CellClass.FULL_IN
    if value > radius:
        return CellClass.FULL_OUT
    return CellClass.MIXED


def _region_bounds(a: Solid, b: Solid | None, mode: int, delta: float, universe: Universe):
    """Conservative bounding box of the region each mode tests."""
    u = universe.bounds()

    if mode in (MODE_SINGLE, MODE_IE):
        return sublevel_bounds(a, 0.0) or u
    if mode == MODE_EI:
        return sublevel_bounds(b, 0.0) or u
    if mode == MODE_II:
        la, ha = sublevel_bounds(a, 0.0) or u
        lb, hb = sublevel_bounds(b, 0.0) or u
        return tuple(map(max, la, lb)), tuple(map(min, ha, hb))
    if mode == MODE_SHELL:
        la, ha = sublevel_bounds(a, delta) or u
        lb, hb = sublevel_bounds(b, delta) or u
        return tuple(map(max, la, lb)), tuple(map(min, ha, hb))
    return u  # MODE_EE: both exteriors reach the universe boundary


def _search(prog_a, prog_b, mode, delta, region, universe, eps, max_depth):
    """True iff the region's field has a certified interior cell."""
    stack = np.empty(max(prog_a.stack_need, prog_b.stack_need), dtype=np.float64)
    (lx, ly, lz), (hx, hy, hz) = region
    (ulx, uly, ulz), (uhx, uhy, uhz) = universe.bounds()
    return bool(
        _kernels.region_search(
            prog_a.ops,
            prog_a.params,
            prog_b.ops,
            prog_b.params,
            mode,
            delta,
            lx,
            ly,
            lz,
            hx,
            hy,
            hz,
            ulx,
            uly,
            ulz,
            uhx,
            uhy,
            uhz,
            eps,
            max_depth,
            stack,
        )
    )


def mask_bits(a: Solid, b: Solid, epsilon: float, universe: Universe,
              max_depth: int = DEFAULT_MAX_DEPTH) -> int:
    """The four region-emptiness bits of a pair, packed ii|ie<<1|ei<<2|ee<<3.

    One fused kernel call; operand validity is the caller's business.
    """
    eps = check_epsilon(epsilon, universe, max_depth)
    u = universe.bounds()
    la, ha = sublevel_bounds(a, 0.0) or u
    lb, hb = sublevel_bounds(b, 0.0) or u
    prog_a = a.program
    prog_b = b.program
    stack = np.empty(max(prog_a.stack_need, prog_b.stack_need), dtype=np.float64)
    return int(
        _kernels.mask_search(
            prog_a.ops,
            prog_a.params,
            prog_b.ops,
            prog_b.params,
            *la,
            *ha,
            *lb,
            *hb,
            *u[0],
            *u[1],
            eps,
            max_depth,
            stack,
        )
    )


def pair_nonempty(
    a: Solid,
    b: Solid | None,
    mode: int,
    epsilon: float,
    universe: Universe,
    *,
    delta: float = 0.0,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> bool:
    """Decide non-emptiness of one intersection region of two solids.

    mode selects the region: interior/interior, interior/exterior (and the
    mirror), exterior/exterior, the single solid itself, or the delta-shell
    overlap used by contact refinement.
    """
    eps = check_epsilon(epsilon, universe, max_depth)
    region = _region_bounds(a, b, mode, delta, universe)
    prog_a = a.program
    prog_b = b.program if b is not None else prog_a
    return _search(prog_a, prog_b, mode, delta, region, universe, eps, max_depth)


def is_empty(
    solid: Solid,
    epsilon: float,
    universe: Universe,
    *,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> bool:
    """True when the solid has no certifiable interior at resolution epsilon."""
    return not pair_nonempty(
        solid, None, MODE_SINGLE, epsilon, universe, max_depth=max_depth
    )


def shell_contact(
    a: Solid,
    b: Solid,
    delta: float,
    epsilon: float,
    universe: Universe,
    *,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> bool:
    """True when the delta-shells of the two boundaries share interior volume.

    The tested field is max(|f_a| - delta, |f_b| - delta): negative exactly
    where both fields are within delta of zero.
    """
    d = float(delta)
    if not (d > 0.0) or not math.isfinite(d):
        raise GeometryError(f"delta must be a positive number, got {delta!r}")
    return pair_nonempty(
        a, b, MODE_SHELL, epsilon, universe, delta=d, max_depth=max_depth
    )

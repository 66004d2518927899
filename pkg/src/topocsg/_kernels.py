"""Scalar field interpreter and adaptive interior-cell search.

These are the hot loops behind emptiness decisions.  They are written as
plain scalar Python and compiled with numba when it is importable; without
numba the interpreted versions run as-is.  Both paths execute exactly the
same source, so they cannot diverge.

Field programs are postfix opcode/parameter tables produced by
`geometry.Solid.program`.  The search walks an octree depth-first over a
given root cell, certifying cells fully-inside (center value < -R, with R
the cell half-diagonal) or fully-outside (> R), and subdividing the rest
while the cell edge is at least `eps` and the depth budget allows.  The
Lipschitz bound of the fields makes both certificates sound.
"""

from __future__ import annotations

import math

import numpy as np

OP_BOX = 0
OP_SPHERE = 1
OP_CAPSULE = 2
OP_SLAB = 3
OP_HALF = 4
OP_MIN = 5
OP_MAX = 6
OP_NEG = 7

MODE_SINGLE = 0
MODE_II = 1
MODE_IE = 2
MODE_EI = 3
MODE_EE = 4
MODE_SHELL = 5


def eval_field(ops, params, x, y, z, stack):
    """Run one postfix program at (x, y, z); returns the field value."""
    sp = 0
    for k in range(ops.shape[0]):
        op = ops[k]
        if op == OP_BOX:
            cx = 0.5 * (params[k, 0] + params[k, 3])
            cy = 0.5 * (params[k, 1] + params[k, 4])
            cz = 0.5 * (params[k, 2] + params[k, 5])
            hx = 0.5 * (params[k, 3] - params[k, 0])
            hy = 0.5 * (params[k, 4] - params[k, 1])
            hz = 0.5 * (params[k, 5] - params[k, 2])
            qx = abs(x - cx) - hx
            qy = abs(y - cy) - hy
            qz = abs(z - cz) - hz
            ox = max(qx, 0.0)
            oy = max(qy, 0.0)
            oz = max(qz, 0.0)
            outside = math.sqrt(ox * ox + oy * oy + oz * oz)
            inside = min(max(qx, max(qy, qz)), 0.0)
            stack[sp] = outside + inside
            sp += 1
        elif op == OP_SPHERE:
            dx = x - params[k, 0]
            dy = y - params[k, 1]
            dz = z - params[k, 2]
            stack[sp] = math.sqrt(dx * dx + dy * dy + dz * dz) - params[k, 3]
            sp += 1
        elif op == OP_CAPSULE:
            ax = params[k, 0]
            ay = params[k, 1]
            az = params[k, 2]
            bx = params[k, 3] - ax
            by = params[k, 4] - ay
            bz = params[k, 5] - az
            px = x - ax
            py = y - ay
            pz = z - az
            t = (px * bx + py * by + pz * bz) / (bx * bx + by * by + bz * bz)
            if t < 0.0:
                t = 0.0
            elif t > 1.0:
                t = 1.0
            dx = px - t * bx
            dy = py - t * by
            dz = pz - t * bz
            stack[sp] = math.sqrt(dx * dx + dy * dy + dz * dz) - params[k, 6]
            sp += 1
        elif op == OP_SLAB:
            d = x * params[k, 0] + y * params[k, 1] + z * params[k, 2] - params[k, 3]
            stack[sp] = abs(d) - params[k, 4]
            sp += 1
        elif op == OP_HALF:
            stack[sp] = (
                x * params[k, 0] + y * params[k, 1] + z * params[k, 2] - params[k, 3]
            )
            sp += 1
        elif op == OP_MIN:
            sp -= 1
            stack[sp - 1] = min(stack[sp - 1], stack[sp])
        elif op == OP_MAX:
            sp -= 1
            stack[sp - 1] = max(stack[sp - 1], stack[sp])
        else:  # OP_NEG
            stack[sp - 1] = -stack[sp - 1]
    return stack[0]


def pair_value(ops_a, params_a, ops_b, params_b, mode, delta, x, y, z, stack):
    """Combined field of two programs under one intersection mode."""
    fa = eval_field(ops_a, params_a, x, y, z, stack)
    if mode == MODE_SINGLE:
        return fa
    fb = eval_field(ops_b, params_b, x, y, z, stack)
    if mode == MODE_II:
        return max(fa, fb)
    if mode == MODE_IE:
        return max(fa, -fb)
    if mode == MODE_EI:
        return max(fb, -fa)
    if mode == MODE_EE:
        return max(-fa, -fb)
    return max(abs(fa) - delta, abs(fb) - delta)  # MODE_SHELL


def interior_cell_search(
    ops_a,
    params_a,
    ops_b,
    params_b,
    mode,
    delta,
    rlx,
    rly,
    rlz,
    rhx,
    rhy,
    rhz,
    root_depth,
    eps,
    max_depth,
    stack,
):
    """True iff some octree cell under the root is certified fully interior.

    The root cell is rl../rh..; root_depth is its depth counted from the
    universe cell, so the max_depth budget is honored regardless of where
    the search starts.  Children are visited most-negative-first; the
    ordering only affects how fast a witness is found, never the answer.
    """
    levels = max_depth - root_depth
    if levels < 0:
        return False

    half = np.empty((levels + 1, 3))
    rad = np.empty(levels + 1)
    edge = np.empty(levels + 1)
    hx0 = 0.5 * (rhx - rlx)
    hy0 = 0.5 * (rhy - rly)
    hz0 = 0.5 * (rhz - rlz)
    for d in range(levels + 1):
        s = 0.5**d
        hx = hx0 * s
        hy = hy0 * s
        hz = hz0 * s
        half[d, 0] = hx
        half[d, 1] = hy
        half[d, 2] = hz
        rad[d] = math.sqrt(hx * hx + hy * hy + hz * hz)
        edge[d] = 2.0 * max(hx, max(hy, hz))

    cx = rlx + hx0
    cy = rly + hy0
    cz = rlz + hz0
    v = pair_value(ops_a, params_a, ops_b, params_b, mode, delta, cx, cy, cz, stack)
    if v < -rad[0]:
        return True
    if v > rad[0]:
        return False
    if edge[0] < eps or levels == 0:
        return False

    cap = 8 * (levels + 3)
    cells = np.empty((cap, 3))
    depths = np.empty(cap, dtype=np.int64)
    cells[0, 0] = cx
    cells[0, 1] = cy
    cells[0, 2] = cz
    depths[0] = 0
    top = 1
    kept = np.empty((8, 4))

    while top > 0:
        top -= 1
        px = cells[top, 0]
        py = cells[top, 1]
        pz = cells[top, 2]
        cd = depths[top] + 1
        hx = half[cd, 0]
        hy = half[cd, 1]
        hz = half[cd, 2]
        r = rad[cd]
        e = edge[cd]
        nkeep = 0
        for i in range(8):
            x = px + hx if i & 1 else px - hx
            y = py + hy if i & 2 else py - hy
            z = pz + hz if i & 4 else pz - hz
            v = pair_value(
                ops_a, params_a, ops_b, params_b, mode, delta, x, y, z, stack
            )
            if v < -r:
                return True
            if v > r:
                continue
            if e < eps or cd == levels:
                continue  # unresolved below the size floor; counts as empty
            kept[nkeep, 0] = x
            kept[nkeep, 1] = y
            kept[nkeep, 2] = z
            kept[nkeep, 3] = v
            nkeep += 1
        # insertion-sort kept children by value descending, then push in
        # order: the most negative ends on top of the stack.
        for i in range(1, nkeep):
            jx = kept[i, 0]
            jy = kept[i, 1]
            jz = kept[i, 2]
            jv = kept[i, 3]
            j = i - 1
            while j >= 0 and kept[j, 3] < jv:
                kept[j + 1, 0] = kept[j, 0]
                kept[j + 1, 1] = kept[j, 1]
                kept[j + 1, 2] = kept[j, 2]
                kept[j + 1, 3] = kept[j, 3]
                j -= 1
            kept[j + 1, 0] = jx
            kept[j + 1, 1] = jy
            kept[j + 1, 2] = jz
            kept[j + 1, 3] = jv
        for i in range(nkeep):
            cells[top, 0] = kept[i, 0]
            cells[top, 1] = kept[i, 1]
            cells[top, 2] = kept[i, 2]
            depths[top] = cd
            top += 1
    return False


def region_search(
    ops_a,
    params_a,
    ops_b,
    params_b,
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
):
    """Search within the universe-aligned cells covering box l../h..

    The cover depth is the deepest whose cells still span the box with at
    most two per axis (at most eight roots).  Starting below the universe
    cell cannot change the verdict: a FULL_IN ancestor forces a FULL_IN
    descendant (R halves exactly per level), and skipped cells cannot meet
    the region.
    """
    if lx < ulx:
        lx = ulx
    if ly < uly:
        ly = uly
    if lz < ulz:
        lz = ulz
    if hx > uhx:
        hx = uhx
    if hy > uhy:
        hy = uhy
    if hz > uhz:
        hz = uhz
    sx = hx - lx
    sy = hy - ly
    sz = hz - lz
    if sx <= 0.0 or sy <= 0.0 or sz <= 0.0:
        return False
    usx = uhx - ulx
    usy = uhy - uly
    usz = uhz - ulz
    depth = max_depth
    d = int(math.floor(math.log2(usx / sx)))
    if d < depth:
        depth = d
    d = int(math.floor(math.log2(usy / sy)))
    if d < depth:
        depth = d
    d = int(math.floor(math.log2(usz / sz)))
    if d < depth:
        depth = d
    if depth < 0:
        depth = 0
    n = 1 << depth
    cx = usx / n
    cy = usy / n
    cz = usz / n
    ix0 = min(max(int((lx - ulx) / cx), 0), n - 1)
    iy0 = min(max(int((ly - uly) / cy), 0), n - 1)
    iz0 = min(max(int((lz - ulz) / cz), 0), n - 1)
    ix1 = min(max(int((hx - ulx) / cx), 0), n - 1)
    iy1 = min(max(int((hy - uly) / cy), 0), n - 1)
    iz1 = min(max(int((hz - ulz) / cz), 0), n - 1)
    for ix in range(ix0, ix1 + 1):
        for iy in range(iy0, iy1 + 1):
            for iz in range(iz0, iz1 + 1):
                if interior_cell_search(
                    ops_a,
                    params_a,
                    ops_b,
                    params_b,
                    mode,
                    delta,
                    ulx + ix * cx,
                    uly + iy * cy,
                    ulz + iz * cz,
                    ulx + (ix + 1) * cx,
                    uly + (iy + 1) * cy,
                    ulz + (iz + 1) * cz,
                    depth,
                    eps,
                    max_depth,
                    stack,
                ):
                    return True
    return False


def mask_search(
    ops_a,
    params_a,
    ops_b,
    params_b,
    alx,
    aly,
    alz,
    ahx,
    ahy,
    ahz,
    blx,
    bly,
    blz,
    bhx,
    bhy,
    bhz,
    ulx,
    uly,
    ulz,
    uhx,
    uhy,
    uhz,
    eps,
    max_depth,
    stack,
):
    """All four intersection bits of a pair in one call.

    a../b.. are conservative support boxes of the two solids; the returned
    int packs ii | ie<<1 | ei<<2 | ee<<3.
    """
    bits = 0
    if region_search(
        ops_a, params_a, ops_b, params_b, MODE_II, 0.0,
        max(alx, blx), max(aly, bly), max(alz, blz),
        min(ahx, bhx), min(ahy, bhy), min(ahz, bhz),
        ulx, uly, ulz, uhx, uhy, uhz, eps, max_depth, stack,
    ):
        bits |= 1
    if region_search(
        ops_a, params_a, ops_b, params_b, MODE_IE, 0.0,
        alx, aly, alz, ahx, ahy, ahz,
        ulx, uly, ulz, uhx, uhy, uhz, eps, max_depth, stack,
    ):
        bits |= 2
    if region_search(
        ops_a, params_a, ops_b, params_b, MODE_EI, 0.0,
        blx, bly, blz, bhx, bhy, bhz,
        ulx, uly, ulz, uhx, uhy, uhz, eps, max_depth, stack,
    ):
        bits |= 4
    if region_search(
        ops_a, params_a, ops_b, params_b, MODE_EE, 0.0,
        ulx, uly, ulz, uhx, uhy, uhz,
        ulx, uly, ulz, uhx, uhy, uhz, eps, max_depth, stack,
    ):
        bits |= 8
    return bits


NUMBA = False
try:  # pragma: no cover - exercised implicitly by every geometry test
    from numba import njit

    eval_field = njit(cache=True, nogil=True)(eval_field)
    pair_value = njit(cache=True, nogil=True)(pair_value)
    interior_cell_search = njit(cache=True, nogil=True)(interior_cell_search)
    region_search = njit(cache=True, nogil=True)(region_search)
    mask_search = njit(cache=True, nogil=True)(mask_search)
    NUMBA = True
except ImportError:  # pragma: no cover
    pass

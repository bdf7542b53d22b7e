"""Numeric hot paths.

Every public kernel dispatches to either a numba loop (``_nb_*``) or a numpy
implementation (``_np_*``). The two are written to perform the same IEEE
operations in the same order so that simulations and simplifications are
bit-identical regardless of backend; ``tests/test_kernels.py`` enforces it.
"""
import numpy as np

from meshwalk._jit import USE_NUMBA, njit

# Levels snap to the lower band when within this distance of an integer.
LEVEL_EPS = 1e-9
# Relative determinant threshold under which the quadric optimum is ignored.
DET_EPS = 1e-10


# --------------------------------------------------------------------------
# quadric error metric
# --------------------------------------------------------------------------

def _np_face_quadrics(vertices, faces):
    p0 = vertices[faces[:, 0]]
    p1 = vertices[faces[:, 1]]
    p2 = vertices[faces[:, 2]]
    ux = p1[:, 0] - p0[:, 0]
    uy = p1[:, 1] - p0[:, 1]
    uz = p1[:, 2] - p0[:, 2]
    vx = p2[:, 0] - p0[:, 0]
    vy = p2[:, 1] - p0[:, 1]
    vz = p2[:, 2] - p0[:, 2]
    nx = uy * vz - uz * vy
    ny = uz * vx - ux * vz
    nz = ux * vy - uy * vx
    length = np.sqrt(nx * nx + ny * ny + nz * nz)
    ok = length > 0.0
    safe = np.where(ok, length, 1.0)
    a = np.where(ok, nx / safe, 0.0)
    b = np.where(ok, ny / safe, 0.0)
    c = np.where(ok, nz / safe, 0.0)
    d = -(a * p0[:, 0] + b * p0[:, 1] + c * p0[:, 2])
    return np.stack(
        [a * a, a * b, a * c, a * d, b * b, b * c, b * d, c * c, c * d, d * d], axis=1
    )


@njit(cache=True)
def _nb_face_quadrics(vertices, faces):
    m = faces.shape[0]
    out = np.empty((m, 10))
    for f in range(m):
        i0 = faces[f, 0]
        i1 = faces[f, 1]
        i2 = faces[f, 2]
        ux = vertices[i1, 0] - vertices[i0, 0]
        uy = vertices[i1, 1] - vertices[i0, 1]
        uz = vertices[i1, 2] - vertices[i0, 2]
        vx = vertices[i2, 0] - vertices[i0, 0]
        vy = vertices[i2, 1] - vertices[i0, 1]
        vz = vertices[i2, 2] - vertices[i0, 2]
        nx = uy * vz - uz * vy
        ny = uz * vx - ux * vz
        nz = ux * vy - uy * vx
        length = np.sqrt(nx * nx + ny * ny + nz * nz)
        if length > 0.0:
            a = nx / length
            b = ny / length
            c = nz / length
        else:
            a = 0.0
            b = 0.0
            c = 0.0
        d = -(a * vertices[i0, 0] + b * vertices[i0, 1] + c * vertices[i0, 2])
        out[f, 0] = a * a
        out[f, 1] = a * b
        out[f, 2] = a * c
        out[f, 3] = a * d
        out[f, 4] = b * b
        out[f, 5] = b * c
        out[f, 6] = b * d
        out[f, 7] = c * c
        out[f, 8] = c * d
        out[f, 9] = d * d
    return out


def _np_vertex_quadrics(face_q, faces, n_vertices):
    out = np.zeros((n_vertices, 10))
    # np.add.at is unbuffered and applies updates in index order, which matches
    # the face-major loop of the numba kernel.
    np.add.at(out, faces.ravel(), np.repeat(face_q, 3, axis=0))
    return out


@njit(cache=True)
def _nb_vertex_quadrics(face_q, faces, n_vertices):
    out = np.zeros((n_vertices, 10))
    for f in range(faces.shape[0]):
        for c in range(3):
            v = faces[f, c]
            for j in range(10):
                out[v, j] += face_q[f, j]
    return out


def _np_quadric_eval(q, x, y, z):
    return (
        q[:, 0] * x * x + 2.0 * q[:, 1] * x * y + 2.0 * q[:, 2] * x * z + 2.0 * q[:, 3] * x
        + q[:, 4] * y * y + 2.0 * q[:, 5] * y * z + 2.0 * q[:, 6] * y
        + q[:, 7] * z * z + 2.0 * q[:, 8] * z + q[:, 9]
    )


def _np_edge_costs(quadrics, positions, a, b):
    q = quadrics[a] + quadrics[b]
    pa = positions[a]
    pb = positions[b]
    mx = 0.5 * pa[:, 0] + 0.5 * pb[:, 0]
    my = 0.5 * pa[:, 1] + 0.5 * pb[:, 1]
    mz = 0.5 * pa[:, 2] + 0.5 * pb[:, 2]

    a00, a01, a02 = q[:, 0], q[:, 1], q[:, 2]
    a11, a12, a22 = q[:, 4], q[:, 5], q[:, 7]
    r0, r1, r2 = -q[:, 3], -q[:, 6], -q[:, 8]
    c00 = a11 * a22 - a12 * a12
    c01 = a02 * a12 - a01 * a22
    c02 = a01 * a12 - a02 * a11
    det = a00 * c00 + a01 * c01 + a02 * c02
    scale = np.maximum(np.maximum(np.abs(a00), np.abs(a11)), np.abs(a22))
    solvable = np.abs(det) > DET_EPS * scale * scale * scale
    sdet = np.where(solvable, det, 1.0)
    ox = (r0 * c00 + r1 * c01 + r2 * c02) / sdet
    oy = (a00 * (r1 * a22 - a12 * r2) - a01 * (r0 * a22 - a02 * r2) + a02 * (r0 * a12 - a02 * r1)) / sdet
    oz = (a00 * (a11 * r2 - r1 * a12) - a01 * (a01 * r2 - r0 * a12) + a02 * (a01 * r1 - r0 * a11)) / sdet

    # Candidate order (optimum, a, b, midpoint); strict '<' keeps the first minimum.
    best = np.where(solvable, _np_quadric_eval(q, ox, oy, oz), np.inf)
    tx = np.where(solvable, ox, 0.0)
    ty = np.where(solvable, oy, 0.0)
    tz = np.where(solvable, oz, 0.0)
    for cx, cy, cz in ((pa[:, 0], pa[:, 1], pa[:, 2]), (pb[:, 0], pb[:, 1], pb[:, 2]), (mx, my, mz)):
        cost = _np_quadric_eval(q, cx, cy, cz)
        better = cost < best
        best = np.where(better, cost, best)
        tx = np.where(better, cx, tx)
        ty = np.where(better, cy, ty)
        tz = np.where(better, cz, tz)
    return best, np.stack([tx, ty, tz], axis=1)


@njit(cache=True)
def _nb_quadric_eval(q, x, y, z):
    return (
        q[0] * x * x + 2.0 * q[1] * x * y + 2.0 * q[2] * x * z + 2.0 * q[3] * x
        + q[4] * y * y + 2.0 * q[5] * y * z + 2.0 * q[6] * y
        + q[7] * z * z + 2.0 * q[8] * z + q[9]
    )


@njit(cache=True)
def _nb_edge_costs(quadrics, positions, a, b):
    k = a.shape[0]
    costs = np.empty(k)
    targets = np.empty((k, 3))
    q = np.empty(10)
    for e in range(k):
        ia = a[e]
        ib = b[e]
        for j in range(10):
            q[j] = quadrics[ia, j] + quadrics[ib, j]
        a00 = q[0]
        a01 = q[1]
        a02 = q[2]
        a11 = q[4]
        a12 = q[5]
        a22 = q[7]
        r0 = -q[3]
        r1 = -q[6]
        r2 = -q[8]
        c00 = a11 * a22 - a12 * a12
        c01 = a02 * a12 - a01 * a22
        c02 = a01 * a12 - a02 * a11
        det = a00 * c00 + a01 * c01 + a02 * c02
        scale = max(max(abs(a00), abs(a11)), abs(a22))
        best = np.inf
        tx = 0.0
        ty = 0.0
        tz = 0.0
        if abs(det) > DET_EPS * scale * scale * scale:
            ox = (r0 * c00 + r1 * c01 + r2 * c02) / det
            oy = (a00 * (r1 * a22 - a12 * r2) - a01 * (r0 * a22 - a02 * r2) + a02 * (r0 * a12 - a02 * r1)) / det
            oz = (a00 * (a11 * r2 - r1 * a12) - a01 * (a01 * r2 - r0 * a12) + a02 * (a01 * r1 - r0 * a11)) / det
            best = _nb_quadric_eval(q, ox, oy, oz)
            tx = ox
            ty = oy
            tz = oz
        for cand in range(3):
            if cand == 0:
                cx = positions[ia, 0]
                cy = positions[ia, 1]
                cz = positions[ia, 2]
            elif cand == 1:
                cx = positions[ib, 0]
                cy = positions[ib, 1]
                cz = positions[ib, 2]
            else:
                cx = 0.5 * positions[ia, 0] + 0.5 * positions[ib, 0]
                cy = 0.5 * positions[ia, 1] + 0.5 * positions[ib, 1]
                cz = 0.5 * positions[ia, 2] + 0.5 * positions[ib, 2]
            cost = _nb_quadric_eval(q, cx, cy, cz)
            if cost < best:
                best = cost
                tx = cx
                ty = cy
                tz = cz
        costs[e] = best
        targets[e, 0] = tx
        targets[e, 1] = ty
        targets[e, 2] = tz
    return costs, targets


def _np_fold_over(positions, tris, moved, target):
    p = positions[tris]
    q = np.where(moved[:, :, None], target[None, None, :], p)
    out = []
    for arr in (p, q):
        ux = arr[:, 1, 0] - arr[:, 0, 0]
        uy = arr[:, 1, 1] - arr[:, 0, 1]
        uz = arr[:, 1, 2] - arr[:, 0, 2]
        vx = arr[:, 2, 0] - arr[:, 0, 0]
        vy = arr[:, 2, 1] - arr[:, 0, 1]
        vz = arr[:, 2, 2] - arr[:, 0, 2]
        out.append((uy * vz - uz * vy, uz * vx - ux * vz, ux * vy - uy * vx))
    (ax, ay, az), (bx, by, bz) = out
    return bool(np.any(ax * bx + ay * by + az * bz <= 0.0))


@njit(cache=True)
def _nb_fold_over(positions, tris, moved, target):
    for f in range(tris.shape[0]):
        px = np.empty(3)
        py = np.empty(3)
        pz = np.empty(3)
        qx = np.empty(3)
        qy = np.empty(3)
        qz = np.empty(3)
        for c in range(3):
            v = tris[f, c]
            px[c] = positions[v, 0]
            py[c] = positions[v, 1]
            pz[c] = positions[v, 2]
            if moved[f, c]:
                qx[c] = target[0]
                qy[c] = target[1]
                qz[c] = target[2]
            else:
                qx[c] = px[c]
                qy[c] = py[c]
                qz[c] = pz[c]
        ux = px[1] - px[0]
        uy = py[1] - py[0]
        uz = pz[1] - pz[0]
        vx = px[2] - px[0]
        vy = py[2] - py[0]
        vz = pz[2] - pz[0]
        ax = uy * vz - uz * vy
        ay = uz * vx - ux * vz
        az = ux * vy - uy * vx
        ux = qx[1] - qx[0]
        uy = qy[1] - qy[0]
        uz = qz[1] - qz[0]
        vx = qx[2] - qx[0]
        vy = qy[2] - qy[0]
        vz = qz[2] - qz[0]
        bx = uy * vz - uz * vy
        by = uz * vx - ux * vz
        bz = ux * vy - uy * vx
        if ax * bx + ay * by + az * bz <= 0.0:
            return True
    return False


# --------------------------------------------------------------------------
# area-of-interest visibility
# --------------------------------------------------------------------------

def _np_visibility(viewer_pos, viewer_scope, obj_pos, obj_scope, caps):
    dx = obj_pos[None, :, 0] - viewer_pos[:, None, 0]
    dy = obj_pos[None, :, 1] - viewer_pos[:, None, 1]
    dz = obj_pos[None, :, 2] - viewer_pos[:, None, 2]
    dist = np.sqrt(dx * dx + dy * dy + dz * dz)
    vs = viewer_scope[:, None]
    os_ = obj_scope[None, :]
    visible = dist <= vs + os_
    d_in = np.maximum(dist - os_, 0.0)
    raw = np.ceil(10.0 * (1.0 - d_in / vs) - LEVEL_EPS)
    raw = np.minimum(np.maximum(raw, 1.0), 10.0)
    level = np.minimum(raw.astype(np.int64), caps[:, None])
    level = np.where(visible, level, 0)
    return dist, level


@njit(cache=True)
def _nb_visibility(viewer_pos, viewer_scope, obj_pos, obj_scope, caps):
    c = viewer_pos.shape[0]
    o = obj_pos.shape[0]
    dist = np.empty((c, o))
    level = np.zeros((c, o), dtype=np.int64)
    for i in range(c):
        vs = viewer_scope[i]
        for j in range(o):
            dx = obj_pos[j, 0] - viewer_pos[i, 0]
            dy = obj_pos[j, 1] - viewer_pos[i, 1]
            dz = obj_pos[j, 2] - viewer_pos[i, 2]
            d = np.sqrt(dx * dx + dy * dy + dz * dz)
            dist[i, j] = d
            if d <= vs + obj_scope[j]:
                d_in = max(d - obj_scope[j], 0.0)
                raw = np.ceil(10.0 * (1.0 - d_in / vs) - LEVEL_EPS)
                raw = min(max(raw, 1.0), 10.0)
                lv = int(raw)
                if lv > caps[i]:
                    lv = caps[i]
                level[i, j] = lv
    return dist, level


# --------------------------------------------------------------------------
# busy-interval binning
# --------------------------------------------------------------------------

def _np_bin_overlap(starts, ends, width, n_bins):
    out = np.zeros(n_bins)
    if starts.size == 0:
        return out
    horizon = width * n_bins
    s = np.minimum(starts, horizon)
    e = np.minimum(ends, horizon)
    keep = e > s
    s = s[keep]
    e = e[keep]
    if s.size == 0:
        return out
    first = np.minimum(np.floor(s / width).astype(np.int64), n_bins - 1)
    last = np.minimum(np.floor(e / width).astype(np.int64), n_bins - 1)
    counts = last - first + 1
    rep = np.repeat(np.arange(s.size), counts)
    offs = np.arange(rep.size) - np.repeat(np.cumsum(counts) - counts, counts)
    k = first[rep] + offs
    lo = np.maximum(s[rep], k * width)
    hi = np.minimum(e[rep], (k + 1) * width)
    np.add.at(out, k, np.maximum(hi - lo, 0.0))
    return out


@njit(cache=True)
def _nb_bin_overlap(starts, ends, width, n_bins):
    out = np.zeros(n_bins)
    horizon = width * n_bins
    for i in range(starts.shape[0]):
        s = min(starts[i], horizon)
        e = min(ends[i], horizon)
        if not e > s:
            continue
        first = min(int(np.floor(s / width)), n_bins - 1)
        last = min(int(np.floor(e / width)), n_bins - 1)
        for k in range(first, last + 1):
            lo = max(s, k * width)
            hi = min(e, (k + 1) * width)
            out[k] += max(hi - lo, 0.0)
    return out


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def face_quadrics(vertices, faces):
    """Plane quadric of every face as 10 upper-triangular coefficients."""
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    faces = np.ascontiguousarray(faces, dtype=np.int64)
    if USE_NUMBA:
        return _nb_face_quadrics(vertices, faces)
    return _np_face_quadrics(vertices, faces)


def vertex_quadrics(face_q, faces, n_vertices):
    """Sum the quadrics of the faces incident to each vertex."""
    faces = np.ascontiguousarray(faces, dtype=np.int64)
    if USE_NUMBA:
        return _nb_vertex_quadrics(face_q, faces, n_vertices)
    return _np_vertex_quadrics(face_q, faces, n_vertices)


def edge_costs(quadrics, positions, a, b):
    """Collapse cost and target position for each edge ``(a[i], b[i])``.

    The target is the quadric minimiser when the 3x3 system is well
    conditioned, otherwise the cheapest of the two endpoints and the midpoint.
    """
    a = np.ascontiguousarray(a, dtype=np.int64)
    b = np.ascontiguousarray(b, dtype=np.int64)
    if USE_NUMBA:
        return _nb_edge_costs(quadrics, positions, a, b)
    return _np_edge_costs(quadrics, positions, a, b)


def fold_over(positions, tris, moved, target):
    """True if moving the flagged corners of ``tris`` to ``target`` flips a face normal."""
    tris = np.ascontiguousarray(tris, dtype=np.int64)
    moved = np.ascontiguousarray(moved, dtype=np.bool_)
    target = np.ascontiguousarray(target, dtype=np.float64)
    if tris.shape[0] == 0:
        return False
    if USE_NUMBA:
        return bool(_nb_fold_over(positions, tris, moved, target))
    return _np_fold_over(positions, tris, moved, target)


def visibility(viewer_pos, viewer_scope, obj_pos, obj_scope, caps):
    """Distances and required levels for every (viewer, object) pair.

    Returns ``(dist, level)`` where ``level`` is 0 for pairs whose scopes do
    not overlap and otherwise the distance-banded level in 1..10 capped per
    viewer by ``caps``.
    """
    args = (
        np.ascontiguousarray(viewer_pos, dtype=np.float64),
        np.ascontiguousarray(viewer_scope, dtype=np.float64),
        np.ascontiguousarray(obj_pos, dtype=np.float64),
        np.ascontiguousarray(obj_scope, dtype=np.float64),
        np.ascontiguousarray(caps, dtype=np.int64),
    )
    if USE_NUMBA:
        return _nb_visibility(*args)
    return _np_visibility(*args)


def bin_overlap(starts, ends, width, n_bins):
    """Total length of ``[starts[i], ends[i])`` falling in each bin of ``width``."""
    starts = np.ascontiguousarray(starts, dtype=np.float64)
    ends = np.ascontiguousarray(ends, dtype=np.float64)
    if USE_NUMBA:
        return _nb_bin_overlap(starts, ends, float(width), int(n_bins))
    return _np_bin_overlap(starts, ends, float(width), int(n_bins))
